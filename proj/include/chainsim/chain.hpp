#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "chainsim/errors.hpp"
#include "chainsim/linalg.hpp"
#include "chainsim/units.hpp"

namespace chainsim {

// Ring of n SQUID qubits, isotropic antiferromagnetic exchange J plus a
// uniform splitting B along the qubits' quantization axis. In the working
// (computational) basis the splitting is diagonal and the exchange is the
// usual XXZ-symmetric flip-flop + Ising form; the bath couples through
// single-site bit flips. Site 1 owns the most significant bit.
struct ChainSpec {
    int n_sites = 2;
    double exchange_j = 0.0;   // rad/ns, >= 0 (antiferromagnetic)
    double splitting_b = 0.0;  // rad/ns, >= 0

    void validate() const {
        if (n_sites < 2 || n_sites > 4)
            throw ConfigError("ChainSpec: n_sites must be 2, 3, or 4");
        if (!(exchange_j >= 0.0))
            throw ConfigError("ChainSpec: exchange coupling must be >= 0");
        if (!(splitting_b >= 0.0))
            throw ConfigError("ChainSpec: splitting must be >= 0");
        if (!std::isfinite(exchange_j) || !std::isfinite(splitting_b))
            throw ConfigError("ChainSpec: couplings must be finite");
    }

    int dim() const { return 1 << n_sites; }
};

// Spread between the largest and smallest exchange eigenvalue l of the
// J-part alone; converts a user-facing "exchange bandwidth" in GHz into J.
inline int exchange_bandwidth_factor(int n_sites) {
    switch (n_sites) {
        case 2: return 8;   // l in {2, -6}
        case 3: return 6;   // l in {3, -3}
        case 4: return 12;  // l in {4, 0, -4, -8}
        default: throw ConfigError("exchange_bandwidth_factor: n_sites must be 2, 3, or 4");
    }
}

inline int magnetization_of_index(int idx, int n_sites) {
    return n_sites - 2 * std::popcount(static_cast<unsigned>(idx));
}

// Exchange part with unit coupling, periodic ring (for n=2 the single bond
// is traversed twice, matching the cyclic sum convention).
inline RMat exchange_part(int n_sites) {
    const int dim = 1 << n_sites;
    RMat h = RMat::Zero(dim, dim);
    for (int a = 0; a < dim; ++a) {
        for (int j = 1; j <= n_sites; ++j) {
            const int jn = j % n_sites + 1;  // periodic neighbour
            const int bit_j = (a >> (n_sites - j)) & 1;
            const int bit_k = (a >> (n_sites - jn)) & 1;
            if (bit_j == bit_k) {
                h(a, a) += 1.0;
            } else {
                h(a, a) -= 1.0;
                const int b = a ^ (1 << (n_sites - j)) ^ (1 << (n_sites - jn));
                h(b, a) += 2.0;
            }
        }
    }
    return h;
}

inline RMat build_hamiltonian(const ChainSpec& spec) {
    spec.validate();
    const int dim = spec.dim();
    RMat h = spec.exchange_j * exchange_part(spec.n_sites);
    for (int a = 0; a < dim; ++a)
        h(a, a) -= spec.splitting_b * magnetization_of_index(a, spec.n_sites);
    return h;
}

// Single-site flip in the computational basis: a permutation matrix.
inline RMat site_flip_operator_comp(int n_sites, int site) {
    if (site < 1 || site > n_sites)
        throw ConfigError("site_flip_operator: site index out of range");
    const int dim = 1 << n_sites;
    RMat x = RMat::Zero(dim, dim);
    const int mask = 1 << (n_sites - site);
    for (int a = 0; a < dim; ++a) x(a ^ mask, a) = 1.0;
    return x;
}

// Closed-form eigenstates for the 2- and 3-site rings, used to pin labels,
// phases, and degenerate-subspace bases to a fixed convention.
struct ReferenceState {
    int label;   // 1-based
    int m;       // magnetization quantum number
    double l;    // exchange quantum number
    RVec vec;    // computational basis
};

inline std::vector<ReferenceState> reference_table(int n_sites) {
    std::vector<ReferenceState> out;
    auto mk = [&](int label, int m, double l, std::initializer_list<std::pair<int, double>> comps) {
        RVec v = RVec::Zero(1 << n_sites);
        for (auto [idx, amp] : comps) v(idx) = amp;
        v.normalize();
        out.push_back({label, m, l, v});
    };
    if (n_sites == 2) {
        mk(1, 2, 2.0, {{0, 1.0}});
        mk(2, 0, -6.0, {{1, 1.0}, {2, -1.0}});
        mk(3, 0, 2.0, {{1, 1.0}, {2, 1.0}});
        mk(4, -2, 2.0, {{3, 1.0}});
    } else if (n_sites == 3) {
        mk(1, 3, 3.0, {{0, 1.0}});
        mk(2, 1, -3.0, {{1, 1.0}, {4, -1.0}});
        mk(3, 1, -3.0, {{1, 1.0}, {4, 1.0}, {2, -2.0}});
        mk(4, 1, 3.0, {{1, 1.0}, {4, 1.0}, {2, 1.0}});
        mk(5, -1, -3.0, {{3, 1.0}, {6, -1.0}});
        mk(6, -1, -3.0, {{3, 1.0}, {6, 1.0}, {5, -2.0}});
        mk(7, -1, 3.0, {{3, 1.0}, {6, 1.0}, {5, 1.0}});
        mk(8, -3, 3.0, {{7, 1.0}});
    }
    return out;
}

struct EigenSystem {
    ChainSpec spec;
    int dim = 0;
    RVec energies;                       // ascending; degenerate clusters snapped to a common value
    RMat vectors;                        // columns, computational basis, real orthonormal
    std::vector<int> m_quantum;          // exact per state (magnetization sectors never mix)
    std::vector<double> l_numbers;       // exchange quantum number <v|H_J|v>
    std::vector<int> reference_index;    // closed-form table label (n=2,3); sorted index + 1 otherwise
    std::vector<int> reference_position; // reference_position[label-1] = sorted index

    double energy_scale() const {
        return std::max(energies.maxCoeff() - energies.minCoeff(), 1e-300);
    }
    double cluster_tol() const { return 1e-9 * energy_scale(); }

    Mat to_eigenbasis(const Mat& comp) const {
        return vectors.transpose() * comp * vectors;
    }
    Mat to_computational(const Mat& eig) const {
        return vectors * eig * vectors.transpose();
    }
};

namespace detail {

struct SectorState {
    double energy;
    int m;
    double l;
    RVec vec;
    int label = 0;  // 0 = unlabeled yet
};

inline std::vector<std::vector<int>> cluster_indices(const RVec& vals, double tol) {
    std::vector<int> order(vals.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals(a) < vals(b); });
    std::vector<std::vector<int>> groups;
    for (int idx : order) {
        if (!groups.empty() && vals(idx) - vals(groups.back().front()) <= tol)
            groups.back().push_back(idx);
        else
            groups.push_back({idx});
    }
    return groups;
}

}  // namespace detail

// Diagonalize sector by sector (the Hamiltonian conserves magnetization),
// so m is exact, cross-sector level crossings cannot mix states, and the
// flip selection rule m -> m +- 2 holds without any numerical cutoff.
// For n = 2, 3 the eigenvectors are snapped to the closed-form table,
// fixing both the basis inside degenerate multiplets and every sign.
inline EigenSystem diagonalize(const ChainSpec& spec) {
    spec.validate();
    const int n = spec.n_sites;
    const int dim = spec.dim();
    const RMat h = build_hamiltonian(spec);
    const RMat hj = exchange_part(n);
    const auto refs = reference_table(n);

    std::vector<detail::SectorState> states;
    states.reserve(dim);

    std::vector<std::vector<int>> sector(n + 1);
    for (int a = 0; a < dim; ++a)
        sector[std::popcount(static_cast<unsigned>(a))].push_back(a);

    double raw_scale = 1e-300;

    for (int p = 0; p <= n; ++p) {
        const auto& idx = sector[p];
        const int sd = static_cast<int>(idx.size());
        const int m = n - 2 * p;
        RMat hs(sd, sd);
        for (int r = 0; r < sd; ++r)
            for (int c = 0; c < sd; ++c) hs(r, c) = h(idx[r], idx[c]);
        Eigen::SelfAdjointEigenSolver<RMat> solver(hs);
        if (solver.info() != Eigen::Success)
            throw PhysicsError("diagonalize: eigensolver failed");
        RVec evals = solver.eigenvalues();
        RMat evecs = solver.eigenvectors();
        raw_scale = std::max(raw_scale, std::abs(evals(0)));
        raw_scale = std::max(raw_scale, std::abs(evals(sd - 1)));

        const double tol = 1e-9 * std::max(1.0, raw_scale);
        for (const auto& group : detail::cluster_indices(evals, tol)) {
            const int g = static_cast<int>(group.size());
            const double e_snap =
                std::accumulate(group.begin(), group.end(), 0.0,
                                [&](double acc, int i) { return acc + evals(i); }) / g;
            // Scatter group columns to full dimension.
            RMat u = RMat::Zero(dim, g);
            for (int c = 0; c < g; ++c)
                for (int r = 0; r < sd; ++r) u(idx[r], c) = evecs(r, group[c]);

            if (!refs.empty()) {
                // Match against the table: the refs with this m whose
                // projection onto the group span is (numerically) complete.
                std::vector<const ReferenceState*> matched;
                for (const auto& ref : refs) {
                    if (ref.m != m) continue;
                    const double proj = (u.transpose() * ref.vec).norm();
                    if (proj > 1.0 - 1e-8) matched.push_back(&ref);
                }
                if (static_cast<int>(matched.size()) != g)
                    throw PhysicsError(
                        "diagonalize: eigenbasis alignment against the closed-form table failed "
                        "(degenerate group does not match the expected multiplet)");
                for (const auto* ref : matched) {
                    const double resid = (u * (u.transpose() * ref->vec) - ref->vec).norm();
                    if (resid > 1e-8)
                        throw PhysicsError("diagonalize: eigenbasis alignment residual too large");
                    states.push_back({e_snap, m, ref->l, ref->vec, ref->label});
                }
            } else {
                // No table (n = 4): make the basis canonical. Split the
                // degenerate group by the exchange part, then fix the
                // remaining freedom by Gram-Schmidt against the
                // computational axes, lowest index first, leading sign +.
                RMat cols = u;
                RVec lvals(g);
                if (g > 1) {
                    RMat hj_sub(g, g);
                    RMat hj_u(dim, g);
                    hj_u = hj * u;
                    hj_sub = u.transpose() * hj_u;
                    Eigen::SelfAdjointEigenSolver<RMat> ls(hj_sub);
                    cols = u * ls.eigenvectors();
                    lvals = ls.eigenvalues();
                    // Canonicalize within each equal-l block.
                    const auto lgroups = detail::cluster_indices(lvals, 1e-7 * std::max(1.0, lvals.cwiseAbs().maxCoeff()));
                    RMat canon = cols;
                    for (const auto& lg : lgroups) {
                        const int gg = static_cast<int>(lg.size());
                        if (gg == 1) continue;
                        RMat sub(dim, gg);
                        for (int c = 0; c < gg; ++c) sub.col(c) = cols.col(lg[c]);
                        RMat out = RMat::Zero(dim, gg);
                        int filled = 0;
                        for (int axis = 0; axis < dim && filled < gg; ++axis) {
                            RVec cand = sub * sub.row(axis).transpose();
                            for (int c = 0; c < filled; ++c)
                                cand -= out.col(c) * out.col(c).dot(cand);
                            if (cand.norm() > 1e-6) {
                                out.col(filled++) = cand.normalized();
                            }
                        }
                        if (filled != gg)
                            throw PhysicsError("diagonalize: canonical basis construction failed");
                        for (int c = 0; c < gg; ++c) cols.col(lg[c]) = out.col(c);
                    }
                } else {
                    lvals(0) = u.col(0).dot(hj * u.col(0));
                }
                for (int c = 0; c < g; ++c) {
                    RVec v = cols.col(c);
                    // Deterministic sign: first component above noise is positive.
                    for (int r = 0; r < dim; ++r) {
                        if (std::abs(v(r)) > 1e-9) {
                            if (v(r) < 0) v = -v;
                            break;
                        }
                    }
                    const double lv = (g > 1) ? lvals(c) : lvals(0);
                    states.push_back({e_snap, m, lv, v, 0});
                }
            }
        }
    }

    // Global ordering: energy ascending; inside a cross-sector degenerate
    // cluster, higher m first, then table label / exchange number.
    std::stable_sort(states.begin(), states.end(), [&](const auto& a, const auto& b) {
        const double tol = 1e-9 * std::max(1.0, raw_scale);
        if (a.energy < b.energy - tol) return true;
        if (b.energy < a.energy - tol) return false;
        if (a.m != b.m) return a.m > b.m;
        if (a.label != b.label) return a.label < b.label;
        return a.l < b.l;
    });

    // Snap residual cross-sector near-ties to a common value so resonance
    // tests see exact equality.
    {
        const double tol = 1e-9 * std::max(1.0, raw_scale);
        int i = 0;
        while (i < dim) {
            int j = i + 1;
            double sum = states[i].energy;
            while (j < dim && states[j].energy - states[i].energy <= tol) sum += states[j++].energy;
            const double snap = sum / (j - i);
            for (int k = i; k < j; ++k) states[k].energy = snap;
            i = j;
        }
    }

    EigenSystem es;
    es.spec = spec;
    es.dim = dim;
    es.energies.resize(dim);
    es.vectors.resize(dim, dim);
    es.m_quantum.resize(dim);
    es.l_numbers.resize(dim);
    es.reference_index.resize(dim);
    es.reference_position.assign(dim, -1);
    for (int i = 0; i < dim; ++i) {
        es.energies(i) = states[i].energy;
        es.vectors.col(i) = states[i].vec;
        es.m_quantum[i] = states[i].m;
        es.l_numbers[i] = states[i].l;
        es.reference_index[i] = states[i].label > 0 ? states[i].label : i + 1;
        es.reference_position[es.reference_index[i] - 1] = i;
    }
    return es;
}

// Flip operators rotated to the energy eigenbasis (real, zero diagonal,
// elements only between sectors with m differing by 2).
inline RMat site_flip_operator(const EigenSystem& es, int site) {
    return es.vectors.transpose() * site_flip_operator_comp(es.spec.n_sites, site) * es.vectors;
}

inline std::vector<RMat> site_flip_operators(const EigenSystem& es) {
    std::vector<RMat> ops;
    ops.reserve(es.spec.n_sites);
    for (int j = 1; j <= es.spec.n_sites; ++j) ops.push_back(site_flip_operator(es, j));
    return ops;
}

inline RMat collective_flip_operator(const EigenSystem& es) {
    RMat jz = RMat::Zero(es.dim, es.dim);
    for (int j = 1; j <= es.spec.n_sites; ++j)
        jz += site_flip_operator_comp(es.spec.n_sites, j);
    return es.vectors.transpose() * jz * es.vectors;
}

// Distinct transition frequencies carried by a set of coupling operators,
// with the participating matrix elements. p is the conjugate (velocity-like)
// part: -i x for an upward transition, +i x downward, 0 on a degenerate pair.
struct FrequencyComponent {
    double omega = 0.0;  // >= 0, common value of E_b - E_a over the entries
    struct Entry {
        int op;    // operator index in the input list
        int a, b;  // sorted eigenindices, E_a <= E_b
        double x;  // matrix element <a|X|b>
        cplx p;
    };
    std::vector<Entry> entries;
};

inline std::vector<FrequencyComponent> frequency_components(const EigenSystem& es,
                                                            const std::vector<RMat>& ops,
                                                            double element_floor = 1e-12) {
    const double tol = es.cluster_tol();
    std::vector<FrequencyComponent> comps;
    for (int a = 0; a < es.dim; ++a) {
        for (int b = a; b < es.dim; ++b) {
            const double w = es.energies(b) - es.energies(a);
            for (int o = 0; o < static_cast<int>(ops.size()); ++o) {
                const double x = ops[o](a, b);
                if (std::abs(x) <= element_floor) continue;
                FrequencyComponent* slot = nullptr;
                for (auto& c : comps)
                    if (std::abs(c.omega - w) <= tol) { slot = &c; break; }
                if (!slot) {
                    comps.push_back({w, {}});
                    slot = &comps.back();
                }
                const cplx p = (w > tol) ? cplx(0.0, -x) : cplx(0.0, 0.0);
                slot->entries.push_back({o, a, b, x, p});
            }
        }
    }
    std::sort(comps.begin(), comps.end(),
              [](const auto& l, const auto& r) { return l.omega < r.omega; });
    return comps;
}

// Undirected graph over eigenstates with edge weight sum_ops X_ab^2 (or any
// caller-supplied symmetric weight matrix), thresholded; plus its connected
// components.
struct Network {
    RMat weight;
    std::vector<std::pair<int, int>> edges;  // a < b
    std::vector<int> component;              // per state, 0-based, ordered by lowest member
    int n_components = 0;
};

inline Network network_from_weights(const RMat& w, double threshold) {
    const int d = static_cast<int>(w.rows());
    Network net;
    net.weight = w;
    std::vector<int> parent(d);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            if (std::abs(w(a, b)) > threshold) {
                net.edges.emplace_back(a, b);
                parent[find(a)] = find(b);
            }
        }
    }
    net.component.assign(d, -1);
    int next = 0;
    for (int a = 0; a < d; ++a) {
        const int r = find(a);
        if (net.component[r] < 0) net.component[r] = next++;
        net.component[a] = net.component[r];
    }
    net.n_components = next;
    return net;
}

inline Network transition_network(const EigenSystem& es, const std::vector<RMat>& ops,
                                  double threshold = 1e-12) {
    RMat w = RMat::Zero(es.dim, es.dim);
    for (const auto& op : ops) w += op.cwiseProduct(op);
    return network_from_weights(w, threshold);
}

}  // namespace chainsim
