#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "chainsim/dynamics.hpp"
#include "chainsim/redfield.hpp"
#include "chainsim/units.hpp"

using namespace chainsim;

namespace {

ChainSpec spec_from_ghz(int n, double heis_ghz, double split_ghz) {
    ChainSpec s;
    s.n_sites = n;
    s.exchange_j = two_pi * heis_ghz / exchange_bandwidth_factor(n);
    s.splitting_b = pi * split_ghz;
    return s;
}

BathSpec bath_rings(double radius_m, double current_a, double t_ghz) {
    BathSpec b;
    b.temperature_ghz = t_ghz;
    b.radius_m = radius_m;
    b.current_a = current_a;
    b.density_kg_m3 = 5000.0;
    b.sound_speed_m_s = 5000.0;
    return b;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace

TEST_CASE("single-ring transition rates at the reference working point") {
    const EigenSystem es = diagonalize(spec_from_ghz(2, 1.0, 1.5));
    const RateTable rt = transition_rates(es, bath_rings(10e-6, 3e-6, 0.3),
                                          CouplingMode::Independent);
    const auto pos = [&](int label) { return es.reference_position[label - 1]; };
    const RMat& g11 = rt.gamma_at(1, 1);

    // Downhill / uphill rates at the three transition frequencies,
    // against independently evaluated references.
    const struct { int hi, lo; double dn, up; } want[] = {
        {2, 1, 4.82222307678e-06, 9.10800290643e-07},  // 0.5 GHz
        {3, 1, 3.37511577415e-05, 2.27413512020e-07},  // 1.5 GHz
        {4, 2, 9.15199849694e-05, 2.19986108690e-08},  // 2.5 GHz
    };
    for (const auto& w : want) {
        INFO("pair " << w.hi << " -> " << w.lo);
        REQUIRE(rel_err(g11(pos(w.lo), pos(w.hi)), w.dn) < 1e-7);
        REQUIRE(rel_err(g11(pos(w.hi), pos(w.lo)), w.up) < 1e-7);
    }
    // Cross-site entries vanish: the rings sit many wavelengths apart.
    REQUIRE(rt.gamma_at(1, 2).cwiseAbs().maxCoeff() == 0.0);
    // Auto mode resolves to the same table here.
    const RateTable rt_auto = transition_rates(es, bath_rings(10e-6, 3e-6, 0.3),
                                               CouplingMode::Auto);
    for (int j = 1; j <= 2; ++j)
        for (int k = 1; k <= 2; ++k)
            REQUIRE((rt_auto.gamma_at(j, k) - rt.gamma_at(j, k)).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(rt.quadrature_fallback);  // the 2.5 GHz point sits past the series radius
}

TEST_CASE("uphill and downhill rates satisfy detailed balance to machine precision") {
    const double t_ghz = 0.3;
    const EigenSystem es = diagonalize(spec_from_ghz(2, 1.0, 1.5));
    const RateTable rt = transition_rates(es, bath_rings(10e-6, 3e-6, t_ghz),
                                          CouplingMode::Independent);
    const RMat& g = rt.gamma_at(1, 1);
    for (int a = 0; a < es.dim; ++a)
        for (int b = 0; b < es.dim; ++b) {
            if (g(a, b) == 0.0) continue;
            const double w = es.energies(b) - es.energies(a);
            if (w <= 0.0) continue;  // orient: b above a
            const double ratio = g(b, a) / g(a, b);  // uphill over downhill
            REQUIRE(std::abs(ratio - std::exp(-thermal_exponent(w, t_ghz))) < 1e-10);
        }
}

TEST_CASE("rates vanish identically at zero transition frequency") {
    // At the crossing the lowest two levels are exactly degenerate.
    const EigenSystem es = diagonalize(spec_from_ghz(2, 1.0, 1.0));
    const RateTable rt = transition_rates(es, bath_rings(10e-6, 3e-6, 0.2),
                                          CouplingMode::Auto);
    const auto pos = [&](int label) { return es.reference_position[label - 1]; };
    const RMat r = relaxation_rates(es, rt);
    REQUIRE(r(pos(1), pos(2)) == 0.0);
    REQUIRE(r(pos(2), pos(1)) == 0.0);
    REQUIRE(r(pos(4), pos(2)) > 0.0);
    REQUIRE(r(pos(2), pos(4)) > 0.0);
    // Columns of the flow matrix sum to zero: probability is conserved.
    for (int a = 0; a < es.dim; ++a) REQUIRE(std::abs(r.col(a).sum()) < 1e-18);
}

TEST_CASE("auto mode refuses the intermediate separation regime") {
    // Tune the splitting so the lowest transition lands at 0.04 GHz, which
    // puts w tau across the 40 um pair separation near 2 - neither limit.
    const EigenSystem es = diagonalize(spec_from_ghz(2, 1.0, 1.04));
    const BathSpec bath = bath_rings(10e-6, 3e-6, 0.3);
    try {
        transition_rates(es, bath, CouplingMode::Auto);
        FAIL("expected the intermediate-regime abort");
    } catch (const IntermediateRegimeError& e) {
        REQUIRE(e.omega_tau > collective_cut);
        REQUIRE(e.omega_tau < independent_cut);
        REQUIRE(std::string(e.what()).find("intermediate") != std::string::npos);
    }
    // Forcing a limit skips the check.
    REQUIRE_NOTHROW(transition_rates(es, bath, CouplingMode::Independent));
    REQUIRE_NOTHROW(transition_rates(es, bath, CouplingMode::Collective));
}

TEST_CASE("collective mode copies the same-site density across pairs") {
    const EigenSystem es = diagonalize(spec_from_ghz(2, 1.0, 1.5));
    const BathSpec bath = bath_rings(10e-9, 0.1e-6, 0.3);
    const RateTable col = transition_rates(es, bath, CouplingMode::Collective);
    REQUIRE((col.gamma_at(1, 2) - col.gamma_at(1, 1)).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((col.gamma_at(2, 1) - col.gamma_at(2, 2)).cwiseAbs().maxCoeff() == 0.0);

    // Lock-step emission doubles the collective relaxation flow.
    const RateTable ind = transition_rates(es, bath, CouplingMode::Independent);
    const auto pos = [&](int label) { return es.reference_position[label - 1]; };
    const RMat rc = relaxation_rates(es, col);
    const RMat ri = relaxation_rates(es, ind);
    REQUIRE(std::abs(rc(pos(1), pos(3)) / ri(pos(1), pos(3)) - 2.0) < 1e-9);
    // The antisymmetric state decouples from the collective bath motion.
    for (int l = 1; l <= 4; ++l) {
        if (l == 2) continue;
        REQUIRE(rc(pos(2), pos(l)) == 0.0);
        REQUIRE(rc(pos(l), pos(2)) == 0.0);
    }
}

TEST_CASE("rotating-wave filter keeps the permanently resonant blocks") {
    const EigenSystem es = diagonalize(spec_from_ghz(2, 1.0, 1.5));
    const SecularFilter sec = secular_filter(es);
    const auto pos = [&](int label) { return es.reference_position[label - 1]; };
    // (1,3) and (3,4) share the frequency 2B at every working point.
    REQUIRE(sec.retained(pos(1), pos(3), pos(3), pos(4)));
    // Rounding of the stored energies leaves an ulp-scale residue, far below
    // the 1e-6 tolerance that actually decides retention.
    REQUIRE(std::abs(sec.mismatch(pos(1), pos(3), pos(3), pos(4))) < 1e-12);
    // Population block is always kept; distinct frequencies are not.
    REQUIRE(sec.retained(pos(1), pos(1), pos(2), pos(2)));
    REQUIRE_FALSE(sec.retained(pos(1), pos(2), pos(3), pos(4)));
}

TEST_CASE("generator population block equals the classical flow oracle") {
    const EigenSystem es = diagonalize(spec_from_ghz(2, 1.0, 1.5));
    const RateTable rt = transition_rates(es, bath_rings(10e-6, 3e-6, 0.3),
                                          CouplingMode::Auto);
    const Generator gen = build_generator(es, rt, secular_filter(es));
    const auto pos = [&](int label) { return es.reference_position[label - 1]; };

    // Brute-force rate matrix assembled from the closed-form interaction
    // matrices (entries +-1/sqrt(2)) and externally checked rates.
    const double gdn[3] = {4.82222307678e-06, 3.37511577415e-05, 9.15199849694e-05};
    const double gup[3] = {9.10800290643e-07, 2.27413512020e-07, 2.19986108690e-08};
    RMat oracle = RMat::Zero(4, 4);
    const auto link = [&](int la, int lb, double dn, double up) {
        // both sites contribute |X|^2 = 1/2; the flow carries a factor 2
        oracle(pos(la), pos(lb)) += 2.0 * dn;
        oracle(pos(lb), pos(la)) += 2.0 * up;
    };
    link(1, 2, gdn[0], gup[0]);
    link(1, 3, gdn[1], gup[1]);
    link(3, 4, gdn[1], gup[1]);
    link(2, 4, gdn[2], gup[2]);
    for (int a = 0; a < 4; ++a) oracle(a, a) = -oracle.col(a).sum() + oracle(a, a);

    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const double got = gen.matrix(pair_index(a, a, 4), pair_index(b, b, 4));
            if (oracle(a, b) == 0.0) {
                REQUIRE(got == 0.0);
            } else {
                REQUIRE(rel_err(got, oracle(a, b)) < 1e-7);
            }
        }

    // And the dedicated accessor agrees with the generator to rounding.
    const RMat r = relaxation_rates(es, rt);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            REQUIRE(std::abs(gen.matrix(pair_index(a, a, 4), pair_index(b, b, 4)) - r(a, b)) <
                    1e-18);
}

TEST_CASE("filtered generator plus dropped oscillating terms restores the full map") {
    const EigenSystem es = diagonalize(spec_from_ghz(2, 1.0, 1.5));
    const RateTable rt = transition_rates(es, bath_rings(10e-6, 3e-6, 0.3),
                                          CouplingMode::Auto);
    const Generator full = build_generator(es, rt, SecularFilter{es.energies, 1e99});
    const Generator filt = build_generator(es, rt, secular_filter(es), true);
    REQUIRE(!filt.dropped.empty());
    RMat sum = filt.matrix;
    for (const auto& term : filt.dropped) {
        REQUIRE(std::abs(term.domega) >= filt.secular_tol);
        sum += term.matrix;
    }
    REQUIRE((sum - full.matrix).cwiseAbs().maxCoeff() < 1e-14 * full.norm_inf());
}

TEST_CASE("zero circulating current gives the zero map") {
    const EigenSystem es = diagonalize(spec_from_ghz(2, 1.0, 1.5));
    const RateTable rt = transition_rates(es, bath_rings(10e-6, 0.0, 0.3),
                                          CouplingMode::Independent);
    const Generator gen = build_generator(es, rt, secular_filter(es));
    REQUIRE(gen.norm_inf() == 0.0);
}

TEST_CASE("decoherence rates: symmetry, flow split, and subspace ordering") {
    const EigenSystem es = diagonalize(spec_from_ghz(2, 1.0, 1.5));
    const RateTable rt = transition_rates(es, bath_rings(10e-6, 3e-6, 0.3),
                                          CouplingMode::Auto);
    const Generator gen = build_generator(es, rt, secular_filter(es));
    const RMat r = relaxation_rates(es, rt);
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) {
            const double gab = decoherence_rate(gen, a, b);
            // The two triangles accumulate the same addends in different
            // orders, so they agree to rounding, not bit for bit.
            REQUIRE(std::abs(gab - decoherence_rate(gen, b, a)) < 1e-12 * gab);
            // Pure relaxation-driven dephasing: half the total escape rates.
            REQUIRE(std::abs(gab - 0.5 * (-r(a, a) - r(b, b))) < 1e-18);
        }

    // Three-site reference point: the low coherence outlives the high one.
    const EigenSystem es3 = diagonalize(spec_from_ghz(3, 1.0, 1.5));
    const RateTable rt3 = transition_rates(es3, bath_rings(10e-6, 3e-6, 0.3),
                                           CouplingMode::Auto);
    const Generator gen3 = build_generator(es3, rt3, secular_filter(es3));
    const auto pos3 = [&](int label) { return es3.reference_position[label - 1]; };
    REQUIRE(decoherence_rate(gen3, pos3(1), pos3(4)) <
            decoherence_rate(gen3, pos3(4), pos3(7)));
}

TEST_CASE("generator annihilates the thermal state") {
    for (double split : {1.5, 0.5}) {
        const EigenSystem es = diagonalize(spec_from_ghz(2, 1.0, split));
        const double t_ghz = split > 1.0 ? 0.3 : 0.1;
        const RateTable rt = transition_rates(es, bath_rings(10e-6, 3e-6, t_ghz),
                                              CouplingMode::Auto);
        const Generator gen = build_generator(es, rt, secular_filter(es));
        const Mat gibbs = gibbs_state(es, t_ghz);
        const double resid = (gen.matrix * vectorize(gibbs).real()).norm();
        INFO("splitting " << split);
        REQUIRE(resid < 1e-10);
    }
}

TEST_CASE("stationary state: thermal endpoint and degenerate-kernel handling") {
    const EigenSystem es = diagonalize(spec_from_ghz(2, 1.0, 1.5));
    {
        const RateTable rt = transition_rates(es, bath_rings(10e-6, 3e-6, 0.3),
                                              CouplingMode::Auto);
        const Generator gen = build_generator(es, rt, secular_filter(es));
        const Mat rho = stationary_state(gen);
        const Mat gibbs = gibbs_state(es, 0.3);
        REQUIRE((rho - gibbs).cwiseAbs().maxCoeff() < 1e-10);
    }
    {
        // Collective coupling isolates the antisymmetric state: two
        // disconnected population islands, so the kernel is degenerate.
        const RateTable rt = transition_rates(es, bath_rings(10e-9, 0.1e-6, 0.3),
                                              CouplingMode::Collective);
        const Generator gen = build_generator(es, rt, secular_filter(es));
        REQUIRE_THROWS_AS(stationary_state(gen), PhysicsError);

        // An initial state resolves it: island probabilities are conserved.
        const auto pos = [&](int label) { return es.reference_position[label - 1]; };
        RVec amps = RVec::Zero(4);
        for (int l = 1; l <= 4; ++l) amps(pos(l)) = 0.5;
        Mat rho0 = (amps * amps.transpose()).cast<cplx>();
        const Mat rho = stationary_state(gen, &rho0);
        REQUIRE(std::abs(rho(pos(2), pos(2)).real() - 0.25) < 1e-9);
        // Remaining 3/4 distributes thermally inside the connected island.
        const double y13 = thermal_exponent(es.energies(pos(3)) - es.energies(pos(1)), 0.3);
        REQUIRE(std::abs(rho(pos(3), pos(3)).real() / rho(pos(1), pos(1)).real() -
                         std::exp(-y13)) < 1e-9);
    }
}

TEST_CASE("resonant coherence survives in the stationary state of the triple chain") {
    const EigenSystem es = diagonalize(spec_from_ghz(3, 1.0, 1.5));
    const RateTable rt = transition_rates(es, bath_rings(10e-9, 0.1e-6, 0.3),
                                          CouplingMode::Collective);
    const Generator gen = build_generator(es, rt, secular_filter(es));
    const auto pos = [&](int label) { return es.reference_position[label - 1]; };
    // omega_25 == omega_36 exactly, so (2,3) and (5,6) form a conserved loop.
    REQUIRE(es.energies(pos(5)) - es.energies(pos(2)) ==
            es.energies(pos(6)) - es.energies(pos(3)));

    RVec amps = RVec::Zero(8);
    amps(pos(5)) = 1.0 / std::sqrt(2.0);
    amps(pos(6)) = 1.0 / std::sqrt(2.0);
    Mat rho0 = (amps * amps.transpose()).cast<cplx>();
    const Mat rho = stationary_state(gen, &rho0);
    REQUIRE(std::abs(rho(pos(2), pos(3))) > 0.1);
}
