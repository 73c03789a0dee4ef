// Command-line front end: run one scenario, sweep a parameter axis, or
// print the static rate analysis without time evolution.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chainsim/scenario.hpp"

namespace {

chainsim::ScenarioConfig load_config(const std::string& preset_name,
                                     const std::string& config_path) {
    if (!preset_name.empty() && !config_path.empty())
        throw chainsim::ConfigError("--preset and --config are mutually exclusive");
    if (!preset_name.empty()) return chainsim::preset(preset_name);
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw chainsim::ConfigError("cannot open config file '" + config_path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return chainsim::parse_config(ss.str());
    }
    throw chainsim::ConfigError("need either --preset or --config");
}

struct Overrides {
    double t_max_ns = -1.0;
    double dt_ns = -1.0;
    long long output_stride = -1;
    void apply(chainsim::ScenarioConfig& cfg) const {
        if (t_max_ns > 0.0) cfg.t_max_ns = t_max_ns;
        if (dt_ns >= 0.0) cfg.dt_ns = dt_ns;
        if (output_stride >= 0) cfg.output_stride = output_stride;
        cfg.validate();
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupled-ring qubit chain relaxation simulator"};
    app.require_subcommand(1);

    std::string preset_name, config_path, out_path;
    Overrides ov;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--preset", preset_name,
                        "built-in scenario (fig1 .. fig8)");
        cmd->add_option("--config", config_path, "INI configuration file");
        cmd->add_option("--t-max-ns", ov.t_max_ns, "override evolution time");
        cmd->add_option("--dt-ns", ov.dt_ns, "override integrator step (0 = auto)");
        cmd->add_option("--output-stride", ov.output_stride,
                        "override sample thinning (0 = auto)");
    };

    CLI::App* run = app.add_subcommand("run", "evolve a scenario and write outputs");
    add_common(run);
    run->add_option("--out", out_path, "output directory (default runs/<name>)");

    CLI::App* rates = app.add_subcommand(
        "rates", "static analysis only: spectrum, rates, networks");
    add_common(rates);
    rates->add_option("--out", out_path, "write report to this file instead of stdout");

    std::string axis;
    std::vector<double> values;
    CLI::App* sw = app.add_subcommand("sweep", "re-run a scenario along one parameter axis");
    add_common(sw);
    sw->add_option("--axis", axis, "config field to vary (e.g. splitting_GHz)")->required();
    sw->add_option("--values", values, "comma-separated axis values")
        ->required()
        ->delimiter(',');
    sw->add_option("--out", out_path, "output root directory (default sweeps/<name>)");

    CLI11_PARSE(app, argc, argv);

    try {
        chainsim::ScenarioConfig cfg = load_config(preset_name, config_path);
        ov.apply(cfg);

        if (run->parsed()) {
            chainsim::RunResult res = chainsim::run_scenario(cfg);
            const std::string dir = out_path.empty() ? "runs/" + cfg.name : out_path;
            chainsim::write_outputs(res, dir);
            std::cout << res.report_text;
            std::cout << "\noutputs written to " << dir << "\n";
        } else if (rates->parsed()) {
            chainsim::RunResult res = chainsim::run_scenario(cfg, /*with_dynamics=*/false);
            if (out_path.empty()) {
                std::cout << res.report_text;
            } else {
                std::ofstream f(out_path);
                if (!f) throw chainsim::ConfigError("cannot write '" + out_path + "'");
                f << res.report_text;
            }
        } else if (sw->parsed()) {
            const std::string root = out_path.empty() ? "sweeps/" + cfg.name : out_path;
            chainsim::SweepResult res = chainsim::sweep(cfg, axis, values, root);
            std::cout << res.summary_csv;
            for (const auto& r : res.runs)
                if (!r.ok)
                    std::cerr << "sweep point " << axis << " = " << r.value
                              << " failed: " << r.message << "\n";
            if (res.any_physics_error()) return 2;
            if (!res.all_ok()) return 1;
        }
    } catch (const chainsim::PhysicsError& e) {
        std::cerr << "physics error: " << e.what() << "\n";
        return 2;
    } catch (const chainsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
