#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fsqkd/io.hpp"
#include "fsqkd/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path default_outdir() {
    if (const char* env = std::getenv("FSQKD_OUTDIR")) return env;
    return "fsqkd-out";
}

// --set key.path=value overrides on the config tree
void apply_overrides(json& cfg, const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--set expects key.path=value, got: " + s);
        std::string path = "/" + s.substr(0, eq);
        for (auto& ch : path)
            if (ch == '.') ch = '/';
        const std::string val = s.substr(eq + 1);
        json parsed;
        if (val == "true" || val == "false") {
            parsed = (val == "true");
        } else {
            try {
                parsed = json::parse(val);
            } catch (...) {
                parsed = val;
            }
        }
        cfg[json::json_pointer(path)] = parsed;
    }
}

fsqkd::ExperimentConfig load_config(const std::string& file,
                                    const std::vector<std::string>& sets) {
    json j = file.empty() ? fsqkd::config_to_json(fsqkd::default_config())
                          : fsqkd::read_json(file);
    apply_overrides(j, sets);
    return fsqkd::config_from_json(j);
}

void print_summary(const fsqkd::RunSummary& s) {
    std::cout << "n_z = " << s.totals.n_z
              << "  Q_Z = " << s.counts.qber_z()
              << "  Q_X = " << s.counts.qber_x()
              << "  phi_Z = " << s.budget.phi_z_up
              << "\nl = " << s.totals.l << " bits over " << s.totals.duration_s
              << " s  ->  SKR_f = " << (double)s.totals.l / s.totals.duration_s << " bit/s\n";
    if (s.error_correction_ran)
        std::cout << "error correction: f_EC = " << s.f_ec_measured
                  << (s.verified ? "  (verified)" : "  (VERIFICATION FAILED)") << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and post-processing stack for 3-state 1-decoy efficient "
                 "BB84 over a free-space optical link"};
    app.require_subcommand(1);

    std::string config_file, out, tag_file, pulse_file, axis = "loss";
    std::vector<std::string> sets;
    double from = 20, to = 45;
    int points = 26;
    std::string preset;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_file, "configuration file (JSON)");
        sub->add_option("--set", sets, "override a config key, e.g. --set link.extra_loss_db=14");
        sub->add_option("-o,--out", out, "output directory (default $FSQKD_OUTDIR or ./fsqkd-out)");
    };

    auto* sim = app.add_subcommand("simulate", "run the end-to-end experiment");
    add_common(sim);

    auto* ana = app.add_subcommand("analyze", "re-analyze recorded time tags offline");
    add_common(ana);
    ana->add_option("--tags", tag_file, "time-tag file")->required();
    ana->add_option("--pulses", pulse_file, "pulse-train file")->required();

    auto* swp = app.add_subcommand("sweep", "analytic SKR sweep over one axis");
    add_common(swp);
    swp->add_option("--axis", axis, "loss | qber | block");
    swp->add_option("--from", from, "axis start");
    swp->add_option("--to", to, "axis end");
    swp->add_option("--points", points, "number of points");

    auto* opt = app.add_subcommand("optimize", "search the protocol operating point");
    add_common(opt);
    double opt_loss = 24.0, opt_qber = 0.01;
    double opt_nz = 1e8;
    opt->add_option("--loss-db", opt_loss, "total attenuation, dB");
    opt->add_option("--qber", opt_qber, "intrinsic QBER of the scenario");
    opt->add_option("--n-z", opt_nz, "sifted block target");

    auto* pp = app.add_subcommand("postprocess", "error-correct and compress sifted keys");
    add_common(pp);
    std::string alice_key_file, bob_key_file, counts_file;
    pp->add_option("--alice", alice_key_file, "Alice sifted key file")->required();
    pp->add_option("--bob", bob_key_file, "Bob sifted key file")->required();
    pp->add_option("--counts", counts_file, "DecoyCounts JSON sidecar")->required();

    auto* ci = app.add_subcommand("config-init", "print a config file with every default");
    ci->add_option("--preset", preset, "empty or 'april18'");
    std::string ci_out;
    ci->add_option("-o,--out", ci_out, "write to file instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ci->parsed()) {
            const auto cfg = preset == "april18" ? fsqkd::april18_config() : fsqkd::default_config();
            const json j = fsqkd::config_to_json(cfg);
            if (ci_out.empty()) std::cout << j.dump(2) << "\n";
            else fsqkd::write_json(ci_out, j);
            return 0;
        }

        const fs::path outdir = out.empty() ? default_outdir() : fs::path(out);

        if (sim->parsed()) {
            const auto cfg = load_config(config_file, sets);
            const auto s = fsqkd::run_experiment(cfg, outdir);
            print_summary(s);
            return s.totals.l > 0 ? 0 : 2;
        }
        if (ana->parsed()) {
            const auto cfg = load_config(config_file, sets);
            const auto s = fsqkd::analyze_tags(tag_file, pulse_file, cfg, outdir);
            print_summary(s);
            return s.totals.l > 0 ? 0 : 2;
        }
        if (swp->parsed()) {
            const auto cfg = load_config(config_file, sets);
            const fsqkd::SweepAxis ax = axis == "qber" ? fsqkd::SweepAxis::qber
                                        : axis == "block" ? fsqkd::SweepAxis::block_size
                                                          : fsqkd::SweepAxis::loss_db;
            const auto pts = fsqkd::sweep(cfg, ax, from, to, points);
            const std::string csv = fsqkd::sweep_csv(ax, pts);
            fs::create_directories(outdir);
            std::ofstream os(outdir / "sweep.csv");
            os << csv;
            std::cout << csv;
            return 0;
        }
        if (opt->parsed()) {
            const auto cfg = load_config(config_file, sets);
            fsqkd::OperatingScenario sc;
            sc.base = cfg.channel;
            const double base_db = sc.base.link.fixed_loss_optics_db +
                                   sc.base.link.fixed_loss_analyzer_db -
                                   10.0 * std::log10(sc.base.link.coupling.mean_efficiency);
            sc.base.link.extra_loss_db = std::max(0.0, opt_loss - base_db);
            sc.base.encoder.theta_error = std::acos(1.0 - 2.0 * opt_qber);
            sc.base.encoder.phi_error = 0.0;
            sc.target_n_z = opt_nz;
            sc.f_ec = cfg.f_ec_analytic;
            sc.eps = cfg.epsilons;
            sc.window_s = cfg.channel.detectors.window_s;
            const auto res = fsqkd::optimize_operating_point(sc);
            json j = {
                {"mu1_z", res.params.mu1_z}, {"mu2_z", res.params.mu2_z},
                {"mu1_x", res.params.mu1_x}, {"mu2_x", res.params.mu2_x},
                {"p_z_alice", res.params.p_z_alice}, {"p_mu1", res.params.p_mu1},
                {"skr_f_bps", res.skr_bps}, {"evaluations", res.evaluations},
            };
            fs::create_directories(outdir);
            fsqkd::write_json(outdir / "optimum.json", j);
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        if (pp->parsed()) {
            const auto cfg = load_config(config_file, sets);
            fsqkd::SiftResult sift;
            sift.alice_bits = fsqkd::read_key(alice_key_file);
            sift.bob_bits = fsqkd::read_key(bob_key_file);
            sift.counts = fsqkd::decoy_counts_from_json(fsqkd::read_json(counts_file));
            fsqkd::KeyBudget budget =
                fsqkd::decoy_bounds(sift.counts, cfg.channel.protocol, cfg.epsilons);
            const auto ppres = fsqkd::run_postprocessing(cfg, sift, budget);
            fs::create_directories(outdir);
            fsqkd::write_json(outdir / "key_budget.json", fsqkd::to_json(budget));
            fsqkd::write_key(outdir / "key_corrected.bin", ppres.corrected);
            fsqkd::write_key(outdir / "key_final.bin", ppres.final_key);
            std::cout << "l = " << budget.l << " bits (f_EC = " << ppres.f_ec_measured
                      << (ppres.verified ? ", verified" : ", VERIFICATION FAILED") << ")\n";
            return budget.l > 0 ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
