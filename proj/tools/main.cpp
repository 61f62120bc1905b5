#include "ghzw/run.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using ghzw::run::RunConfig;
using ghzw::run::RunReport;

struct CliOptions {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    std::optional<std::string> engine, preparation, flag_treatment;
    std::optional<double> p_c, eta, dark, retrieval_efficiency;
    std::optional<double> phi1, phi2, phi3, phi_a2, phi_a3;
    std::optional<double> t0, t1, phase_jitter;
    std::optional<long> shots;
    std::optional<std::uint64_t> seed, attempt_cap;
    std::optional<int> n_max, threads;
    std::optional<bool> compensate;
    std::optional<std::string> protocol; // mermin/timing only
    std::optional<std::string> mermin_a, mermin_b;
};

void add_common_options(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--engine", o.engine, "exact | montecarlo | abstract");
    cmd->add_option("--preparation", o.preparation,
                    "ideal | heralded | product");
    cmd->add_option("--flag-treatment", o.flag_treatment,
                    "trace | erase | abstract");
    cmd->add_option("--shots", o.shots, "Monte-Carlo shots");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--pc", o.p_c, "emission probability per pulse");
    cmd->add_option("--eta", o.eta, "detector loss probability");
    cmd->add_option("--dark", o.dark, "dark-click probability per window");
    cmd->add_option("--retrieval-efficiency", o.retrieval_efficiency,
                    "retrieval efficiency");
    cmd->add_option("--phi1", o.phi1, "channel phase of pair 1");
    cmd->add_option("--phi2", o.phi2, "channel phase of pair 2");
    cmd->add_option("--phi3", o.phi3, "channel phase of pair 3");
    cmd->add_option("--phi-a2", o.phi_a2, "shared-line phase of ensemble 2");
    cmd->add_option("--phi-a3", o.phi_a3, "shared-line phase of ensemble 3");
    cmd->add_option("--compensate", o.compensate,
                    "calibrate station phases against the channel phases");
    cmd->add_option("--phase-jitter", o.phase_jitter,
                    "per-shot uniform phase drift width (radians)");
    cmd->add_option("--nmax", o.n_max, "per-mode occupation cutoff");
    cmd->add_option("--threads", o.threads, "worker threads for sampling");
    cmd->add_option("--t0", o.t0, "pair preparation time (s)");
    cmd->add_option("--t1", o.t1, "shared-line preparation time (s)");
    cmd->add_option("--attempt-cap", o.attempt_cap,
                    "per-shot attempt cap for repeat-until-success");
    cmd->add_option("--out", o.out_path, "output file (default: stdout)");
    cmd->add_option("--format", o.format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
}

RunConfig merge_config(const CliOptions& o, const std::string& forced_protocol,
                       const std::string& default_protocol) {
    RunConfig cfg;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in)
            throw ghzw::ConfigError("cannot open config file '" + o.config_path +
                                    "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        cfg = RunConfig::from_json_text(ss.str());
    }
    if (!forced_protocol.empty()) {
        cfg.protocol = forced_protocol;
    } else if (o.protocol) {
        cfg.protocol = *o.protocol;
    } else if (o.config_path.empty() || cfg.protocol.empty()) {
        cfg.protocol = default_protocol;
    }

    if (o.engine) cfg.engine = *o.engine;
    if (o.preparation) cfg.preparation = *o.preparation;
    if (o.flag_treatment) cfg.flag_treatment = *o.flag_treatment;
    if (o.p_c) cfg.p_c = *o.p_c;
    if (o.eta) cfg.eta = *o.eta;
    if (o.dark) cfg.dark = *o.dark;
    if (o.retrieval_efficiency) cfg.retrieval_efficiency = *o.retrieval_efficiency;
    if (o.phi1) cfg.phi1 = *o.phi1;
    if (o.phi2) cfg.phi2 = *o.phi2;
    if (o.phi3) cfg.phi3 = *o.phi3;
    if (o.phi_a2) cfg.phi_a2 = *o.phi_a2;
    if (o.phi_a3) cfg.phi_a3 = *o.phi_a3;
    if (o.compensate) cfg.compensate = *o.compensate;
    if (o.phase_jitter) cfg.phase_jitter = *o.phase_jitter;
    if (o.n_max) cfg.n_max = *o.n_max;
    if (o.shots) cfg.shots = *o.shots;
    if (o.seed) cfg.seed = *o.seed;
    if (o.t0) cfg.t0 = *o.t0;
    if (o.t1) cfg.t1 = *o.t1;
    if (o.attempt_cap) cfg.attempt_cap = *o.attempt_cap;
    if (o.threads) cfg.threads = *o.threads;
    if (o.mermin_a) cfg.mermin_a = *o.mermin_a;
    if (o.mermin_b) cfg.mermin_b = *o.mermin_b;
    cfg.validate();
    return cfg;
}

int emit(const RunReport& report, const CliOptions& o) {
    const std::string text = o.format == "json" ? ghzw::run::to_json(report)
                                                : ghzw::run::to_csv(report);
    if (o.out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(o.out_path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ghzw::ConfigError("cannot open output file '" + o.out_path +
                                    "'");
        out << text;
        if (!out)
            throw ghzw::NumericalError("failed writing output file");
    }
    for (const auto& note : report.notes)
        std::cerr << "note: " << note << "\n";
    if (report.warned) std::cerr << "warning: see notes above\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heralded GHZ/W entanglement between atomic ensembles: "
                 "exact and Monte-Carlo Bell-test simulator"};
    app.require_subcommand(1);

    CliOptions opts;
    auto* cmd_pair = app.add_subcommand("pair", "herald one entangled pair");
    auto* cmd_ghz = app.add_subcommand("ghz", "four-experiment GHZ battery");
    auto* cmd_w = app.add_subcommand("w", "W-state probability properties");
    auto* cmd_mermin = app.add_subcommand("mermin", "Mermin inequality value");
    auto* cmd_timing =
        app.add_subcommand("timing", "repeat-until-success timing");
    for (auto* cmd : {cmd_pair, cmd_ghz, cmd_w, cmd_mermin, cmd_timing})
        add_common_options(cmd, opts);
    cmd_mermin->add_option("--protocol", opts.protocol, "ghz | w");
    cmd_timing->add_option("--protocol", opts.protocol, "pair | ghz | w");
    cmd_mermin->add_option("--a", opts.mermin_a, "setting a (X|Y|Z)");
    cmd_mermin->add_option("--b", opts.mermin_b, "setting b (X|Y|Z)");

    try {
        app.parse(argc, argv);
        RunReport report;
        if (cmd_pair->parsed()) {
            report = ghzw::run::run_pair(merge_config(opts, "pair", "pair"));
        } else if (cmd_ghz->parsed()) {
            report = ghzw::run::run_ghz(merge_config(opts, "ghz", "ghz"));
        } else if (cmd_w->parsed()) {
            report = ghzw::run::run_w(merge_config(opts, "w", "w"));
        } else if (cmd_mermin->parsed()) {
            report = ghzw::run::run_mermin(merge_config(opts, "", "w"));
        } else {
            report = ghzw::run::run_timing(merge_config(opts, "", "ghz"));
        }
        return emit(report, opts);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ghzw::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ghzw::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
