#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "olive/experiment.hpp"

using olive::experiment::ExperimentConfig;

namespace {

// flags shared by every subcommand; values override the config file
struct CommonArgs {
    std::string config;
    std::string out;
    std::string seeds;
    std::string utils;
    std::string algos;
    std::string preset;
    uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "experiment config JSON");
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--seeds", args.seeds, "comma-separated sweep seeds");
    cmd->add_option("--seed", args.seed, "single sweep seed")->each([&](const std::string&) {
        args.seed_set = true;
    });
    cmd->add_option("--util", args.utils, "comma-separated utilization targets (e.g. 0.6,1.0,1.4)");
    cmd->add_option("--algos", args.algos, "comma-separated algorithms (olive,quickg,fullg,slotoff)");
    cmd->add_option("--preset", args.preset, "topology preset name");
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

ExperimentConfig resolve(const CommonArgs& args) {
    ExperimentConfig cfg;
    if (!args.config.empty()) cfg = olive::experiment::config_from_file(args.config);
    else olive::experiment::apply_env_overrides(cfg);
    if (!args.out.empty()) cfg.out_dir = args.out;
    if (!args.preset.empty()) cfg.topology_preset = args.preset;
    if (args.seed_set) cfg.seeds = {args.seed};
    if (!args.seeds.empty()) {
        cfg.seeds.clear();
        for (const auto& t : split(args.seeds)) cfg.seeds.push_back(std::stoull(t));
    }
    if (!args.utils.empty()) {
        cfg.utilizations.clear();
        for (const auto& t : split(args.utils)) {
            double u = std::stod(t);
            cfg.utilizations.push_back(u > 3.0 ? u / 100.0 : u);  // accept 140 or 1.4
        }
    }
    if (!args.algos.empty()) cfg.algorithms = split(args.algos);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plan-based online virtual network embedding simulator"};
    app.require_subcommand(1);

    CommonArgs a_topo, a_trace, a_plan, a_sim, a_rep, a_pipe;
    CLI::App* c_topo = app.add_subcommand("gen-topology", "build a tiered substrate");
    add_common(c_topo, a_topo);
    CLI::App* c_trace = app.add_subcommand("gen-trace", "draw applications and request traces");
    add_common(c_trace, a_trace);
    CLI::App* c_plan = app.add_subcommand("plan", "aggregate history and solve the embedding plan");
    add_common(c_plan, a_plan);
    CLI::App* c_sim = app.add_subcommand("simulate", "replay traces through the algorithms");
    add_common(c_sim, a_sim);
    CLI::App* c_rep = app.add_subcommand("report", "aggregate results across seeds");
    add_common(c_rep, a_rep);
    CLI::App* c_pipe = app.add_subcommand("pipeline", "run all stages from one config");
    add_common(c_pipe, a_pipe);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_topo->parsed()) return olive::experiment::run_gen_topology(resolve(a_topo));
        if (c_trace->parsed()) return olive::experiment::run_gen_trace(resolve(a_trace));
        if (c_plan->parsed()) return olive::experiment::run_plan(resolve(a_plan));
        if (c_sim->parsed()) return olive::experiment::run_simulate(resolve(a_sim));
        if (c_rep->parsed()) return olive::experiment::run_report(resolve(a_rep));
        if (c_pipe->parsed()) return olive::experiment::run_pipeline(resolve(a_pipe));
    } catch (const olive::SolverError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const olive::MissingArtifactError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const olive::InvariantError& e) {
        std::cerr << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
