// vcut: generate graphs, run the detection pipeline, and sweep round counts.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vcut/error.hpp"
#include "vcut/generators.hpp"
#include "vcut/pipeline.hpp"

namespace {

struct GraphArgs {
    std::string path;
    vcut::gen::FamilySpec spec;
};

void add_graph_flags(CLI::App* cmd, GraphArgs& args, bool allow_file) {
    if (allow_file) cmd->add_option("--graph", args.path, "Edge-list or JSON graph file");
    cmd->add_option("--family", args.spec.family, "random-connected, path-of-cliques, star-of-paths, biconnected-random, ladder, cycle, path, complete");
    cmd->add_option("--n", args.spec.n, "Vertex count");
    cmd->add_option("--seed", args.spec.seed, "Generator and master seed");
    cmd->add_option("--diameter", args.spec.diameter, "Target diameter (path-of-cliques, star-of-paths)");
    cmd->add_option("--max-degree", args.spec.max_degree, "Spoke count (star-of-paths)");
    cmd->add_option("--clique-size", args.spec.clique_size, "Clique size (path-of-cliques)");
    cmd->add_option("--p", args.spec.p, "Edge probability (random-connected)");
}

vcut::Graph load(const GraphArgs& args) {
    if (!args.path.empty()) return vcut::read_graph_file(args.path);
    if (args.spec.family.empty()) throw vcut::Error(vcut::ErrorKind::InvalidParams, "need --graph or --family");
    return vcut::gen::generate(args.spec);
}

void write_out(const std::string& path, const std::string& body) {
    if (path.empty() || path == "-") {
        std::cout << body;
        return;
    }
    std::ofstream out(path);
    if (!out) throw vcut::Error(vcut::ErrorKind::InvalidInput, "cannot write " + path);
    out << body;
}

vcut::ScheduleMode parse_mode(const std::string& mode) { return mode == "strict" ? vcut::ScheduleMode::Strict : vcut::ScheduleMode::Sequential; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cut vertex and cut pair detection in a simulated CONGEST network"};
    app.require_subcommand(1);

    GraphArgs graph_args;
    vcut::PipelineConfig config;
    std::string mode = "seq";
    std::string report_path;

    auto* run = app.add_subcommand("run", "Run the pipeline and write a JSON report");
    add_graph_flags(run, graph_args, true);
    run->add_flag("--verify", config.verify, "Compare against the brute-force oracle");
    run->add_option("--mode", mode, "Scheduler mode")->check(CLI::IsMember({"strict", "seq"}));
    run->add_option("--sketch-c", config.sketch_c, "Sketch length constant")->check(CLI::PositiveNumber);
    run->add_option("--report", report_path, "Report path (stdout if omitted)");
    run->add_flag("--trace", config.trace, "Record per-round traffic and pair part counts");
    run->add_option("--round-cap", config.round_cap, "Rounds allowed per engine run")->check(CLI::PositiveNumber);
    run->add_option("--master-seed", config.master_seed, "Seed for sketch randomness (defaults to --seed)");

    auto* generate = app.add_subcommand("generate", "Write a generated graph as JSON");
    GraphArgs gen_args;
    add_graph_flags(generate, gen_args, false);
    std::string gen_out;
    generate->add_option("--out", gen_out, "Output path (stdout if omitted)");

    auto* scale = app.add_subcommand("scale", "Sweep one generator parameter and write the scaling CSV");
    GraphArgs scale_args;
    add_graph_flags(scale, scale_args, false);
    std::string sweep_param = "n";
    std::vector<int> sweep_values;
    std::string scale_mode = "seq";
    std::string csv_path;
    scale->add_option("--param", sweep_param, "Swept parameter")->check(CLI::IsMember({"n", "diameter", "max-degree", "clique-size"}));
    scale->add_option("--values", sweep_values, "Values of the swept parameter")->required()->delimiter(',');
    scale->add_option("--mode", scale_mode, "Scheduler mode")->check(CLI::IsMember({"strict", "seq"}));
    std::int64_t scale_cap = 1'000'000;
    scale->add_option("--round-cap", scale_cap, "Rounds allowed per engine run")->check(CLI::PositiveNumber);
    scale->add_option("--report", csv_path, "CSV path (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (run->count("--master-seed") == 0) config.master_seed = graph_args.spec.seed;
            config.mode = parse_mode(mode);
            auto g = load(graph_args);
            auto report = vcut::run_pipeline(g, config);
            write_out(report_path, vcut::report_json(report));
            if (!report.failed_stage.empty()) std::cerr << "stage " << report.failed_stage << " failed: " << report.error << "\n";
            return vcut::exit_code(report);
        }
        if (*generate) {
            write_out(gen_out, vcut::graph_to_json(vcut::gen::generate(gen_args.spec)) + "\n");
            return 0;
        }
        if (*scale) {
            std::vector<vcut::ScalingRow> rows;
            for (int value : sweep_values) {
                auto spec = scale_args.spec;
                if (sweep_param == "n") spec.n = value;
                else if (sweep_param == "diameter") spec.diameter = value;
                else if (sweep_param == "max-degree") spec.max_degree = value;
                else spec.clique_size = value;
                auto g = vcut::gen::generate(spec);
                vcut::PipelineConfig cfg;
                cfg.master_seed = spec.seed;
                cfg.mode = parse_mode(scale_mode);
                cfg.round_cap = scale_cap;
                auto report = vcut::run_pipeline(g, cfg);
                if (!report.failed_stage.empty()) {
                    std::cerr << "stage " << report.failed_stage << " failed: " << report.error << "\n";
                    return 3;
                }
                auto part = vcut::scaling_rows(g, report);
                rows.insert(rows.end(), part.begin(), part.end());
            }
            write_out(csv_path, vcut::scaling_csv(rows));
            return 0;
        }
    } catch (const vcut::Error& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
    return 0;
}
