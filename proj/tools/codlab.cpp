#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "codlab/experiment.hpp"

namespace fs = std::filesystem;
using codlab::json;

namespace {

int default_threads() {
    if (const char* env = std::getenv("CODLAB_THREADS")) {
        const int t = std::atoi(env);
        if (t >= 1) return t;
    }
    return 1;
}

// Apply a dotted-path override "a.b.c=value"; values parse as JSON when
// possible and fall back to strings.
void apply_override(json& params, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
        throw codlab::ConfigError("--set expects key=value, got: " + kv);
    std::string path = kv.substr(0, eq);
    std::string raw = kv.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &params;
    std::size_t pos = 0;
    while (true) {
        const auto dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot - pos);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
}

// Reject keys the experiment does not declare, with a field diagnostic.
void validate_params(const json& params, const json& defaults,
                     const std::string& id) {
    for (auto it = params.begin(); it != params.end(); ++it) {
        if (!defaults.contains(it.key()))
            throw codlab::ConfigError("experiment '" + id +
                                      "' has no parameter '" + it.key() +
                                      "'; see `describe " + id + "`");
    }
}

int cmd_run(const std::string& id, const std::string& config_path,
            const std::vector<std::string>& sets, std::uint64_t seed,
            const std::string& out_dir, int threads) {
    const codlab::Experiment& exp = codlab::find_experiment(id);
    json params = exp.defaults;
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw codlab::ConfigError("cannot open config: " + config_path);
        json file_params = json::parse(f);
        validate_params(file_params, exp.defaults, id);
        params.update(file_params);
    }
    for (const auto& kv : sets) apply_override(params, kv);
    validate_params(params, exp.defaults, id);

    codlab::ExperimentResult res = exp.runner(params, seed, threads);

    fs::create_directories(out_dir);
    {
        std::ofstream f(fs::path(out_dir) / "results.json");
        f << res.to_results_json().dump(2) << '\n';
    }
    for (const auto& [name, cloud] : res.clouds) {
        {
            std::ofstream f(fs::path(out_dir) / (name + ".csv"));
            codlab::write_csv(cloud, f);
        }
        {
            std::ofstream f(fs::path(out_dir) / (name + ".bin"), std::ios::binary);
            codlab::write_binary(cloud, f);
        }
        if (cloud.n >= 2) {
            std::ofstream f(fs::path(out_dir) / (name + ".svg"));
            // Thin the render to keep SVGs small.
            codlab::PointCloud thin;
            thin.n = cloud.n;
            const std::uint64_t stride = std::max<std::uint64_t>(1, cloud.size() / 20000);
            for (std::uint64_t i = 0; i < cloud.size(); i += stride)
                thin.data.insert(thin.data.end(), cloud.data.begin() + i * cloud.n,
                                 cloud.data.begin() + (i + 1) * cloud.n);
            f << codlab::render_slice(thin, 0, 1, codlab::Vec::Zero(cloud.n), 1e30);
        }
    }

    bool all_pass = true;
    for (const auto& c : res.claims) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << id << ":" << c.name
                  << " value=" << c.value << " " << c.relation << " "
                  << c.threshold << '\n';
        all_pass = all_pass && c.pass;
    }
    std::cout << "results written to " << out_dir << '\n';
    return all_pass ? 0 : 2;
}

int cmd_list() {
    for (const auto& e : codlab::experiment_registry())
        std::cout << e.id << "  -  " << e.description << '\n';
    return 0;
}

int cmd_describe(const std::string& id) {
    const codlab::Experiment& exp = codlab::find_experiment(id);
    std::cout << exp.id << '\n'
              << "  " << exp.description << '\n'
              << "  claim: " << exp.claim_text << '\n'
              << "  parameters (defaults): " << exp.defaults.dump() << '\n';
    return 0;
}

int cmd_render(const std::string& cloud_path, const std::string& axes,
               const std::vector<double>& offsets, double thickness,
               const std::string& out_path) {
    codlab::PointCloud cloud = codlab::load_cloud(cloud_path);
    const auto comma = axes.find(',');
    if (comma == std::string::npos)
        throw codlab::ConfigError("--axes expects i,j");
    const int ai = std::stoi(axes.substr(0, comma));
    const int aj = std::stoi(axes.substr(comma + 1));
    codlab::Vec off = codlab::Vec::Zero(cloud.n);
    for (std::size_t k = 0; k < offsets.size() && k < static_cast<std::size_t>(cloud.n); ++k)
        off[static_cast<int>(k)] = offsets[k];
    const std::string svg =
        codlab::render_slice(cloud, ai, aj, off, thickness);
    if (svg.find("EmptySlice") != std::string::npos)
        std::cerr << "warning: EmptySlice - no points in the slab\n";
    std::ofstream f(out_path);
    if (!f) throw codlab::ConfigError("cannot write: " + out_path);
    f << svg;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"codlab - codiagonal sweep and measurement workbench"};
    app.require_subcommand(1);

    std::string run_id, config_path, out_dir = "out";
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    int threads = default_threads();
    auto* run = app.add_subcommand("run", "run an experiment");
    run->add_option("id", run_id, "experiment id")->required();
    run->add_option("--config", config_path, "JSON parameter file");
    run->add_option("--set", sets, "dotted-path overrides key=value");
    run->add_option("--seed", seed, "sample seed");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--threads", threads, "worker threads");

    auto* list = app.add_subcommand("list", "list experiments");

    std::string describe_id;
    auto* describe = app.add_subcommand("describe", "show an experiment");
    describe->add_option("id", describe_id, "experiment id")->required();

    std::string cloud_path, axes, render_out = "slice.svg";
    std::vector<double> offsets;
    double thickness = 0.1;
    auto* render = app.add_subcommand("render", "render a cloud slice to SVG");
    render->add_option("cloud", cloud_path, "cloud file (csv or binary)")->required();
    render->add_option("--axes", axes, "projection axes i,j")->required();
    render->add_option("--offset", offsets, "slab offsets per remaining axis");
    render->add_option("--thickness", thickness, "slab thickness");
    render->add_option("--out", render_out, "output SVG path");

    try {
        app.parse(argc, argv);
        if (*run) return cmd_run(run_id, config_path, sets, seed, out_dir, threads);
        if (*list) return cmd_list();
        if (*describe) return cmd_describe(describe_id);
        if (*render)
            return cmd_render(cloud_path, axes, offsets, thickness, render_out);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const codlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const codlab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
