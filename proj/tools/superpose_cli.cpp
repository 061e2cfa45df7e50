#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "superpose/errors.hpp"
#include "superpose/experiment.hpp"
#include "superpose/io.hpp"
#include "superpose/ldpc.hpp"
#include "superpose/rng.hpp"

namespace sp = superpose;
using json = nlohmann::json;

namespace {

constexpr int kValidation = 2;
constexpr int kRuntime = 3;

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string scale = "desk";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Experiment config (JSON)")->required();
    cmd->add_option("--out", c.out, "Output directory (default out/<kind>)");
    cmd->add_option("--seed", c.seed, "Override the config seed");
    cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--scale", c.scale, "Budget scale")->check(CLI::IsMember({"desk", "paper"}));
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sp::ConfigError("config", "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw sp::ConfigError("config", e.what());
    }
}

int run_kind(const std::string& kind, const Common& c, const json& overrides) {
    json cfg = read_json(c.config);
    if (!cfg.is_object()) throw sp::ConfigError("config", "expected an object");
    std::string resolved = kind;
    if (resolved.empty()) {
        if (!cfg.contains("kind") || !cfg["kind"].is_string()) throw sp::ConfigError("kind", "missing");
        resolved = cfg["kind"].get<std::string>();
    } else if (cfg.contains("kind") && cfg["kind"] != kind) {
        throw sp::ConfigError("kind", "config is '" + cfg["kind"].dump() + "' but the command is " + kind);
    }
    cfg["kind"] = resolved;
    cfg.merge_patch(overrides);
    sp::RunOptions opts;
    opts.seed = c.seed;
    opts.workers = c.workers;
    opts.scale = c.scale;
    const auto t0 = std::chrono::steady_clock::now();
    const sp::ExperimentOutput out = sp::run_experiment(cfg, opts);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string dir = c.out.empty() ? "out/" + out.kind : c.out;
    sp::write_experiment(out, dir, wall);
    std::cout << dir << "/" << out.kind << ".csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Superimposed Poisson-channel simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", sp::library_version());

    const std::vector<std::string> kinds = {"rate-sum", "rate-single", "layer-select", "power-alloc", "estimate",
                                            "detect",   "ber-sim",     "ook-vs-ppm",   "trellis"};
    std::vector<Common> commons(kinds.size());
    std::vector<CLI::App*> cmds;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        cmds.push_back(app.add_subcommand(kinds[i], "Run the " + kinds[i] + " experiment kind"));
        add_common(cmds.back(), commons[i]);
    }
    Common run_common;
    auto* run = app.add_subcommand("run", "Run a config, taking the experiment kind from its 'kind' field");
    add_common(run, run_common);

    // Flags that override config fields.
    std::string algo, obs_file, mode, code;
    std::vector<double> lambda_ave;
    std::optional<int> frames;
    auto* detect = cmds[5];
    detect->add_option("--algo", algo, "viterbi or bcjr")->check(CLI::IsMember({"viterbi", "bcjr"}));
    detect->add_option("--obs", obs_file, "Observation fixture (one count per line)");
    auto* ber = cmds[6];
    ber->add_option("--mode", mode, "ml or map")->check(CLI::IsMember({"ml", "map"}));
    ber->add_option("--code", code, "alist parity-check file, or 'default'");
    ber->add_option("--lambda-ave", lambda_ave, "lambda_ave sweep values");
    ber->add_option("--frames", frames, "Frames per point")->check(CLI::PositiveNumber);

    // Fixture generation.
    std::string sim_config, sim_obs, sim_symbols;
    std::uint64_t sim_seed = 1;
    auto* simulate = app.add_subcommand("simulate", "Sample symbols and counts for a channel config");
    simulate->add_option("--config", sim_config, "Channel config (JSON)")->required();
    simulate->add_option("--obs", sim_obs, "Output observation file")->required();
    simulate->add_option("--symbols", sim_symbols, "Output symbol matrix (one layer per line)");
    simulate->add_option("--seed", sim_seed, "Seed");

    std::string code_out;
    auto* gen_code = app.add_subcommand("gen-code", "Write the default (1024, 512) LDPC code as alist");
    gen_code->add_option("--out", code_out, "Output alist path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kValidation;
    }

    try {
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            if (!cmds[i]->parsed()) continue;
            json overrides = json::object();
            if (i == 5) {
                if (!algo.empty()) overrides["algo"] = algo;
                if (!obs_file.empty()) overrides["observations"] = obs_file;
            }
            if (i == 6) {
                if (!mode.empty()) overrides["mode"] = mode;
                if (!code.empty()) overrides["code"] = code;
                if (frames) overrides["frames"] = *frames;
                if (!lambda_ave.empty()) overrides["sweep"] = {{"axis", "lambda_ave"}, {"values", lambda_ave}};
            }
            return run_kind(kinds[i], commons[i], overrides);
        }
        if (run->parsed()) return run_kind("", run_common, json::object());
        if (simulate->parsed()) {
            const sp::ChannelConfig c = sp::load_channel(sim_config);
            const sp::LayerSymbols z = sp::sample_symbols(c, sp::Rng(sim_seed).split(0).seed());
            sp::save_observations(sp::sample_observations(c, z, sp::Rng(sim_seed).split(1).seed()), sim_obs);
            if (!sim_symbols.empty()) {
                std::ofstream out(sim_symbols);
                if (!out) throw sp::ConfigError("symbols", "cannot write " + sim_symbols);
                for (int k = 1; k <= c.num_layers; ++k) {
                    for (int j = 1; j <= c.num_symbols; ++j) out << z.symbol(k, j);
                    out << '\n';
                }
            }
            return 0;
        }
        if (gen_code->parsed()) {
            sp::LdpcCode::desk_default().save_alist(code_out);
            return 0;
        }
    } catch (const sp::ConfigError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const sp::InitError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return 0;
}
