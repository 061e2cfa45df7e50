#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "superpose/rates.hpp"

namespace superpose {

struct LayerSelectOptions {
    int symbols = 500;
    double background = 0.01;
    RateQuery mc;  // layer_set ignored
};

struct LayerSelection {
    int best_layers = 1;
    std::vector<RateResult> sum_rates;  // entry L-1 holds R*_Sigma for L layers
};

/// Greedy layer count for the symmetric setup (rho_i = 1/L, lambda_i =
/// lambda, q = 0.5): grows L while each extra layer adds at least sigma
/// bit/symbol to the sum rate.
LayerSelection select_layers(double lambda, double sigma, int max_layers, const LayerSelectOptions& options = {});

/// Sets one sweep axis on a channel JSON object: symbols_per_layer, rho1
/// (two layers), lambda / lambda_ave (every layer), background_rate, layers.
nlohmann::json apply_channel_axis(nlohmann::json channel, const std::string& axis, double value);

/// Expands a sweep description: {"values": [...]}, {"from", "to", "step"},
/// or {"from", "to", "count", "spacing": "linear" | "log"}.
std::vector<double> sweep_values(const nlohmann::json& sweep, const std::string& path = "sweep");

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string scale = "desk";  // "paper" applies the description's "paper" merge patch
};

struct ExperimentOutput {
    std::string kind;
    std::string csv;
    nlohmann::json manifest;  // without wall time; added by write_experiment
};

/// Runs an experiment description. Pure apart from reading files the description
/// names (observations, codes), so identical inputs give identical CSV.
ExperimentOutput run_experiment(const nlohmann::json& cfg, const RunOptions& options = {});

/// Writes <kind>.csv and manifest.json into `dir`, creating it.
void write_experiment(const ExperimentOutput& output, const std::filesystem::path& dir, double wall_seconds);

std::string library_version();

}  // namespace superpose
