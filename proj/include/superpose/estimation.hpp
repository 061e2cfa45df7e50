#pragma once

#include <cstdint>
#include <vector>

#include "superpose/channel.hpp"

namespace superpose {

/// Known symbols on layers 1..num_pilot_layers of an estimation frame.
struct PilotConfig {
    int num_pilot_layers = 0;
    std::vector<std::vector<std::uint8_t>> pilot_bits;  // one row of M bits per pilot layer

    /// Repeats `sequence` over the M symbols of each of the first `layers` layers.
    static PilotConfig tiled(const ChannelConfig& config, int layers, const std::vector<std::uint8_t>& sequence);

    void validate(const ChannelConfig& config) const;
};

/// Maximal-length sequence from a Fibonacci LFSR. `taps` lists the exponents
/// of the feedback polynomial below the degree (x^8 + x^4 + x^3 + x^2 + 1 is
/// {4, 3, 2} with degree 8). Length 2^degree - 1, register seeded with ones.
std::vector<std::uint8_t> m_sequence(int degree = 8, const std::vector<int>& taps = {4, 3, 2});

/// Frame whose pilot layers carry the pilot bits and whose other layers are
/// drawn from their priors.
LayerSymbols pilot_frame(const ChannelConfig& config, const PilotConfig& pilots, std::uint64_t seed);

struct EstimationOptions {
    int max_iters = 200;
    double tol = 1e-6;  // on the largest per-state relative change
};

struct EstimationSnapshot {
    int iteration = 0;
    std::vector<double> lambda_hat;  // per state index, total rate
    double log_likelihood = 0.0;     // mixture log-likelihood at lambda_hat
    double max_rel_change = 0.0;     // 0 for the initial snapshot
};

struct EstimationResult {
    std::vector<double> lambda_hat;
    int iterations_run = 0;
    bool converged = false;
    std::vector<EstimationSnapshot> trajectory;  // entry 0 is the initial guess
};

/// Initial rates, strictly increasing in the number of active non-pilot
/// layers (ties split by layer index). Scaled by the mean count rate.
std::vector<double> default_init(const ChannelConfig& config, const PilotConfig& pilots, const ObservationSequence& obs);

/// Per-chip mixture EM over the states allowed by the pilots, with uniform
/// weights over each chip's allowed set. States never allowed keep their
/// initial value. Relative change uses max(|lambda|, 1e-3 * mean rate) as
/// its denominator so near-zero background states do not stall convergence.
EstimationResult em_estimate(const ChannelConfig& config, const PilotConfig& pilots, const ObservationSequence& obs,
                             const std::vector<double>& init, const EstimationOptions& options = {});

/// Least-squares fit of (background, lambda_1..lambda_L) to per-state rates.
std::vector<double> recover_layer_rates(int num_layers, const std::vector<double>& state_rates);

}  // namespace superpose
