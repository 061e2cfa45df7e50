#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "superpose/channel.hpp"

namespace superpose {

struct RateResult {
    double rate_bits_per_symbol = 0.0;
    double std_error = 0.0;       // 0 for exact computations
    std::int64_t samples_used = 0;
    double truncated_mass = 0.0;  // largest Poisson tail mass dropped by a count sum
};

/// Monte-Carlo query for (1/M) I(Z_U; N_T | Z_{L \ U}).
struct RateQuery {
    std::vector<int> layer_set;   // U, 1-based layers; empty means all layers
    int mc_samples = 200;
    std::uint64_t seed = 1;
    int workers = 1;
};

/// H(x) in bits; throws std::domain_error outside [0, 1].
double binary_entropy(double x);

/// sum over k in U, j of H(q_{k,j}), in bits.
double input_entropy(const ChannelConfig& config, std::span<const int> layer_set);

enum class SingleLayerMethod {
    Auto,         // UniformBulk when every prior is equal, PerSymbol otherwise
    PerSymbol,    // every symbol, including the boundary ones
    UniformBulk,  // one interior symbol times M, boundary effects neglected
};

struct SingleLayerOptions {
    double tail_epsilon = 1e-10;
    SingleLayerMethod method = SingleLayerMethod::Auto;
    std::uint32_t count_cap = 4096;        // largest per-chip count a sum may need
    double max_terms = 4e9;                // budget on enumerated (config, count) pairs
};

/// H(z_{k,j} | neighbouring symbols, counts over the symbol's span), bits.
/// `bulk` evaluates an interior symbol with every neighbour drawn from the
/// symbol's own prior, as if no boundary were near.
double symbol_conditional_entropy(const ChannelConfig& config, int layer, int j, bool bulk,
                                  const SingleLayerOptions& options, double* truncated_mass = nullptr);

/// R*_k = (1/M) I(Z_k; N_T | Z_{L \ k}), exact up to tail truncation.
RateResult single_layer_rate(const ChannelConfig& config, int layer, const SingleLayerOptions& options = {});

/// (1/M) [H(Z_U) - E H(Z_U | Z_rest, N_T = n)] with the conditional entropy
/// averaged over sampled (Z, N). With U = all layers this is R*_Sigma.
/// Sample i uses streams derived from (seed, i), so grid sweeps sharing a
/// seed share their symbol draws and uniforms.
RateResult sum_rate_mc(const ChannelConfig& config, const RateQuery& query);

/// Single-use mutual information of OOK and 2-PPM, in bits.
double ook_mutual_information(double lambda1, double lambda0, double q, double tail_epsilon = 1e-12);
double ppm_mutual_information(double lambda1, double lambda0, double q, double tau, double tail_epsilon = 1e-12);

struct ModulationComparison {
    double ook_bits = 0.0;
    double ppm_bits = 0.0;
    double ook_best_q = 0.0;
    double ppm_best_q = 0.0;
    double ppm_best_tau = 0.0;
};

/// Grid maxima of I_OOK over q and I_2PPM over (q, tau); grids use the
/// interior points i / (n - 1), i = 1..n-2.
ModulationComparison ook_vs_ppm(double lambda1, double lambda0, int q_grid = 101, int tau_grid = 101,
                                double tail_epsilon = 1e-12);

struct PowerPoint {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double rate1 = 0.0;     // R*_1, exact
    double rate2 = 0.0;     // R*_2, exact
    double rate_sum = 0.0;  // R*_Sigma, Monte-Carlo (Case 1 only)
    double std_error = 0.0;
};

struct PowerAllocation {
    PowerPoint best;
    std::vector<PowerPoint> sweep;  // every grid point in increasing lambda1
};

struct PowerAllocOptions {
    int grid = 101;
    RateQuery mc;                     // layer_set ignored
    SingleLayerOptions single;
    bool single_layer_rates = true;   // also fill rate1/rate2 in the Case 1 sweep
};

/// Case 1: maximise R*_Sigma over lambda1 + lambda2 = lambda_s (L = 2).
/// Exact ties go to the point closest to an equal split.
PowerAllocation power_alloc_sum(double lambda_s, const ChannelConfig& templ, const PowerAllocOptions& options = {});

/// Case 2: smallest grid lambda2 with R*_2 >= r2_floor; returns lambda1 =
/// lambda_s - lambda2 with its R*_1. Throws InfeasibleError carrying the
/// largest R*_2 on the grid.
PowerAllocation power_alloc_constrained(double lambda_s, double r2_floor, const ChannelConfig& templ,
                                        const PowerAllocOptions& options = {});

}  // namespace superpose
