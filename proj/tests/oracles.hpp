#pragma once

// Brute-force references built only on the channel index algebra: every
// symbol matrix is enumerated and weighted by prior times Poisson likelihood.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "superpose/channel.hpp"
#include "superpose/detection.hpp"
#include "superpose/matrix.hpp"
#include "superpose/rng.hpp"

namespace oracle {

using namespace superpose;

inline double poisson_logpmf(double mean, std::uint32_t n) {
    if (mean == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    return n * std::log(mean) - mean - std::lgamma(n + 1.0);
}

inline LayerSymbols matrix_from_index(int L, int M, std::uint64_t idx) {
    LayerSymbols z(L, M);
    for (int k = 0; k < L; ++k) {
        for (int j = 0; j < M; ++j) z.bits(k, j) = static_cast<std::uint8_t>((idx >> (k * M + j)) & 1U);
    }
    return z;
}

inline double prior_prob(const ChannelConfig& c, const LayerSymbols& z) {
    double p = 1.0;
    for (int k = 1; k <= c.num_layers; ++k) {
        for (int j = 1; j <= c.num_symbols; ++j) {
            const double q = symbol_prior(c, k, j);
            p *= z.symbol(k, j) ? q : 1.0 - q;
        }
    }
    return p;
}

inline double log_likelihood(const ChannelConfig& c, const RateTable& rates, const LayerSymbols& z,
                             const ObservationSequence& obs) {
    double ll = 0.0;
    for (int t = 1; t <= chip_count(c); ++t) {
        const auto s = state_at_chip(c, z, t).index();
        ll += poisson_logpmf(chip_duration(c, t) * rates[s], obs.counts[t - 1]);
    }
    return ll;
}

struct Enumeration {
    std::vector<LayerSymbols> matrices;
    std::vector<double> posterior;  // P(Z | N)
    double log_evidence = 0.0;      // log P(N)
    Matrix<double> state_post;      // T x 2^L
    Matrix<double> symbol_post;     // L x M
    double entropy_bits = 0.0;      // H(Z | N = n)
};

inline Enumeration enumerate(const ChannelConfig& c, const RateTable& rates, const ObservationSequence& obs) {
    const int L = c.num_layers, M = c.num_symbols, T = chip_count(c);
    const std::uint64_t count = std::uint64_t{1} << (L * M);
    Enumeration e;
    std::vector<double> logw(count);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < count; ++i) {
        e.matrices.push_back(matrix_from_index(L, M, i));
        const double pr = prior_prob(c, e.matrices.back());
        logw[i] = pr > 0.0 ? std::log(pr) + log_likelihood(c, rates, e.matrices.back(), obs)
                           : -std::numeric_limits<double>::infinity();
        peak = std::max(peak, logw[i]);
    }
    double z = 0.0;
    for (double lw : logw) z += std::exp(lw - peak);
    e.log_evidence = peak + std::log(z);
    e.state_post = Matrix<double>(T, 1U << L, 0.0);
    e.symbol_post = Matrix<double>(L, M, 0.0);
    for (std::uint64_t i = 0; i < count; ++i) {
        const double p = std::exp(logw[i] - e.log_evidence);
        e.posterior.push_back(p);
        if (p > 0.0) e.entropy_bits -= p * std::log2(p);
        for (int t = 1; t <= T; ++t) e.state_post(t - 1, state_at_chip(c, e.matrices[i], t).index()) += p;
        for (int k = 0; k < L; ++k) {
            for (int j = 0; j < M; ++j) {
                if (e.matrices[i].bits(k, j)) e.symbol_post(k, j) += p;
            }
        }
    }
    return e;
}

/// Largest path metric sum_t N log(tau lambda) - tau lambda over matrices
/// with nonzero prior.
inline double max_metric(const ChannelConfig& c, const RateTable& rates, const ObservationSequence& obs) {
    const int L = c.num_layers, M = c.num_symbols;
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << (L * M)); ++i) {
        const LayerSymbols z = matrix_from_index(L, M, i);
        if (prior_prob(c, z) == 0.0) continue;
        double m = 0.0;
        for (int t = 1; t <= chip_count(c); ++t) {
            const double mean = chip_duration(c, t) * rates[state_at_chip(c, z, t).index()];
            const auto n = obs.counts[t - 1];
            m += mean == 0.0 ? (n == 0 ? 0.0 : -std::numeric_limits<double>::infinity()) : n * std::log(mean) - mean;
        }
        best = std::max(best, m);
    }
    return best;
}

/// Largest gap between P(Z_k | Z_rest, N) from enumeration and the product
/// over j of per-symbol posteriors computed from each symbol's own chips.
inline double factorization_gap(const ChannelConfig& c, const ObservationSequence& obs) {
    const int L = c.num_layers, M = c.num_symbols;
    const RateTable rates = true_rate_table(c);
    const std::uint64_t count = std::uint64_t{1} << (L * M);
    std::vector<double> w(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto z = matrix_from_index(L, M, i);
        w[i] = prior_prob(c, z) * std::exp(log_likelihood(c, rates, z, obs));
    }
    double gap = 0.0;
    for (int k = 0; k < L; ++k) {
        std::uint64_t layer_mask = 0;
        for (int j = 0; j < M; ++j) layer_mask |= std::uint64_t{1} << (k * M + j);
        for (std::uint64_t i = 0; i < count; ++i) {
            double group = 0.0;
            for (std::uint64_t sub = 0; sub < (std::uint64_t{1} << M); ++sub) {
                std::uint64_t other = i & ~layer_mask;
                for (int j = 0; j < M; ++j) {
                    if ((sub >> j) & 1U) other |= std::uint64_t{1} << (k * M + j);
                }
                group += w[other];
            }
            if (group == 0.0) continue;
            const double joint = w[i] / group;

            double product = 1.0;
            LayerSymbols z = matrix_from_index(L, M, i);
            for (int j = 1; j <= M; ++j) {
                const ChipSpan span = symbol_span(c, k + 1, j);
                double local[2];
                for (int theta = 0; theta < 2; ++theta) {
                    z.bits(k, j - 1) = static_cast<std::uint8_t>(theta);
                    const double q = symbol_prior(c, k + 1, j);
                    double v = theta ? q : 1.0 - q;
                    for (int t = span.first; t <= span.last; ++t)
                        v *= std::exp(poisson_logpmf(chip_duration(c, t) * rates[state_at_chip(c, z, t).index()],
                                                     obs.counts[t - 1]));
                    local[theta] = v;
                }
                const int actual = static_cast<int>((i >> (k * M + j - 1)) & 1U);
                z.bits(k, j - 1) = static_cast<std::uint8_t>(actual);
                product *= local[actual] / (local[0] + local[1]);
            }
            gap = std::max(gap, std::abs(product - joint));
        }
    }
    return gap;
}

/// Conditional entropies (bits) by summing every count vector with entries
/// up to `cap`: H(Z | N) and, per layer k, H(Z_k | Z_rest, N).
struct CountSums {
    double h_all = 0.0;
    std::vector<double> h_layer;
    double mass = 0.0;  // captured probability
};

inline CountSums count_space_entropies(const ChannelConfig& c, std::uint32_t cap) {
    const int L = c.num_layers, M = c.num_symbols, T = chip_count(c);
    const RateTable rates = true_rate_table(c);
    const std::uint64_t count = std::uint64_t{1} << (L * M);
    std::vector<double> prior(count);
    std::vector<std::vector<std::uint32_t>> state(count, std::vector<std::uint32_t>(T));
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto z = matrix_from_index(L, M, i);
        prior[i] = prior_prob(c, z);
        for (int t = 1; t <= T; ++t) state[i][t - 1] = state_at_chip(c, z, t).index();
    }
    // pmf[t][s][n]
    std::vector<std::vector<std::vector<double>>> pmf(T);
    for (int t = 1; t <= T; ++t) {
        pmf[t - 1].resize(rates.size());
        for (std::size_t s = 0; s < rates.size(); ++s) {
            for (std::uint32_t n = 0; n <= cap; ++n)
                pmf[t - 1][s].push_back(std::exp(poisson_logpmf(chip_duration(c, t) * rates[s], n)));
        }
    }
    CountSums out;
    out.h_layer.assign(L, 0.0);
    std::vector<std::vector<double>> w(T + 1, std::vector<double>(count));
    w[0] = prior;
    auto leaf = [&](const std::vector<double>& v) {
        double total = 0.0;
        for (double x : v) total += x;
        out.mass += total;
        for (double x : v) {
            if (x > 0.0) out.h_all -= x * std::log2(x / total);
        }
        for (int k = 0; k < L; ++k) {
            std::uint64_t mask = 0;
            for (int j = 0; j < M; ++j) mask |= std::uint64_t{1} << (k * M + j);
            static thread_local std::vector<double> group;
            group.assign(count, 0.0);
            for (std::uint64_t i = 0; i < count; ++i) group[i & ~mask] += v[i];
            for (std::uint64_t i = 0; i < count; ++i) {
                if (v[i] > 0.0) out.h_layer[k] -= v[i] * std::log2(v[i] / group[i & ~mask]);
            }
        }
    };
    auto rec = [&](auto&& self, int t) -> void {
        if (t == T) {
            leaf(w[T]);
            return;
        }
        for (std::uint32_t n = 0; n <= cap; ++n) {
            bool any = false;
            for (std::uint64_t i = 0; i < count; ++i) {
                w[t + 1][i] = w[t][i] * pmf[t][state[i][t]][n];
                any = any || w[t + 1][i] > 0.0;
            }
            if (any) self(self, t + 1);
        }
    };
    rec(rec, 0);
    return out;
}

/// Fixed fixture set: L = 2, M = 3, random delays, rates, priors and
/// counts clipped to at most 6.
struct Instance {
    ChannelConfig config;
    ObservationSequence obs;
};

inline std::vector<Instance> fixture_set(int count, std::uint64_t seed) {
    std::vector<Instance> out;
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        ChannelConfig c = ChannelConfig::symmetric(2, 3, 1.0, 0.1);
        const double r1 = 0.1 + 0.8 * rng.uniform();
        c.delays = {r1, 1.0 - r1};
        c.layer_rates = {0.5 + 6.0 * rng.uniform(), 0.5 + 6.0 * rng.uniform()};
        c.background_rate = 0.01 + 0.5 * rng.uniform();
        for (auto& q : c.priors.data()) q = 0.1 + 0.8 * rng.uniform();
        c.aligned = (i % 10) == 9;
        if (c.aligned) c.delays = {0.5, 0.5};
        Instance inst{c, {}};
        const int T = chip_count(c);
        for (int t = 0; t < T; ++t) inst.obs.counts.push_back(static_cast<std::uint32_t>(rng.uniform() * 7.0));
        out.push_back(std::move(inst));
    }
    return out;
}

}  // namespace oracle
