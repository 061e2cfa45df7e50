#include "superpose/detection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "superpose/errors.hpp"
#include "superpose/hmm.hpp"

namespace superpose {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_inputs(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs) {
    config.validate();
    if (rates.size() != static_cast<std::size_t>(config.num_states()))
        throw ConfigError("rates", "expected one rate per state (2^L entries)");
    for (std::size_t s = 0; s < rates.size(); ++s) {
        if (!(rates[s] >= 0.0) || !std::isfinite(rates[s]))
            throw ConfigError("rates[" + std::to_string(s) + "]", "must be finite and >= 0");
    }
    if (obs.size() != static_cast<std::size_t>(chip_count(config)))
        throw ConfigError("observations", "expected " + std::to_string(chip_count(config)) + " chips, got " +
                                              std::to_string(obs.size()));
}

double chip_metric(double tau, double rate, std::uint32_t count) {
    const double mean = tau * rate;
    if (mean == 0.0) return count == 0 ? 0.0 : kNegInf;
    return count * std::log(mean) - mean;
}

// Read each symbol off the first chip of its span.
LayerSymbols symbols_from_path(const ChannelConfig& config, const std::vector<std::uint32_t>& path) {
    LayerSymbols z(config.num_layers, config.num_symbols);
    for (int k = 1; k <= config.num_layers; ++k) {
        for (int j = 1; j <= config.num_symbols; ++j) {
            const int t = symbol_span(config, k, j).first;
            z.bits(static_cast<std::size_t>(k - 1), static_cast<std::size_t>(j - 1)) =
                static_cast<std::uint8_t>((path[static_cast<std::size_t>(t - 1)] >> (k - 1)) & 1U);
        }
    }
    return z;
}

}  // namespace

RateTable true_rate_table(const ChannelConfig& config) {
    config.validate();
    RateTable r(static_cast<std::size_t>(config.num_states()));
    for (std::uint32_t s = 0; s < r.size(); ++s) r[s] = state_rate(config, s);
    return r;
}

double viterbi_metric(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs,
                      const LayerSymbols& symbols) {
    check_inputs(config, rates, obs);
    double metric = 0.0;
    for (int t = 1; t <= chip_count(config); ++t) {
        const std::uint32_t s = state_at_chip(config, symbols, t).index();
        metric += chip_metric(chip_duration(config, t), rates[s], obs.counts[static_cast<std::size_t>(t - 1)]);
    }
    return metric;
}

DetectionOutput viterbi_detect(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs) {
    check_inputs(config, rates, obs);
    const int T = chip_count(config);
    const std::uint32_t S = static_cast<std::uint32_t>(config.num_states());
    const std::vector<double> pi = initial_distribution(config);

    std::vector<double> delta(S), next(S);
    Matrix<std::uint32_t> back(static_cast<std::size_t>(T), S, 0);
    const double tau1 = chip_duration(config, 1);
    for (std::uint32_t s = 0; s < S; ++s)
        delta[s] = pi[s] > 0.0 ? chip_metric(tau1, rates[s], obs.counts[0]) : kNegInf;

    for (int t = 1; t < T; ++t) {
        const std::uint32_t changed = changed_layers(config, t);
        const double tau = chip_duration(config, t + 1);
        for (std::uint32_t s = 0; s < S; ++s) {
            // Support: the redrawn components of s must have nonzero prior.
            bool allowed = true;
            for (int k = 1; k <= config.num_layers && allowed; ++k) {
                const std::uint32_t bit = 1U << (k - 1);
                if (!(changed & bit)) continue;
                const double q = symbol_prior(config, k, symbol_index(config, t + 1, k));
                allowed = (s & bit) ? q > 0.0 : q < 1.0;
            }
            double best = kNegInf;
            std::uint32_t arg = s & ~changed;
            if (allowed) {
                // Predecessors: s with the changed components replaced, in
                // increasing index order.
                const std::uint32_t fixed = s & ~changed;
                std::uint32_t sub = 0;
                bool first = true;
                do {
                    const std::uint32_t u = fixed | sub;
                    if (first || delta[u] > best) {
                        best = delta[u];
                        arg = u;
                        first = false;
                    }
                    sub = (sub - changed) & changed;
                } while (sub != 0);
            }
            back(static_cast<std::size_t>(t), s) = arg;
            next[s] = allowed ? best + chip_metric(tau, rates[s], obs.counts[static_cast<std::size_t>(t)]) : kNegInf;
        }
        delta.swap(next);
    }

    std::uint32_t state = 0;
    for (std::uint32_t s = 1; s < S; ++s) {
        if (delta[s] > delta[state]) state = s;
    }
    DetectionOutput out;
    out.path_metric = delta[state];
    std::vector<std::uint32_t> path(static_cast<std::size_t>(T));
    for (int t = T; t >= 1; --t) {
        path[static_cast<std::size_t>(t - 1)] = state;
        if (t > 1) state = back(static_cast<std::size_t>(t - 1), state);
    }
    out.hard_bits = symbols_from_path(config, path);
    return out;
}

DetectionOutput bcjr_posteriors(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs) {
    check_inputs(config, rates, obs);
    const TrellisPosterior post = forward_backward(HmmView(config, rates), obs);
    const std::uint32_t S = static_cast<std::uint32_t>(config.num_states());
    DetectionOutput out;
    out.posteriors = Matrix<double>(static_cast<std::size_t>(config.num_layers), static_cast<std::size_t>(config.num_symbols));
    out.hard_bits = LayerSymbols(config.num_layers, config.num_symbols);
    for (int k = 1; k <= config.num_layers; ++k) {
        const std::uint32_t bit = 1U << (k - 1);
        for (int j = 1; j <= config.num_symbols; ++j) {
            const ChipSpan span = symbol_span(config, k, j);
            double p = 0.0;
            for (int t = span.first; t <= span.last; ++t) {
                double m = 0.0;
                for (std::uint32_t s = 0; s < S; ++s) {
                    if (s & bit) m += post.state_posterior(t, s);
                }
                if (t == span.first) {
                    p = m;
                } else if (std::abs(m - p) > 1e-9) {
                    throw std::logic_error("symbol (" + std::to_string(k) + ", " + std::to_string(j) +
                                           ") has inconsistent chip marginals across its span");
                }
            }
            p = std::min(1.0, std::max(0.0, p));
            out.posteriors(static_cast<std::size_t>(k - 1), static_cast<std::size_t>(j - 1)) = p;
            out.hard_bits.bits(static_cast<std::size_t>(k - 1), static_cast<std::size_t>(j - 1)) = p > 0.5 ? 1 : 0;
        }
    }
    return out;
}

}  // namespace superpose
