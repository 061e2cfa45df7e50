#include "superpose/estimation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "superpose/errors.hpp"
#include "superpose/rng.hpp"

namespace superpose {

PilotConfig PilotConfig::tiled(const ChannelConfig& config, int layers, const std::vector<std::uint8_t>& sequence) {
    if (layers < 0 || layers > config.num_layers)
        throw ConfigError("pilots.layers", "must be in [0, " + std::to_string(config.num_layers) + "]");
    if (layers > 0 && sequence.empty()) throw ConfigError("pilots.sequence", "must not be empty");
    PilotConfig p;
    p.num_pilot_layers = layers;
    for (int k = 0; k < layers; ++k) {
        std::vector<std::uint8_t> row(static_cast<std::size_t>(config.num_symbols));
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = sequence[j % sequence.size()];
        p.pilot_bits.push_back(std::move(row));
    }
    return p;
}

void PilotConfig::validate(const ChannelConfig& config) const {
    if (num_pilot_layers < 0 || num_pilot_layers > config.num_layers)
        throw ConfigError("pilots.layers", "must be in [0, " + std::to_string(config.num_layers) + "]");
    if (pilot_bits.size() != static_cast<std::size_t>(num_pilot_layers))
        throw ConfigError("pilots.bits", "expected one row per pilot layer");
    for (std::size_t k = 0; k < pilot_bits.size(); ++k) {
        if (pilot_bits[k].size() != static_cast<std::size_t>(config.num_symbols))
            throw ConfigError("pilots.bits[" + std::to_string(k) + "]", "length must equal symbols_per_layer");
        for (auto b : pilot_bits[k]) {
            if (b > 1) throw ConfigError("pilots.bits[" + std::to_string(k) + "]", "bits must be 0 or 1");
        }
    }
}

std::vector<std::uint8_t> m_sequence(int degree, const std::vector<int>& taps) {
    if (degree < 2 || degree > 31) throw ConfigError("m_sequence.degree", "must be in [2, 31]");
    std::uint32_t reg = (1U << degree) - 1U;
    const std::size_t length = (std::size_t{1} << degree) - 1;
    std::vector<std::uint8_t> out(length);
    for (std::size_t i = 0; i < length; ++i) {
        out[i] = static_cast<std::uint8_t>(reg & 1U);
        // a_{n+deg} = a_n + sum over taps of a_{n+tap}
        std::uint32_t fb = reg & 1U;
        for (int tap : taps) {
            if (tap <= 0 || tap >= degree) throw ConfigError("m_sequence.taps", "exponents must be in (0, degree)");
            fb ^= (reg >> tap) & 1U;
        }
        reg = (reg >> 1) | (fb << (degree - 1));
    }
    return out;
}

LayerSymbols pilot_frame(const ChannelConfig& config, const PilotConfig& pilots, std::uint64_t seed) {
    pilots.validate(config);
    LayerSymbols z = sample_symbols(config, seed);
    for (int k = 0; k < pilots.num_pilot_layers; ++k) {
        for (int j = 0; j < config.num_symbols; ++j)
            z.bits(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) = pilots.pilot_bits[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    }
    return z;
}

namespace {

double mean_rate(const ChannelConfig& config, const ObservationSequence& obs) {
    double counts = 0.0;
    double duration = 0.0;
    for (std::size_t t = 0; t < obs.size(); ++t) {
        counts += obs.counts[t];
        duration += chip_duration(config, static_cast<int>(t) + 1);
    }
    return duration > 0.0 ? counts / duration : 0.0;
}

// Bits of the pilot layers at chip t, and the mask they occupy.
std::uint32_t pilot_state(const ChannelConfig& config, const PilotConfig& pilots, int t) {
    std::uint32_t s = 0;
    for (int k = 1; k <= pilots.num_pilot_layers; ++k) {
        const int j = symbol_index(config, t, k);
        if (j >= 1 && j <= config.num_symbols && pilots.pilot_bits[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j - 1)])
            s |= 1U << (k - 1);
    }
    return s;
}

}  // namespace

std::vector<double> default_init(const ChannelConfig& config, const PilotConfig& pilots, const ObservationSequence& obs) {
    config.validate();
    pilots.validate(config);
    const double r = std::max(mean_rate(config, obs), 1e-6);
    const int L = config.num_layers;
    std::vector<double> init(static_cast<std::size_t>(config.num_states()));
    for (std::uint32_t s = 0; s < init.size(); ++s) {
        double v = 0.05 * r;
        for (int i = 1; i <= L; ++i) {
            if ((s >> (i - 1)) & 1U) v += (2.0 * r / L) * (1.0 + 0.1 * (i - 1) / L);
        }
        init[s] = v;
    }
    return init;
}

EstimationResult em_estimate(const ChannelConfig& config, const PilotConfig& pilots, const ObservationSequence& obs,
                             const std::vector<double>& init, const EstimationOptions& options) {
    config.validate();
    pilots.validate(config);
    const int T = chip_count(config);
    if (obs.size() != static_cast<std::size_t>(T))
        throw ConfigError("observations", "expected " + std::to_string(T) + " chips, got " + std::to_string(obs.size()));
    const std::size_t S = static_cast<std::size_t>(config.num_states());
    if (init.size() != S) throw InitError("initial rates need one entry per state (2^L)");
    for (std::size_t s = 0; s < S; ++s) {
        if (!(init[s] >= 0.0) || !std::isfinite(init[s]))
            throw InitError("initial rate of state " + std::to_string(s) + " must be finite and >= 0");
    }
    if (options.max_iters < 1) throw ConfigError("max_iters", "must be >= 1");

    const int Lp = pilots.num_pilot_layers;
    const std::uint32_t free_mask = ((1U << config.num_layers) - 1U) & ~((1U << Lp) - 1U);
    std::vector<std::uint32_t> free_states;  // subsets of free_mask
    for (std::uint32_t s = 0; s < S; ++s) {
        if ((s & ~free_mask) == 0) free_states.push_back(s);
    }
    // The ordering condition only constrains states that compete in a chip.
    for (std::size_t a = 0; a < S; ++a) {
        for (std::size_t b = a + 1; b < S; ++b) {
            if (((a ^ b) & ~free_mask) == 0 && init[a] == init[b])
                throw InitError("initial rates of states " + std::to_string(a) + " and " + std::to_string(b) +
                                " are equal; EM cannot separate them");
        }
    }

    std::vector<std::uint32_t> base(static_cast<std::size_t>(T));
    std::vector<double> tau(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) {
        base[static_cast<std::size_t>(t - 1)] = pilot_state(config, pilots, t);
        tau[static_cast<std::size_t>(t - 1)] = chip_duration(config, t);
    }
    const double floor = std::max(1e-3 * mean_rate(config, obs), 1e-12);
    const double log_weight = -std::log(static_cast<double>(free_states.size()));

    std::vector<double> num(S), den(S), logp(free_states.size());
    // E-step sufficient statistics and the mixture log-likelihood at `lam`.
    auto e_step = [&](const std::vector<double>& lam) {
        std::fill(num.begin(), num.end(), 0.0);
        std::fill(den.begin(), den.end(), 0.0);
        double ll = 0.0;
        for (std::size_t t = 0; t < base.size(); ++t) {
            const double n = obs.counts[t];
            double peak = -std::numeric_limits<double>::infinity();
            for (std::size_t f = 0; f < free_states.size(); ++f) {
                const double mu = tau[t] * lam[base[t] | free_states[f]];
                double lp;
                if (mu > 0.0) {
                    lp = n * std::log(mu) - mu - std::lgamma(n + 1.0);
                } else {
                    lp = n == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
                }
                logp[f] = lp;
                peak = std::max(peak, lp);
            }
            if (!std::isfinite(peak))
                throw DegenerateLikelihood("chip " + std::to_string(t + 1) + ": count " + std::to_string(obs.counts[t]) +
                                           " impossible under every allowed state");
            double z = 0.0;
            for (double& lp : logp) {
                lp = std::exp(lp - peak);
                z += lp;
            }
            ll += peak + std::log(z) + log_weight;
            for (std::size_t f = 0; f < free_states.size(); ++f) {
                const double q = logp[f] / z;
                const std::uint32_t s = base[t] | free_states[f];
                num[s] += q * n;
                den[s] += q * tau[t];
            }
        }
        if (!std::isfinite(ll)) throw DegenerateLikelihood("non-finite log-likelihood");
        return ll;
    };

    EstimationResult result;
    std::vector<double> lam = init;
    double ll = e_step(lam);
    result.trajectory.push_back({0, lam, ll, 0.0});
    const bool exact = free_states.size() == 1;  // posteriors are indicators
    for (int v = 1; v <= options.max_iters; ++v) {
        std::vector<double> next = lam;
        double change = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            if (den[s] > 0.0) next[s] = num[s] / den[s];
            change = std::max(change, std::abs(next[s] - lam[s]) / std::max(std::abs(lam[s]), floor));
        }
        lam = std::move(next);
        ll = e_step(lam);
        result.trajectory.push_back({v, lam, ll, change});
        result.iterations_run = v;
        if (exact || change < options.tol) {
            result.converged = true;
            break;
        }
    }
    result.lambda_hat = lam;
    return result;
}

std::vector<double> recover_layer_rates(int num_layers, const std::vector<double>& state_rates) {
    const std::size_t S = std::size_t{1} << num_layers;
    if (num_layers < 1 || state_rates.size() != S) throw ConfigError("rates", "expected 2^L state rates");
    Eigen::MatrixXd A(static_cast<Eigen::Index>(S), num_layers + 1);
    Eigen::VectorXd b(static_cast<Eigen::Index>(S));
    for (std::size_t s = 0; s < S; ++s) {
        const auto r = static_cast<Eigen::Index>(s);
        A(r, 0) = 1.0;
        for (int i = 1; i <= num_layers; ++i) A(r, i) = static_cast<double>((s >> (i - 1)) & 1U);
        b(r) = state_rates[s];
    }
    const Eigen::VectorXd x = A.colPivHouseholderQr().solve(b);
    return {x.data(), x.data() + x.size()};
}

}  // namespace superpose
