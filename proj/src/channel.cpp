#include "superpose/channel.hpp"

#include <cmath>
#include <string>

#include "superpose/errors.hpp"
#include "superpose/rng.hpp"

namespace superpose {

namespace {

constexpr double kDelaySumTolerance = 1e-9;
constexpr int kMaxLayers = 16;

// ceil(a / b) for b > 0 and any sign of a.
int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }

std::string indexed(const char* field, std::size_t i) {
    return std::string(field) + "[" + std::to_string(i) + "]";
}

}  // namespace

ChannelConfig ChannelConfig::symmetric(int layers, int symbols, double lambda, double background,
                                       double prior, bool aligned) {
    ChannelConfig c;
    c.num_layers = layers;
    c.num_symbols = symbols;
    c.delays.assign(static_cast<std::size_t>(layers), 1.0 / layers);
    c.layer_rates.assign(static_cast<std::size_t>(layers), lambda);
    c.background_rate = background;
    c.priors = Matrix<double>(layers, symbols, prior);
    c.aligned = aligned;
    return c;
}

void ChannelConfig::validate() const {
    if (num_layers < 1) throw ConfigError("layers", "must be >= 1");
    if (num_layers > kMaxLayers) throw ConfigError("layers", "at most 16 layers are supported");
    if (num_symbols < 1) throw ConfigError("symbols_per_layer", "must be >= 1");
    const auto L = static_cast<std::size_t>(num_layers);
    if (delays.size() != L) throw ConfigError("delays", "expected one delay per layer");
    double sum = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        if (!(delays[i] > 0.0 && delays[i] <= 1.0))
            throw ConfigError(indexed("delays", i), "must lie in (0, 1]");
        sum += delays[i];
    }
    if (std::abs(sum - 1.0) > kDelaySumTolerance) throw ConfigError("delays", "must sum to 1");
    if (layer_rates.size() != L) throw ConfigError("layer_rates", "expected one rate per layer");
    for (std::size_t i = 0; i < L; ++i) {
        if (!(layer_rates[i] >= 0.0) || !std::isfinite(layer_rates[i]))
            throw ConfigError(indexed("layer_rates", i), "must be finite and >= 0");
    }
    if (!(background_rate >= 0.0) || !std::isfinite(background_rate))
        throw ConfigError("background_rate", "must be finite and >= 0");
    if (priors.rows() != L || priors.cols() != static_cast<std::size_t>(num_symbols))
        throw ConfigError("priors", "expected an L x M matrix");
    for (std::size_t i = 0; i < priors.rows(); ++i) {
        for (std::size_t j = 0; j < priors.cols(); ++j) {
            const double q = priors(i, j);
            if (!(q >= 0.0 && q <= 1.0))
                throw ConfigError("priors[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                                  "must lie in [0, 1]");
        }
    }
}

StateVector StateVector::from_bits(const std::vector<int>& bits) {
    std::uint32_t index = 0;
    for (std::size_t k = 0; k < bits.size(); ++k) {
        if (bits[k] != 0) index |= 1U << k;
    }
    return {index, static_cast<int>(bits.size())};
}

std::vector<int> StateVector::bits() const {
    std::vector<int> out(static_cast<std::size_t>(num_layers_));
    for (int k = 1; k <= num_layers_; ++k) out[static_cast<std::size_t>(k - 1)] = bit(k);
    return out;
}

int chip_count(const ChannelConfig& config) {
    if (config.aligned) return config.num_symbols;
    return config.num_symbols * config.num_layers + config.num_layers - 1;
}

int symbol_index(const ChannelConfig& config, int t, int layer) {
    if (config.aligned) return t;
    return ceil_div(t - layer + 1, config.num_layers);
}

ChipSpan symbol_span(const ChannelConfig& config, int layer, int j) {
    if (config.aligned) return {j, j};
    const int L = config.num_layers;
    return {layer + (j - 1) * L, layer + j * L - 1};
}

double symbol_prior(const ChannelConfig& config, int layer, int j) {
    if (j < 1 || j > config.num_symbols) return 0.0;
    return config.priors(static_cast<std::size_t>(layer - 1), static_cast<std::size_t>(j - 1));
}

std::uint32_t changed_layers(const ChannelConfig& config, int t) {
    if (config.aligned) return (1U << config.num_layers) - 1U;
    return 1U << (t % config.num_layers);
}

StateVector state_at_chip(const ChannelConfig& config, const LayerSymbols& symbols, int t) {
    const int T = chip_count(config);
    if (t < 1 || t > T)
        throw IndexError("chip index " + std::to_string(t) + " outside [1, " + std::to_string(T) + "]");
    std::uint32_t index = 0;
    for (int k = 1; k <= config.num_layers; ++k) {
        if (symbols.symbol(k, symbol_index(config, t, k)) != 0) index |= 1U << (k - 1);
    }
    return {index, config.num_layers};
}

double chip_duration(const ChannelConfig& config, int t) {
    if (config.aligned) return 1.0;
    return config.delays[static_cast<std::size_t>((t - 1) % config.num_layers)];
}

double state_rate(const ChannelConfig& config, std::uint32_t state) {
    double rate = config.background_rate;
    for (int k = 0; k < config.num_layers; ++k) {
        if ((state >> k) & 1U) rate += config.layer_rates[static_cast<std::size_t>(k)];
    }
    return rate;
}

double state_rate(const ChannelConfig& config, StateVector s) { return state_rate(config, s.index()); }

LayerSymbols sample_symbols(const ChannelConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    LayerSymbols out(config.num_layers, config.num_symbols);
    for (std::size_t i = 0; i < config.priors.rows(); ++i) {
        for (std::size_t j = 0; j < config.priors.cols(); ++j) {
            out.bits(i, j) = rng.bernoulli(config.priors(i, j)) ? 1 : 0;
        }
    }
    return out;
}

ObservationSequence sample_observations(const ChannelConfig& config, const LayerSymbols& symbols,
                                        std::uint64_t seed) {
    Rng rng(seed);
    const int T = chip_count(config);
    ObservationSequence obs;
    obs.counts.resize(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) {
        const double mean = chip_duration(config, t) * state_rate(config, state_at_chip(config, symbols, t));
        obs.counts[static_cast<std::size_t>(t - 1)] = rng.poisson(mean);
    }
    return obs;
}

}  // namespace superpose
