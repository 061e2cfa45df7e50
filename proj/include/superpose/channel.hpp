#pragma once

// Superimposed multi-layer on-off keying over a discrete Poisson channel.
//
// Index conventions used throughout the library: chips t run 1..T, layers k
// run 1..L and symbols j run 1..M. Symbol indices 0 and M+1 denote the
// virtual boundary symbols, which are always 0. Containers (Matrix) are
// 0-based; the helpers below translate.

#include <cstdint>
#include <vector>

#include "superpose/matrix.hpp"

namespace superpose {

/// Static description of the superimposed link.
struct ChannelConfig {
    int num_layers = 1;                // L
    int num_symbols = 1;               // M, symbols per layer
    std::vector<double> delays;        // rho_1..rho_L, normalized to one symbol duration
    std::vector<double> layer_rates;   // lambda_1..lambda_L, photoelectrons per symbol duration
    double background_rate = 0.0;      // lambda_0
    Matrix<double> priors;             // L x M, P(z = 1)
    /// Symbol boundaries of all layers coincide: M chips of width 1, every
    /// layer's j-th symbol active in chip j.
    bool aligned = false;

    /// Equal rates, symmetric delays and a uniform prior.
    static ChannelConfig symmetric(int layers, int symbols, double lambda, double background,
                                   double prior = 0.5, bool aligned = false);

    /// Throws ConfigError naming the first violated field.
    void validate() const;

    int num_states() const noexcept { return 1 << num_layers; }
};

/// Fixed bijection between B^L and [0, 2^L): layer k is bit k-1.
class StateVector {
public:
    StateVector() = default;
    StateVector(std::uint32_t index, int num_layers) : index_(index), num_layers_(num_layers) {}

    static StateVector from_bits(const std::vector<int>& bits);

    std::uint32_t index() const noexcept { return index_; }
    int num_layers() const noexcept { return num_layers_; }
    /// Component for layer k (1-based).
    int bit(int layer) const noexcept { return static_cast<int>((index_ >> (layer - 1)) & 1U); }
    std::vector<int> bits() const;

    bool operator==(const StateVector&) const = default;

private:
    std::uint32_t index_ = 0;
    int num_layers_ = 0;
};

/// Transmitted L x M binary symbol matrix.
struct LayerSymbols {
    Matrix<std::uint8_t> bits;

    LayerSymbols() = default;
    LayerSymbols(int layers, int symbols) : bits(layers, symbols, 0) {}
    explicit LayerSymbols(Matrix<std::uint8_t> b) : bits(std::move(b)) {}

    int num_layers() const noexcept { return static_cast<int>(bits.rows()); }
    int num_symbols() const noexcept { return static_cast<int>(bits.cols()); }

    /// z_{k,j}; boundary and out-of-range symbols read as 0.
    int symbol(int layer, int j) const noexcept {
        if (j < 1 || j > num_symbols()) return 0;
        return bits(layer - 1, j - 1);
    }
};

/// Per-chip photoelectron counts.
struct ObservationSequence {
    std::vector<std::uint32_t> counts;

    std::size_t size() const noexcept { return counts.size(); }
    bool operator==(const ObservationSequence&) const = default;
};

/// First and last chip (inclusive) during which a symbol is active.
struct ChipSpan {
    int first;
    int last;
};

/// T = M L + L - 1 (M when aligned).
int chip_count(const ChannelConfig& config);

/// Index of the symbol of layer k active in chip t; 0 or M+1 on the boundary.
int symbol_index(const ChannelConfig& config, int t, int layer);

/// Chips covered by symbol j of layer k.
ChipSpan symbol_span(const ChannelConfig& config, int layer, int j);

/// P(z_{k,j} = 1) with boundary symbols reading 0.
double symbol_prior(const ChannelConfig& config, int layer, int j);

/// Bit mask of the layers whose active symbol changes between chips t and t+1.
std::uint32_t changed_layers(const ChannelConfig& config, int t);

StateVector state_at_chip(const ChannelConfig& config, const LayerSymbols& symbols, int t);

/// Width of chip t in symbol durations.
double chip_duration(const ChannelConfig& config, int t);

/// lambda_0 + sum_k lambda_k s_k.
double state_rate(const ChannelConfig& config, StateVector s);
double state_rate(const ChannelConfig& config, std::uint32_t state);

LayerSymbols sample_symbols(const ChannelConfig& config, std::uint64_t seed);

ObservationSequence sample_observations(const ChannelConfig& config, const LayerSymbols& symbols,
                                        std::uint64_t seed);

}  // namespace superpose
