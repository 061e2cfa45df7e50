#pragma once

#include <vector>

#include "superpose/channel.hpp"
#include "superpose/matrix.hpp"

namespace superpose {

/// Total Poisson rate per state index (background included), 2^L entries.
using RateTable = std::vector<double>;

RateTable true_rate_table(const ChannelConfig& config);

struct DetectionOutput {
    LayerSymbols hard_bits;
    Matrix<double> posteriors;  // P(z = 1 | N_T), L x M; empty for Viterbi
    double path_metric = 0.0;   // Viterbi only
};

/// sum_t N_t log(tau_t lambda_{S_t}) - tau_t lambda_{S_t} for the path of `symbols`.
double viterbi_metric(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs,
                      const LayerSymbols& symbols);

/// Maximum-likelihood state path over transitions with nonzero probability.
/// Ties go to the smallest state index, at the last chip and at every
/// traceback step.
DetectionOutput viterbi_detect(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs);

/// Per-symbol posteriors from the trellis state posteriors. Hard bits are
/// posterior > 0.5. Throws std::logic_error when the per-chip marginals of a
/// symbol disagree across its span by more than 1e-9.
DetectionOutput bcjr_posteriors(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs);

}  // namespace superpose
