#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "superpose/channel.hpp"
#include "superpose/detection.hpp"
#include "superpose/ldpc.hpp"
#include "superpose/matrix.hpp"

namespace superpose {

inline constexpr double kLlrClamp = 50.0;

enum class SoftKind { LLR, LAR };

/// Per-symbol log-ratios, L x M.
struct SoftInfo {
    Matrix<double> values;
    SoftKind kind = SoftKind::LLR;
    int iteration = 0;
};

double clamp_llr(double x);
double logistic(double x);
/// log(p / (1 - p)), clamped to +-kLlrClamp.
double log_odds(double p);
/// log(q / (1 - q)) for a prior, clamped.
double prior_log_odds(double q);

/// Per-symbol LLR log P(N | z = 1) / P(N | z = 0) summed over the symbol's
/// chips. Interfering symbols are averaged with `symbol_prob` (P(z = 1) per
/// layer and symbol) when given, otherwise with their priors. The layer's
/// own entry in `symbol_prob` is not used. Values are clamped to +-50.
SoftInfo detector_llr(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs,
                      const Matrix<double>* symbol_prob = nullptr);

enum class DecodeMode { ML, MAP };

/// How ML mode turns a decoder LLR x into P(z = 1) for the next pass.
enum class MlPosteriorForm {
    AsPrinted,  // logistic((q / (1 - q)) * x)
    Standard,   // logistic(x + log(q / (1 - q)))
};

struct TurboOptions {
    DecodeMode mode = DecodeMode::MAP;
    int global_iters = 5;
    int ldpc_iters = 25;
    double min_sum_scale = 0.75;
    MlPosteriorForm ml_form = MlPosteriorForm::AsPrinted;
    bool extrinsic_feedback = false;  // feed back decoder output minus decoder input
    bool bcjr_init = false;           // MAP only: first LAR from trellis posteriors
};

/// Probability P(z = 1) a decoder output implies for the next detector pass.
double feedback_probability(double decoder_value, double prior, DecodeMode mode, MlPosteriorForm form);

struct TurboIteration {
    int iteration = 0;
    std::vector<int> unsatisfied;  // per layer
    int total_unsatisfied = 0;
};

struct TurboResult {
    LayerSymbols codewords;                          // hard decisions of the reported iterate
    std::vector<std::vector<std::uint8_t>> info;     // per layer, info positions of `codewords`
    int iterations_run = 0;
    int reported_iteration = 0;                      // fewest unsatisfied checks, latest on ties
    bool converged = false;
    std::vector<TurboIteration> history;
    std::vector<SoftInfo> decoder_inputs;            // LLR (ML) or LAR (MAP) fed to the decoders
};

/// Iterative detection and decoding, one codeword per layer (M == n).
TurboResult joint_decode(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs,
                         std::span<const LdpcCode> codes, const TurboOptions& options = {});
TurboResult joint_decode(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs,
                         const LdpcCode& code, const TurboOptions& options = {});

struct BerPoint {
    double lambda_ave = 0.0;
    double uncoded_ser = 0.0;
    double coded_ber = 0.0;
    std::int64_t frames = 0;
    std::int64_t symbols = 0;      // detected symbols (uncoded)
    std::int64_t bits = 0;         // information bits (coded)
    std::int64_t symbol_errors = 0;
    std::int64_t bit_errors = 0;
};

struct BerOptions {
    int frames = 50;
    std::uint64_t seed = 1;
    int workers = 1;
    TurboOptions turbo;
};

/// Frames of random information bits, the same code on every layer,
/// lambda_i = lambda_ave. Uncoded errors come from BCJR (MAP mode) or
/// Viterbi (ML mode) on the coded symbols; coded errors from joint_decode on
/// the information bits. `templ` supplies L, delays, background and priors;
/// its symbols_per_layer is replaced by the code length.
BerPoint simulate_ber(const ChannelConfig& templ, const LdpcCode& code, double lambda_ave, const BerOptions& options);

}  // namespace superpose
