#include "superpose/turbo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "superpose/errors.hpp"
#include "superpose/parallel.hpp"
#include "superpose/rng.hpp"

namespace superpose {

double clamp_llr(double x) {
    if (std::isnan(x)) return 0.0;
    return std::clamp(x, -kLlrClamp, kLlrClamp);
}

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_odds(double p) {
    if (p <= 0.0) return -kLlrClamp;
    if (p >= 1.0) return kLlrClamp;
    return clamp_llr(std::log(p) - std::log1p(-p));
}

double prior_log_odds(double q) { return log_odds(q); }

SoftInfo detector_llr(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs,
                      const Matrix<double>* symbol_prob) {
    config.validate();
    const int L = config.num_layers;
    const int M = config.num_symbols;
    const int T = chip_count(config);
    if (rates.size() != static_cast<std::size_t>(config.num_states()))
        throw ConfigError("rates", "expected one rate per state (2^L entries)");
    if (obs.size() != static_cast<std::size_t>(T))
        throw ConfigError("observations", "expected " + std::to_string(T) + " chips, got " + std::to_string(obs.size()));
    if (symbol_prob && (symbol_prob->rows() != static_cast<std::size_t>(L) || symbol_prob->cols() != static_cast<std::size_t>(M)))
        throw ConfigError("extrinsic", "expected an L x M matrix");

    const std::uint32_t S = static_cast<std::uint32_t>(config.num_states());
    SoftInfo out;
    out.values = Matrix<double>(static_cast<std::size_t>(L), static_cast<std::size_t>(M), 0.0);
    std::vector<double> loglik(S), p1(static_cast<std::size_t>(L));

    for (int t = 1; t <= T; ++t) {
        const double tau = chip_duration(config, t);
        const double n = obs.counts[static_cast<std::size_t>(t - 1)];
        double peak = -std::numeric_limits<double>::infinity();
        for (std::uint32_t s = 0; s < S; ++s) {
            const double mu = tau * rates[s];
            loglik[s] = mu > 0.0 ? n * std::log(mu) - mu : (n == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity());
            peak = std::max(peak, loglik[s]);
        }
        if (!std::isfinite(peak)) continue;  // impossible chip carries no usable information
        for (auto& x : loglik) x = std::exp(x - peak);

        // P(z = 1) of the symbol each layer has active in this chip.
        for (int j = 1; j <= L; ++j) {
            const int idx = symbol_index(config, t, j);
            double p = 0.0;
            if (idx >= 1 && idx <= M) {
                p = symbol_prob ? (*symbol_prob)(static_cast<std::size_t>(j - 1), static_cast<std::size_t>(idx - 1))
                                : symbol_prior(config, j, idx);
            }
            p1[static_cast<std::size_t>(j - 1)] = p;
        }
        for (int k = 1; k <= L; ++k) {
            const int i = symbol_index(config, t, k);
            if (i < 1 || i > M) continue;
            const std::uint32_t bit = 1U << (k - 1);
            double e0 = 0.0, e1 = 0.0;
            for (std::uint32_t s = 0; s < S; ++s) {
                double w = loglik[s];
                for (int j = 1; j <= L && w > 0.0; ++j) {
                    if (j == k) continue;
                    const double p = p1[static_cast<std::size_t>(j - 1)];
                    w *= ((s >> (j - 1)) & 1U) ? p : 1.0 - p;
                }
                if (s & bit) {
                    e1 += w;
                } else {
                    e0 += w;
                }
            }
            double term;
            if (e1 > 0.0 && e0 > 0.0) {
                term = std::log(e1) - std::log(e0);
            } else if (e1 > 0.0) {
                term = kLlrClamp;
            } else if (e0 > 0.0) {
                term = -kLlrClamp;
            } else {
                term = 0.0;
            }
            out.values(static_cast<std::size_t>(k - 1), static_cast<std::size_t>(i - 1)) += term;
        }
    }
    for (auto& x : out.values.data()) x = clamp_llr(x);
    return out;
}

double feedback_probability(double decoder_value, double prior, DecodeMode mode, MlPosteriorForm form) {
    const double x = clamp_llr(decoder_value);
    if (mode == DecodeMode::MAP) return logistic(x);
    if (form == MlPosteriorForm::Standard) return logistic(clamp_llr(x + prior_log_odds(prior)));
    if (prior >= 1.0) return 1.0;
    if (prior <= 0.0) return 0.0;
    return logistic(clamp_llr(prior / (1.0 - prior) * x));
}

TurboResult joint_decode(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs,
                         std::span<const LdpcCode> codes, const TurboOptions& options) {
    config.validate();
    const int L = config.num_layers;
    const int M = config.num_symbols;
    if (codes.size() != static_cast<std::size_t>(L)) throw ConfigError("codes", "expected one code per layer");
    for (std::size_t k = 0; k < codes.size(); ++k) {
        if (codes[k].n() != M)
            throw ConfigError("codes[" + std::to_string(k) + "]", "code length " + std::to_string(codes[k].n()) +
                                                                      " differs from symbols_per_layer " + std::to_string(M));
    }
    if (options.global_iters < 1) throw ConfigError("global_iters", "must be >= 1");

    TurboResult res;
    res.codewords = LayerSymbols(L, M);
    int best_total = std::numeric_limits<int>::max();
    Matrix<double> probs;
    bool have_probs = false;
    std::vector<double> input(static_cast<std::size_t>(M));

    for (int v = 1; v <= options.global_iters; ++v) {
        SoftInfo soft;
        if (v == 1 && options.bcjr_init && options.mode == DecodeMode::MAP) {
            const DetectionOutput d = bcjr_posteriors(config, rates, obs);
            soft.values = Matrix<double>(static_cast<std::size_t>(L), static_cast<std::size_t>(M));
            for (std::size_t i = 0; i < soft.values.data().size(); ++i) soft.values.data()[i] = log_odds(d.posteriors.data()[i]);
            soft.kind = SoftKind::LAR;
        } else {
            soft = detector_llr(config, rates, obs, have_probs ? &probs : nullptr);
            if (options.mode == DecodeMode::MAP) {
                for (int k = 1; k <= L; ++k) {
                    for (int j = 1; j <= M; ++j) {
                        double& x = soft.values(static_cast<std::size_t>(k - 1), static_cast<std::size_t>(j - 1));
                        x = clamp_llr(x + prior_log_odds(symbol_prior(config, k, j)));
                    }
                }
                soft.kind = SoftKind::LAR;
            }
        }
        soft.iteration = v - 1;

        TurboIteration record;
        record.iteration = v;
        Matrix<double> next(static_cast<std::size_t>(L), static_cast<std::size_t>(M));
        LayerSymbols hard(L, M);
        bool all_ok = true;
        for (int k = 0; k < L; ++k) {
            const auto row = soft.values.row(static_cast<std::size_t>(k));
            std::copy(row.begin(), row.end(), input.begin());
            const LdpcDecodeResult dec =
                ldpc_decode(codes[static_cast<std::size_t>(k)], input, options.ldpc_iters, options.min_sum_scale);
            record.unsatisfied.push_back(dec.unsatisfied_checks);
            record.total_unsatisfied += dec.unsatisfied_checks;
            all_ok = all_ok && dec.converged;
            for (int j = 0; j < M; ++j) {
                hard.bits(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) = dec.bits[static_cast<std::size_t>(j)];
                double value = dec.posterior_llr[static_cast<std::size_t>(j)];
                if (options.extrinsic_feedback) value -= input[static_cast<std::size_t>(j)];
                double prior = symbol_prior(config, k + 1, j + 1);
                if (options.extrinsic_feedback && options.mode == DecodeMode::MAP)
                    value += prior_log_odds(prior);
                next(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) =
                    feedback_probability(value, prior, options.mode, options.ml_form);
            }
        }
        res.history.push_back(record);
        res.decoder_inputs.push_back(std::move(soft));
        res.iterations_run = v;
        if (record.total_unsatisfied <= best_total) {
            best_total = record.total_unsatisfied;
            res.codewords = hard;
            res.reported_iteration = v;
        }
        if (all_ok) {
            res.converged = true;
            break;
        }
        probs = std::move(next);
        have_probs = true;
    }
    for (int k = 0; k < L; ++k) {
        std::vector<std::uint8_t> word(static_cast<std::size_t>(M));
        for (int j = 0; j < M; ++j) word[static_cast<std::size_t>(j)] = res.codewords.bits(static_cast<std::size_t>(k), static_cast<std::size_t>(j));
        res.info.push_back(codes[static_cast<std::size_t>(k)].extract_info(word));
    }
    return res;
}

TurboResult joint_decode(const ChannelConfig& config, const RateTable& rates, const ObservationSequence& obs,
                         const LdpcCode& code, const TurboOptions& options) {
    const std::vector<LdpcCode> codes(static_cast<std::size_t>(config.num_layers), code);
    return joint_decode(config, rates, obs, codes, options);
}

BerPoint simulate_ber(const ChannelConfig& templ, const LdpcCode& code, double lambda_ave, const BerOptions& options) {
    templ.validate();
    if (options.frames < 1) throw ConfigError("frames", "must be >= 1");
    if (!(lambda_ave >= 0.0)) throw ConfigError("lambda_ave", "must be >= 0");
    ChannelConfig config = ChannelConfig::symmetric(templ.num_layers, code.n(), lambda_ave, templ.background_rate, 0.5,
                                                    templ.aligned);
    config.delays = templ.delays;
    config.validate();
    const RateTable rates = true_rate_table(config);
    const std::vector<LdpcCode> codes(static_cast<std::size_t>(config.num_layers), code);
    const int L = config.num_layers;
    const auto frames = static_cast<std::size_t>(options.frames);
    std::vector<std::int64_t> sym_err(frames), bit_err(frames);

    parallel_for(frames, options.workers, [&](std::size_t f) {
        const Rng base = Rng(options.seed).split(f);
        Rng info_rng = base.split(0);
        LayerSymbols z(L, code.n());
        std::vector<std::vector<std::uint8_t>> info(static_cast<std::size_t>(L));
        for (int k = 0; k < L; ++k) {
            auto& u = info[static_cast<std::size_t>(k)];
            u.resize(static_cast<std::size_t>(code.k()));
            for (auto& b : u) b = info_rng.bernoulli(0.5) ? 1 : 0;
            const auto word = code.encode(u);
            for (int j = 0; j < code.n(); ++j) z.bits(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) = word[static_cast<std::size_t>(j)];
        }
        const ObservationSequence obs = sample_observations(config, z, base.split(1).seed());

        const DetectionOutput det = options.turbo.mode == DecodeMode::MAP ? bcjr_posteriors(config, rates, obs)
                                                                           : viterbi_detect(config, rates, obs);
        std::int64_t se = 0;
        for (std::size_t i = 0; i < z.bits.data().size(); ++i) se += det.hard_bits.bits.data()[i] != z.bits.data()[i];

        const TurboResult dec = joint_decode(config, rates, obs, codes, options.turbo);
        std::int64_t be = 0;
        for (int k = 0; k < L; ++k) {
            const auto& a = dec.info[static_cast<std::size_t>(k)];
            const auto& b = info[static_cast<std::size_t>(k)];
            for (std::size_t i = 0; i < a.size(); ++i) be += a[i] != b[i];
        }
        sym_err[f] = se;
        bit_err[f] = be;
    });

    BerPoint p;
    p.lambda_ave = lambda_ave;
    p.frames = options.frames;
    p.symbols = static_cast<std::int64_t>(frames) * L * code.n();
    p.bits = static_cast<std::int64_t>(frames) * L * code.k();
    for (std::size_t f = 0; f < frames; ++f) {
        p.symbol_errors += sym_err[f];
        p.bit_errors += bit_err[f];
    }
    p.uncoded_ser = static_cast<double>(p.symbol_errors) / static_cast<double>(p.symbols);
    p.coded_ber = static_cast<double>(p.bit_errors) / static_cast<double>(p.bits);
    return p;
}

}  // namespace superpose
