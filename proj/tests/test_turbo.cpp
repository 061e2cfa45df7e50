#include <doctest.h>

#include <cmath>

#include "superpose/errors.hpp"
#include "superpose/rng.hpp"
#include "superpose/turbo.hpp"

using namespace superpose;

namespace {

double pois_log(double mean, double n) { return n * std::log(mean) - mean - std::lgamma(n + 1.0); }

struct Frame {
    ChannelConfig config;
    LayerSymbols z;
    std::vector<std::vector<std::uint8_t>> info;
    ObservationSequence obs;
};

Frame coded_frame(const LdpcCode& code, int layers, double lambda, std::uint64_t seed) {
    Frame f;
    f.config = ChannelConfig::symmetric(layers, code.n(), lambda, 0.01);
    f.z = LayerSymbols(layers, code.n());
    Rng rng(seed);
    for (int k = 0; k < layers; ++k) {
        std::vector<std::uint8_t> u(static_cast<std::size_t>(code.k()));
        for (auto& b : u) b = rng.bernoulli(0.5) ? 1 : 0;
        const auto w = code.encode(u);
        for (int j = 0; j < code.n(); ++j) f.z.bits(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) = w[static_cast<std::size_t>(j)];
        f.info.push_back(u);
    }
    f.obs = sample_observations(f.config, f.z, seed + 1);
    return f;
}

}  // namespace

TEST_CASE("log-ratio helpers") {
    CHECK(logistic(0.0) == 0.5);
    CHECK(logistic(-800.0) == 0.0);
    CHECK(logistic(800.0) == 1.0);
    CHECK(logistic(2.0) + logistic(-2.0) == doctest::Approx(1.0));
    CHECK(log_odds(0.5) == 0.0);
    CHECK(log_odds(0.0) == -kLlrClamp);
    CHECK(log_odds(1.0) == kLlrClamp);
    CHECK(log_odds(logistic(3.0)) == doctest::Approx(3.0));
    CHECK(clamp_llr(1e9) == kLlrClamp);
    CHECK(clamp_llr(std::nan("")) == 0.0);
}

TEST_CASE("feedback probability forms") {
    CHECK(feedback_probability(1.5, 0.3, DecodeMode::MAP, MlPosteriorForm::AsPrinted) == doctest::Approx(logistic(1.5)));
    CHECK(feedback_probability(1.5, 0.3, DecodeMode::ML, MlPosteriorForm::Standard) ==
          doctest::Approx(logistic(1.5 + std::log(0.3 / 0.7))));
    CHECK(feedback_probability(1.5, 0.3, DecodeMode::ML, MlPosteriorForm::AsPrinted) ==
          doctest::Approx(logistic(0.3 / 0.7 * 1.5)));
    // With a uniform prior both ML forms agree.
    CHECK(feedback_probability(-2.0, 0.5, DecodeMode::ML, MlPosteriorForm::AsPrinted) ==
          doctest::Approx(feedback_probability(-2.0, 0.5, DecodeMode::ML, MlPosteriorForm::Standard)));
}

TEST_CASE("detector LLR of a single layer") {
    auto c = ChannelConfig::symmetric(1, 6, 3.0, 0.2);
    ObservationSequence obs;
    obs.counts = {0, 1, 2, 3, 4, 9};
    const auto s = detector_llr(c, true_rate_table(c), obs);
    CHECK(s.kind == SoftKind::LLR);
    for (int j = 0; j < 6; ++j) {
        const double n = obs.counts[static_cast<std::size_t>(j)];
        CHECK(s.values(0, static_cast<std::size_t>(j)) == doctest::Approx(pois_log(3.2, n) - pois_log(0.2, n)));
    }
}

TEST_CASE("detector LLR averages the interferer") {
    auto c = ChannelConfig::symmetric(2, 3, 2.0, 0.1);
    c.layer_rates = {2.0, 3.0};
    c.delays = {0.4, 0.6};
    ObservationSequence obs;
    obs.counts = {1, 0, 4, 2, 3, 0, 1};
    Matrix<double> p(2, 3);
    p(0, 0) = 0.1;
    p(0, 1) = 0.6;
    p(0, 2) = 0.9;
    p(1, 0) = 0.3;
    p(1, 1) = 0.5;
    p(1, 2) = 0.8;
    const RateTable rates = true_rate_table(c);
    const auto s = detector_llr(c, rates, obs, &p);
    // Reference: explicit per-chip mixture over the other layer's symbol.
    Matrix<double> ref(2, 3, 0.0);
    for (int t = 1; t <= chip_count(c); ++t) {
        const double tau = chip_duration(c, t), n = obs.counts[static_cast<std::size_t>(t - 1)];
        for (int k = 1; k <= 2; ++k) {
            const int o = 3 - k;
            const int i = symbol_index(c, t, k), io = symbol_index(c, t, o);
            if (i < 1 || i > 3) continue;
            const double po = (io >= 1 && io <= 3) ? p(static_cast<std::size_t>(o - 1), static_cast<std::size_t>(io - 1)) : 0.0;
            const double lk = c.layer_rates[static_cast<std::size_t>(k - 1)], lo = c.layer_rates[static_cast<std::size_t>(o - 1)];
            const double e1 = po * std::exp(pois_log(tau * (0.1 + lk + lo), n)) + (1 - po) * std::exp(pois_log(tau * (0.1 + lk), n));
            const double e0 = po * std::exp(pois_log(tau * (0.1 + lo), n)) + (1 - po) * std::exp(pois_log(tau * 0.1, n));
            ref(static_cast<std::size_t>(k - 1), static_cast<std::size_t>(i - 1)) += std::log(e1 / e0);
        }
    }
    for (std::size_t i = 0; i < 6; ++i) CHECK(s.values.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-10));
    Matrix<double> wrong(1, 3);
    CHECK_THROWS_AS(detector_llr(c, rates, obs, &wrong), ConfigError);
}

TEST_CASE("detector LLR is clamped") {
    auto c = ChannelConfig::symmetric(1, 2, 500.0, 0.0);
    ObservationSequence obs;
    obs.counts = {0, 480};
    const auto s = detector_llr(c, true_rate_table(c), obs);
    CHECK(s.values(0, 0) == -kLlrClamp);
    CHECK(s.values(0, 1) == kLlrClamp);
}

TEST_CASE("joint decoding at high signal") {
    const auto code = LdpcCode::quasi_cyclic(4, 8, 32, 3, 11);
    const Frame f = coded_frame(code, 2, 30.0, 5);
    for (DecodeMode mode : {DecodeMode::MAP, DecodeMode::ML}) {
        TurboOptions o;
        o.mode = mode;
        const auto r = joint_decode(f.config, true_rate_table(f.config), f.obs, code, o);
        CHECK(r.converged);
        CHECK(r.codewords.bits == f.z.bits);
        CHECK(r.info == f.info);
        CHECK(r.decoder_inputs.front().kind == (mode == DecodeMode::MAP ? SoftKind::LAR : SoftKind::LLR));
    }
}

TEST_CASE("turbo bookkeeping") {
    const auto code = LdpcCode::quasi_cyclic(4, 8, 32, 3, 11);
    const Frame f = coded_frame(code, 2, 2.5, 9);
    for (bool bcjr : {false, true}) {
        TurboOptions o;
        o.global_iters = 4;
        o.bcjr_init = bcjr;
        const auto r = joint_decode(f.config, true_rate_table(f.config), f.obs, code, o);
        CHECK(r.history.size() == static_cast<std::size_t>(r.iterations_run));
        CHECK(r.decoder_inputs.size() == r.history.size());
        int best = r.history.front().total_unsatisfied;
        int at = 1;
        for (const auto& h : r.history) {
            if (h.total_unsatisfied <= best) {
                best = h.total_unsatisfied;
                at = h.iteration;
            }
        }
        CHECK(r.reported_iteration == at);
        CHECK(r.converged == (r.history.back().total_unsatisfied == 0));
        for (int k = 0; k < 2; ++k) {
            std::vector<std::uint8_t> w(r.codewords.bits.row(static_cast<std::size_t>(k)).begin(),
                                        r.codewords.bits.row(static_cast<std::size_t>(k)).end());
            CHECK(r.info[static_cast<std::size_t>(k)] == code.extract_info(w));
        }
    }
    ChannelConfig wrong = f.config;
    wrong.num_symbols = 10;
    wrong.priors = Matrix<double>(2, 10, 0.5);
    ObservationSequence obs;
    obs.counts.assign(static_cast<std::size_t>(chip_count(wrong)), 0);
    CHECK_THROWS_AS(joint_decode(wrong, true_rate_table(wrong), obs, code), ConfigError);
}

TEST_CASE("BER simulation") {
    const auto code = LdpcCode::quasi_cyclic(4, 8, 32, 3, 11);
    const auto templ = ChannelConfig::symmetric(2, 10, 1.0, 0.01);
    BerOptions o;
    o.frames = 6;
    o.seed = 4;
    const auto a = simulate_ber(templ, code, 3.0, o);
    o.workers = 3;
    const auto b = simulate_ber(templ, code, 3.0, o);
    CHECK(a.symbol_errors == b.symbol_errors);
    CHECK(a.bit_errors == b.bit_errors);
    CHECK(a.symbols == 6 * 2 * 256);
    CHECK(a.bits == 6 * 2 * code.k());
    const auto clean = simulate_ber(templ, code, 40.0, o);
    // Equal layer rates leave some count sequences ambiguous even without
    // noise, so the uncoded rate does not reach zero.
    CHECK(clean.uncoded_ser < 0.01);
    CHECK(clean.coded_ber == 0.0);
    o.frames = 0;
    CHECK_THROWS_AS(simulate_ber(templ, code, 3.0, o), ConfigError);
}

TEST_CASE("ML and MAP coincide under uniform priors") {
    const auto code = LdpcCode::quasi_cyclic(4, 8, 32, 3, 11);
    const Frame f = coded_frame(code, 2, 2.0, 13);
    TurboOptions ml, map;
    ml.mode = DecodeMode::ML;
    map.mode = DecodeMode::MAP;
    ml.global_iters = map.global_iters = 3;
    const RateTable rates = true_rate_table(f.config);
    const auto a = joint_decode(f.config, rates, f.obs, code, ml);
    const auto b = joint_decode(f.config, rates, f.obs, code, map);
    REQUIRE(a.decoder_inputs.size() == b.decoder_inputs.size());
    for (std::size_t v = 0; v < a.decoder_inputs.size(); ++v) {
        const auto& x = a.decoder_inputs[v].values.data();
        const auto& y = b.decoder_inputs[v].values.data();
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i] == doctest::Approx(y[i]).epsilon(1e-12));
    }
    CHECK(a.codewords.bits == b.codewords.bits);
}

TEST_CASE("first LAR is the detector LLR plus the prior log-odds") {
    const auto code = LdpcCode::quasi_cyclic(4, 8, 32, 3, 11);
    Frame f = coded_frame(code, 2, 3.0, 17);
    Rng rng(1);
    for (auto& q : f.config.priors.data()) q = 0.2 + 0.6 * rng.uniform();
    const RateTable rates = true_rate_table(f.config);
    TurboOptions o;
    o.global_iters = 1;
    const auto r = joint_decode(f.config, rates, f.obs, code, o);
    const auto llr = detector_llr(f.config, rates, f.obs);
    for (std::size_t i = 0; i < llr.values.data().size(); ++i) {
        const double q = f.config.priors.data()[i];
        CHECK(r.decoder_inputs[0].values.data()[i] ==
              doctest::Approx(clamp_llr(llr.values.data()[i] + std::log(q / (1 - q)))).epsilon(1e-12));
    }
}
