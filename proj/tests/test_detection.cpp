#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "superpose/detection.hpp"
#include "superpose/errors.hpp"

using namespace superpose;

TEST_CASE("Viterbi attains the enumerated maximum metric") {
    for (const auto& f : oracle::fixture_set(50, 31)) {
        const RateTable rates = true_rate_table(f.config);
        const auto out = viterbi_detect(f.config, rates, f.obs);
        const double best = oracle::max_metric(f.config, rates, f.obs);
        CHECK(out.path_metric == doctest::Approx(best).epsilon(1e-10));
        CHECK(viterbi_metric(f.config, rates, f.obs, out.hard_bits) == doctest::Approx(best).epsilon(1e-10));
        CHECK(out.posteriors.rows() == 0);
    }
}

TEST_CASE("BCJR posteriors match enumeration") {
    for (const auto& f : oracle::fixture_set(50, 37)) {
        const RateTable rates = true_rate_table(f.config);
        const auto out = bcjr_posteriors(f.config, rates, f.obs);
        const auto e = oracle::enumerate(f.config, rates, f.obs);
        for (int k = 0; k < 2; ++k) {
            for (int j = 0; j < 3; ++j) {
                CHECK(out.posteriors(k, j) == doctest::Approx(e.symbol_post(k, j)).epsilon(1e-9));
                CHECK(out.hard_bits.bits(k, j) == (out.posteriors(k, j) > 0.5 ? 1 : 0));
            }
        }
    }
}

TEST_CASE("high-SNR detection recovers the frame") {
    auto c = ChannelConfig::symmetric(2, 300, 100.0, 0.01);
    c.delays = {0.35, 0.65};
    c.layer_rates = {150.0, 300.0};
    const auto z = sample_symbols(c, 8);
    const auto obs = sample_observations(c, z, 9);
    const RateTable rates = true_rate_table(c);
    auto errors = [&](const LayerSymbols& x) {
        int e = 0;
        for (std::size_t i = 0; i < x.bits.data().size(); ++i) e += x.bits.data()[i] != z.bits.data()[i];
        return e;
    };
    CHECK(errors(viterbi_detect(c, rates, obs).hard_bits) == 0);
    CHECK(errors(bcjr_posteriors(c, rates, obs).hard_bits) == 0);
}

TEST_CASE("Viterbi tie-break picks the smallest states") {
    // Every state has the same rate, so every path ties.
    auto c = ChannelConfig::symmetric(2, 5, 0.0, 1.0);
    ObservationSequence obs;
    obs.counts.assign(static_cast<std::size_t>(chip_count(c)), 1);
    const auto out = viterbi_detect(c, true_rate_table(c), obs);
    for (auto b : out.hard_bits.bits.data()) CHECK(b == 0);
}

TEST_CASE("Viterbi respects zero priors") {
    auto c = ChannelConfig::symmetric(2, 4, 5.0, 0.1);
    c.priors(0, 1) = 0.0;
    ObservationSequence obs;
    obs.counts.assign(static_cast<std::size_t>(chip_count(c)), 30);
    const auto out = viterbi_detect(c, true_rate_table(c), obs);
    CHECK(out.hard_bits.symbol(1, 2) == 0);
    CHECK(out.hard_bits.symbol(1, 1) == 1);
}

TEST_CASE("detection input checks") {
    auto c = ChannelConfig::symmetric(2, 4, 5.0, 0.1);
    ObservationSequence obs;
    obs.counts.assign(static_cast<std::size_t>(chip_count(c)), 1);
    CHECK_THROWS_AS(viterbi_detect(c, {1.0, 2.0}, obs), ConfigError);
    CHECK_THROWS_AS(bcjr_posteriors(c, {1.0, 2.0, -1.0, 3.0}, obs), ConfigError);
    obs.counts.push_back(0);
    CHECK_THROWS_AS(viterbi_detect(c, true_rate_table(c), obs), ConfigError);
    // Zero rates everywhere cannot produce a count.
    auto dark = ChannelConfig::symmetric(1, 3, 0.0, 0.0);
    ObservationSequence one;
    one.counts = {0, 1, 0};
    CHECK_THROWS_AS(bcjr_posteriors(dark, true_rate_table(dark), one), DegenerateLikelihood);
}

TEST_CASE("estimated rate tables are accepted") {
    const auto f = oracle::fixture_set(1, 3).front();
    RateTable rates = {0.3, 2.0, 4.0, 7.0};  // not additive
    const auto out = bcjr_posteriors(f.config, rates, f.obs);
    const auto e = oracle::enumerate(f.config, rates, f.obs);
    for (int k = 0; k < 2; ++k) {
        for (int j = 0; j < 3; ++j) CHECK(out.posteriors(k, j) == doctest::Approx(e.symbol_post(k, j)).epsilon(1e-9));
    }
    CHECK(viterbi_detect(f.config, rates, f.obs).path_metric ==
          doctest::Approx(oracle::max_metric(f.config, rates, f.obs)).epsilon(1e-10));
}
