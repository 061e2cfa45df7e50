#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "superpose/errors.hpp"
#include "superpose/hmm.hpp"
#include "superpose/rates.hpp"

using namespace superpose;

TEST_CASE("initial distribution puts q11 on e1") {
    auto c = ChannelConfig::symmetric(2, 3, 1, 0.1, 0.5);
    auto pi = initial_distribution(c);
    CHECK(pi == std::vector<double>{0.5, 0.5, 0.0, 0.0});
    c.priors(0, 0) = 1.0;
    CHECK(initial_distribution(c) == std::vector<double>{0.0, 1.0, 0.0, 0.0});
    c.priors(0, 0) = 0.0;
    CHECK(initial_distribution(c) == std::vector<double>{1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("transition probabilities") {
    auto c = ChannelConfig::symmetric(2, 3, 1, 0.1, 0.5);
    c.priors(1, 0) = 0.3;
    const auto s10 = StateVector::from_bits({1, 0});
    const auto s01 = StateVector::from_bits({0, 1});
    const auto s11 = StateVector::from_bits({1, 1});
    CHECK(transition_prob(c, 1, s10, s01) == 0.0);
    CHECK(transition_prob(c, 1, s10, s11) == doctest::Approx(0.3));
    CHECK_THROWS_AS(transition_prob(c, chip_count(c), s10, s11), IndexError);

    // Rows sum to 1 everywhere, including the boundary chips.
    c = ChannelConfig::symmetric(3, 3, 1, 0.1, 0.5);
    Rng rng(3);
    for (auto& q : c.priors.data()) q = rng.uniform();
    for (int t = 1; t < chip_count(c); ++t) {
        for (std::uint32_t a = 0; a < 8; ++a) {
            double sum = 0.0;
            int support = 0;
            for (std::uint32_t b = 0; b < 8; ++b) {
                const double p = transition_prob(c, t, StateVector(a, 3), StateVector(b, 3));
                sum += p;
                if (((a ^ b) & ~changed_layers(c, t)) == 0) ++support;
                if (((a ^ b) & ~changed_layers(c, t)) != 0) CHECK(p == 0.0);
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
            CHECK(support == 2);
        }
    }
    // Exhausted layers return to 0 with probability 1.
    const int T = chip_count(c);
    CHECK(transition_prob(c, T - 1, StateVector(0, 3), StateVector(0, 3)) == 1.0);
}

TEST_CASE("transition kernel is L-periodic in the bulk") {
    auto c = ChannelConfig::symmetric(2, 8, 1, 0.1, 0.3);
    for (int t = 3; t + 2 <= chip_count(c) - 3; ++t) {
        for (std::uint32_t a = 0; a < 4; ++a) {
            for (std::uint32_t b = 0; b < 4; ++b)
                CHECK(transition_prob(c, t, StateVector(a, 2), StateVector(b, 2)) ==
                      transition_prob(c, t + 2, StateVector(a, 2), StateVector(b, 2)));
        }
    }
}

TEST_CASE("emission log-probabilities") {
    auto c = ChannelConfig::symmetric(2, 3, 10, 0.0);
    CHECK(emission_logprob(c, 1, StateVector(0, 2), 0) == 0.0);
    CHECK(emission_logprob(c, 1, StateVector(0, 2), 2) == -std::numeric_limits<double>::infinity());
    c.background_rate = 0.01;
    const double mean = 0.5 * 20.01;
    CHECK(emission_logprob(c, 2, StateVector(3, 2), 10) ==
          doctest::Approx(10 * std::log(mean) - mean - std::lgamma(11.0)).epsilon(1e-14));
    double total = 0.0;
    for (std::uint32_t n = 0; n < 200; ++n) total += std::exp(emission_logprob(c, 2, StateVector(3, 2), n));
    CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("one-symbol Bayes rule") {
    auto c = ChannelConfig::symmetric(1, 1, 3.0, 0.5, 0.4);
    const ObservationSequence obs{{2}};
    const auto post = forward_backward(c, obs);
    const double p1 = 0.4 * std::exp(2 * std::log(3.5) - 3.5);
    const double p0 = 0.6 * std::exp(2 * std::log(0.5) - 0.5);
    CHECK(post.state_posterior(1, 1) == doctest::Approx(p1 / (p0 + p1)).epsilon(1e-12));
}

TEST_CASE("forward-backward matches exhaustive enumeration") {
    for (const auto& inst : oracle::fixture_set(50, 11)) {
        const auto rates = true_rate_table(inst.config);
        const auto e = oracle::enumerate(inst.config, rates, inst.obs);
        const auto post = forward_backward(inst.config, inst.obs);
        CHECK(std::abs(post.log_likelihood - e.log_evidence) < 1e-9);
        for (int t = 1; t <= chip_count(inst.config); ++t) {
            double mass = 0.0;
            for (std::uint32_t s = 0; s < 4; ++s) {
                CHECK(std::abs(post.state_posterior(t, s) - e.state_post(t - 1, s)) < 1e-9);
                mass += post.alpha(t - 1, s) * post.beta(t - 1, s);
            }
            CHECK(std::abs(mass - 1.0) < 1e-9);
            double asum = 0.0;
            for (std::uint32_t s = 0; s < 4; ++s) asum += post.alpha(t - 1, s);
            CHECK(std::abs(asum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("exhaustive check over small frames and counts") {
    // L <= 2, M <= 4, counts <= 6 on a sample of shapes.
    Rng rng(77);
    for (int L = 1; L <= 2; ++L) {
        for (int M = 1; M <= 4; ++M) {
            for (int rep = 0; rep < 3; ++rep) {
                auto c = ChannelConfig::symmetric(L, M, 2.0 + 3 * rng.uniform(), 0.2 * rng.uniform());
                for (auto& q : c.priors.data()) q = rng.uniform();
                ObservationSequence obs;
                for (int t = 0; t < chip_count(c); ++t) obs.counts.push_back(static_cast<std::uint32_t>(rng.uniform() * 7));
                if (c.background_rate == 0.0) c.background_rate = 0.01;
                const auto e = oracle::enumerate(c, true_rate_table(c), obs);
                const auto post = forward_backward(c, obs);
                for (int t = 1; t <= chip_count(c); ++t) {
                    for (std::uint32_t s = 0; s < static_cast<std::uint32_t>(c.num_states()); ++s)
                        CHECK(std::abs(post.state_posterior(t, s) - e.state_post(t - 1, s)) < 1e-9);
                }
                CHECK(std::abs(sequence_entropy_given_obs(c, obs) - e.entropy_bits) < 1e-9);
            }
        }
    }
}

TEST_CASE("zero-likelihood observations are reported") {
    auto c = ChannelConfig::symmetric(1, 2, 0.0, 0.0);
    const ObservationSequence obs{{0, 3}};
    CHECK_THROWS_AS(forward_backward(c, obs), DegenerateLikelihood);
    CHECK_THROWS_AS(sequence_entropy_given_obs(c, obs), DegenerateLikelihood);
}

TEST_CASE("prior marginals") {
    auto c = ChannelConfig::symmetric(2, 4, 1, 0.1, 0.5);
    const auto pi = prior_marginals(c);
    for (int t = 2; t < chip_count(c); ++t) {
        for (std::uint32_t s = 0; s < 4; ++s) CHECK(pi(t - 1, s) == doctest::Approx(0.25));
    }
    c = ChannelConfig::symmetric(2, 4, 1, 0.1, 0.0);
    const auto zero = prior_marginals(c);
    for (int t = 1; t <= chip_count(c); ++t) CHECK(zero(t - 1, 0) == 1.0);

    c = ChannelConfig::symmetric(2, 2, 1, 0.1);
    c.priors(0, 0) = 0.2;
    c.priors(0, 1) = 0.7;
    c.priors(1, 0) = 0.9;
    c.priors(1, 1) = 0.35;
    const auto pm = prior_marginals(c);
    Matrix<double> ref(chip_count(c), 4, 0.0);
    for (std::uint64_t i = 0; i < 16; ++i) {
        const auto z = oracle::matrix_from_index(2, 2, i);
        const double p = oracle::prior_prob(c, z);
        for (int t = 1; t <= chip_count(c); ++t) ref(t - 1, state_at_chip(c, z, t).index()) += p;
    }
    for (int t = 1; t <= chip_count(c); ++t) {
        double row = 0.0;
        for (std::uint32_t s = 0; s < 4; ++s) {
            CHECK(std::abs(pm(t - 1, s) - ref(t - 1, s)) < 1e-12);
            row += pm(t - 1, s);
        }
        CHECK(std::abs(row - 1.0) < 1e-12);
    }
}

TEST_CASE("sequence entropy matches path enumeration") {
    for (const auto& inst : oracle::fixture_set(50, 11)) {
        const auto e = oracle::enumerate(inst.config, true_rate_table(inst.config), inst.obs);
        CHECK(std::abs(sequence_entropy_given_obs(inst.config, inst.obs) - e.entropy_bits) < 1e-9);
    }
}

TEST_CASE("sequence entropy limits") {
    // Uninformative observations: posterior equals prior.
    auto c = ChannelConfig::symmetric(2, 6, 0.0, 0.3);
    Rng rng(4);
    for (auto& q : c.priors.data()) q = rng.uniform();
    const std::vector<int> all{1, 2};
    const auto obs = sample_observations(c, sample_symbols(c, 1), 2);
    CHECK(std::abs(sequence_entropy_given_obs(c, obs) - input_entropy(c, all)) < 1e-9);

    // Near-noiseless separation.
    auto clean = ChannelConfig::symmetric(2, 20, 400.0, 0.0);
    clean.layer_rates = {400.0, 800.0};
    const auto z = sample_symbols(clean, 8);
    CHECK(sequence_entropy_given_obs(clean, sample_observations(clean, z, 9)) < 1e-6);
}

TEST_CASE("sequence entropy is invariant under relabelling aligned layers") {
    auto c = ChannelConfig::symmetric(2, 5, 3.0, 0.1, 0.5, true);
    c.layer_rates = {3.0, 5.0};
    Rng rng(12);
    for (auto& q : c.priors.data()) q = rng.uniform();
    auto swapped = c;
    swapped.layer_rates = {5.0, 3.0};
    for (std::size_t j = 0; j < 5; ++j) {
        swapped.priors(0, j) = c.priors(1, j);
        swapped.priors(1, j) = c.priors(0, j);
    }
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto obs = sample_observations(c, sample_symbols(c, seed), seed + 100);
        CHECK(std::abs(sequence_entropy_given_obs(c, obs) - sequence_entropy_given_obs(swapped, obs)) < 1e-12);
    }
}

TEST_CASE("layer posterior factorizes over symbols given the other layers") {
    for (const auto& inst : oracle::fixture_set(20, 71)) {
        CHECK(oracle::factorization_gap(inst.config, inst.obs) < 1e-9);
    }
}
