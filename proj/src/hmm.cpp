#include "superpose/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "superpose/errors.hpp"

namespace superpose {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_chip(int t, int lo, int hi) {
    if (t < lo || t > hi)
        throw IndexError("chip index " + std::to_string(t) + " outside [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
}

void check_length(const HmmView& hmm, const ObservationSequence& obs) {
    if (obs.size() != static_cast<std::size_t>(hmm.num_chips()))
        throw ConfigError("observations", "expected " + std::to_string(hmm.num_chips()) + " chips, got " +
                                              std::to_string(obs.size()));
}

double normalize(std::span<double> v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    if (sum > 0.0) {
        for (double& x : v) x /= sum;
    }
    return sum;
}

}  // namespace

HmmView::HmmView(ChannelConfig config) : config_(std::move(config)) {
    config_.validate();
    rates_.resize(static_cast<std::size_t>(config_.num_states()));
    for (std::uint32_t s = 0; s < rates_.size(); ++s) rates_[s] = state_rate(config_, s);
    log_rates_.resize(rates_.size());
    for (std::size_t s = 0; s < rates_.size(); ++s) log_rates_[s] = std::log(rates_[s]);
    initial_ = initial_distribution(config_);
    num_chips_ = chip_count(config_);
}

HmmView::HmmView(ChannelConfig config, std::vector<double> state_rates) : config_(std::move(config)) {
    config_.validate();
    if (state_rates.size() != static_cast<std::size_t>(config_.num_states()))
        throw ConfigError("rates", "expected one rate per state (2^L entries)");
    for (std::size_t s = 0; s < state_rates.size(); ++s) {
        if (!(state_rates[s] >= 0.0) || !std::isfinite(state_rates[s]))
            throw ConfigError("rates[" + std::to_string(s) + "]", "must be finite and >= 0");
    }
    rates_ = std::move(state_rates);
    log_rates_.resize(rates_.size());
    for (std::size_t s = 0; s < rates_.size(); ++s) log_rates_[s] = std::log(rates_[s]);
    initial_ = initial_distribution(config_);
    num_chips_ = chip_count(config_);
}

double HmmView::redraw_prior(int t, int layer) const {
    return symbol_prior(config_, layer, symbol_index(config_, t + 1, layer));
}

double HmmView::transition_prob(int t, StateVector from, StateVector to) const {
    check_chip(t, 1, num_chips_ - 1);
    const std::uint32_t changed = changed_layers(config_, t);
    if (((from.index() ^ to.index()) & ~changed) != 0) return 0.0;
    double p = 1.0;
    for (int k = 1; k <= config_.num_layers; ++k) {
        if (!((changed >> (k - 1)) & 1U)) continue;
        const double q = redraw_prior(t, k);
        p *= to.bit(k) ? q : 1.0 - q;
    }
    return p;
}

double HmmView::emission_logprob(int t, std::uint32_t state, std::uint32_t count) const {
    const double mean = chip_duration(config_, t) * rates_[state];
    if (mean == 0.0) return count == 0 ? 0.0 : kNegInf;
    const double n = count;
    return n * std::log(mean) - std::lgamma(n + 1.0) - mean;
}

void HmmView::propagate(int t, std::span<double> v) const {
    const std::uint32_t changed = changed_layers(config_, t);
    const auto S = static_cast<std::uint32_t>(v.size());
    for (int k = 1; k <= config_.num_layers; ++k) {
        const std::uint32_t bit = 1U << (k - 1);
        if (!(changed & bit)) continue;
        const double q = redraw_prior(t, k);
        for (std::uint32_t s = 0; s < S; ++s) {
            if (s & bit) continue;
            const double m = v[s] + v[s | bit];
            v[s] = m * (1.0 - q);
            v[s | bit] = m * q;
        }
    }
}

void HmmView::propagate_back(int t, std::span<double> w) const {
    const std::uint32_t changed = changed_layers(config_, t);
    const auto S = static_cast<std::uint32_t>(w.size());
    for (int k = 1; k <= config_.num_layers; ++k) {
        const std::uint32_t bit = 1U << (k - 1);
        if (!(changed & bit)) continue;
        const double q = redraw_prior(t, k);
        for (std::uint32_t s = 0; s < S; ++s) {
            if (s & bit) continue;
            const double m = (1.0 - q) * w[s] + q * w[s | bit];
            w[s] = m;
            w[s | bit] = m;
        }
    }
}

double HmmView::chip_likelihoods(int t, std::uint32_t count, std::span<double> out) const {
    const double tau = chip_duration(config_, t);
    const double log_tau = std::log(tau);
    const double n = count;
    const double log_fact = std::lgamma(n + 1.0);
    double offset = kNegInf;
    for (std::size_t s = 0; s < rates_.size(); ++s) {
        double lp;
        if (rates_[s] == 0.0) {
            lp = count == 0 ? 0.0 : kNegInf;
        } else {
            lp = n * (log_tau + log_rates_[s]) - log_fact - tau * rates_[s];
        }
        out[s] = lp;
        offset = std::max(offset, lp);
    }
    if (offset == kNegInf)
        throw DegenerateLikelihood("no state can emit " + std::to_string(count) + " photoelectrons at chip " +
                                   std::to_string(t));
    for (double& x : out) x = std::exp(x - offset);
    return offset;
}

std::vector<double> initial_distribution(const ChannelConfig& config) {
    std::vector<double> pi(static_cast<std::size_t>(config.num_states()), 0.0);
    pi[0] = 1.0;
    for (int k = 1; k <= config.num_layers; ++k) {
        const double q = symbol_prior(config, k, symbol_index(config, 1, k));
        const std::uint32_t bit = 1U << (k - 1);
        for (std::uint32_t s = 0; s < pi.size(); ++s) {
            if (s & bit) continue;
            const double m = pi[s];
            pi[s] = m * (1.0 - q);
            pi[s | bit] = m * q;
        }
    }
    return pi;
}

double transition_prob(const ChannelConfig& config, int t, StateVector from, StateVector to) {
    config.validate();
    const int T = chip_count(config);
    check_chip(t, 1, T - 1);
    const std::uint32_t changed = changed_layers(config, t);
    if (((from.index() ^ to.index()) & ~changed) != 0) return 0.0;
    double p = 1.0;
    for (int k = 1; k <= config.num_layers; ++k) {
        if (!((changed >> (k - 1)) & 1U)) continue;
        const double q = symbol_prior(config, k, symbol_index(config, t + 1, k));
        p *= to.bit(k) ? q : 1.0 - q;
    }
    return p;
}

double emission_logprob(const ChannelConfig& config, int t, StateVector s, std::uint32_t n) {
    const double mean = chip_duration(config, t) * state_rate(config, s);
    if (mean == 0.0) return n == 0 ? 0.0 : kNegInf;
    const double x = n;
    return x * std::log(mean) - std::lgamma(x + 1.0) - mean;
}

TrellisPosterior forward_backward(const HmmView& hmm, const ObservationSequence& obs) {
    check_length(hmm, obs);
    const auto T = static_cast<std::size_t>(hmm.num_chips());
    const auto S = static_cast<std::size_t>(hmm.num_states());
    TrellisPosterior post;
    post.alpha = Matrix<double>(T, S);
    post.beta = Matrix<double>(T, S);
    post.log_scale.resize(T);

    Matrix<double> emis(T, S);
    std::vector<double> offsets(T);
    for (std::size_t i = 0; i < T; ++i)
        offsets[i] = hmm.chip_likelihoods(static_cast<int>(i + 1), obs.counts[i], emis.row(i));

    std::vector<double> scale(T);
    for (std::size_t i = 0; i < T; ++i) {
        auto a = post.alpha.row(i);
        if (i == 0) {
            std::copy(hmm.initial().begin(), hmm.initial().end(), a.begin());
        } else {
            const auto prev = post.alpha.row(i - 1);
            std::copy(prev.begin(), prev.end(), a.begin());
            hmm.propagate(static_cast<int>(i), a);
        }
        const auto e = emis.row(i);
        for (std::size_t s = 0; s < S; ++s) a[s] *= e[s];
        scale[i] = normalize(a);
        if (!(scale[i] > 0.0))
            throw DegenerateLikelihood("observation sequence has zero likelihood at chip " + std::to_string(i + 1));
        post.log_scale[i] = std::log(scale[i]) + offsets[i];
        post.log_likelihood += post.log_scale[i];
    }

    auto last = post.beta.row(T - 1);
    std::fill(last.begin(), last.end(), 1.0);
    std::vector<double> w(S);
    for (std::size_t i = T - 1; i-- > 0;) {
        const auto next = post.beta.row(i + 1);
        const auto e = emis.row(i + 1);
        for (std::size_t s = 0; s < S; ++s) w[s] = next[s] * e[s] / scale[i + 1];
        hmm.propagate_back(static_cast<int>(i + 1), w);
        auto b = post.beta.row(i);
        std::copy(w.begin(), w.end(), b.begin());
    }
    return post;
}

TrellisPosterior forward_backward(const ChannelConfig& config, const ObservationSequence& obs) {
    return forward_backward(HmmView(config), obs);
}

Matrix<double> prior_marginals(const ChannelConfig& config) {
    const HmmView hmm(config);
    const auto T = static_cast<std::size_t>(hmm.num_chips());
    const auto S = static_cast<std::size_t>(hmm.num_states());
    Matrix<double> pi(T, S);
    std::copy(hmm.initial().begin(), hmm.initial().end(), pi.row(0).begin());
    for (std::size_t i = 1; i < T; ++i) {
        auto row = pi.row(i);
        const auto prev = pi.row(i - 1);
        std::copy(prev.begin(), prev.end(), row.begin());
        hmm.propagate(static_cast<int>(i), row);
    }
    return pi;
}

double sequence_entropy_given_obs(const HmmView& hmm, const ObservationSequence& obs) {
    check_length(hmm, obs);
    const auto T = static_cast<std::size_t>(hmm.num_chips());
    const auto S = static_cast<std::size_t>(hmm.num_states());

    // alpha: filtered P(S_t | N_1..t). h(s): entropy of S_1..t-1 given S_t = s
    // and N_1..t. The redrawn components do not depend on the predecessor, so
    // the backward kernel P(S_t = u | S_t+1 = s, N_1..t) is alpha(u) normalized
    // over the predecessors compatible with s.
    std::vector<double> alpha(hmm.initial());
    std::vector<double> h(S, 0.0);
    std::vector<double> e(S);
    std::vector<double> weighted(S);

    hmm.chip_likelihoods(1, obs.counts[0], e);
    for (std::size_t s = 0; s < S; ++s) alpha[s] *= e[s];
    if (!(normalize(alpha) > 0.0)) throw DegenerateLikelihood("observation sequence has zero likelihood at chip 1");

    for (std::size_t i = 1; i < T; ++i) {
        const int t = static_cast<int>(i);  // transition t -> t+1
        for (std::size_t s = 0; s < S; ++s)
            weighted[s] = alpha[s] > 0.0 ? alpha[s] * (h[s] - std::log(alpha[s])) : 0.0;

        // Sum alpha and alpha*(h - log alpha) over each predecessor group.
        const std::uint32_t changed = changed_layers(hmm.config(), t);
        for (int k = 1; k <= hmm.config().num_layers; ++k) {
            const std::uint32_t bit = 1U << (k - 1);
            if (!(changed & bit)) continue;
            for (std::uint32_t s = 0; s < S; ++s) {
                if (s & bit) continue;
                const double a = alpha[s] + alpha[s | bit];
                const double w = weighted[s] + weighted[s | bit];
                alpha[s] = alpha[s | bit] = a;
                weighted[s] = weighted[s | bit] = w;
            }
        }
        for (std::size_t s = 0; s < S; ++s) h[s] = alpha[s] > 0.0 ? weighted[s] / alpha[s] + std::log(alpha[s]) : 0.0;

        // alpha currently holds group sums; turn it into the filtered update.
        for (int k = 1; k <= hmm.config().num_layers; ++k) {
            const std::uint32_t bit = 1U << (k - 1);
            if (!(changed & bit)) continue;
            const double q = symbol_prior(hmm.config(), k, symbol_index(hmm.config(), t + 1, k));
            for (std::uint32_t s = 0; s < S; ++s) alpha[s] *= (s & bit) ? q : 1.0 - q;
        }
        hmm.chip_likelihoods(t + 1, obs.counts[i], e);
        for (std::size_t s = 0; s < S; ++s) alpha[s] *= e[s];
        if (!(normalize(alpha) > 0.0))
            throw DegenerateLikelihood("observation sequence has zero likelihood at chip " + std::to_string(t + 1));
    }

    double entropy = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        if (alpha[s] > 0.0) entropy += alpha[s] * (h[s] - std::log(alpha[s]));
    }
    return std::max(0.0, entropy / std::numbers::ln2);
}

double sequence_entropy_given_obs(const ChannelConfig& config, const ObservationSequence& obs) {
    return sequence_entropy_given_obs(HmmView(config), obs);
}

}  // namespace superpose
