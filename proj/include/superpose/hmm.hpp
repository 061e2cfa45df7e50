#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "superpose/channel.hpp"
#include "superpose/matrix.hpp"

namespace superpose {

/// Chip-level HMM of a channel: initial distribution, cyclic transition
/// kernel and Poisson emissions. Transitions and emissions are evaluated on
/// demand; only the initial distribution and per-state rates are stored.
///
/// The kernel between chips t and t+1 redraws the symbols of the layers in
/// changed_layers(t) from their priors and keeps all other components. That
/// structure lets the recursions below run in O(2^L) per chip and layer
/// instead of O(4^L).
class HmmView {
public:
    /// Emission rates from the channel: lambda_0 + Lambda^T s.
    explicit HmmView(ChannelConfig config);
    /// Emission rates from a per-state table (e.g. channel estimates).
    HmmView(ChannelConfig config, std::vector<double> state_rates);

    const ChannelConfig& config() const noexcept { return config_; }
    int num_chips() const noexcept { return num_chips_; }
    int num_states() const noexcept { return static_cast<int>(rates_.size()); }
    const std::vector<double>& initial() const noexcept { return initial_; }
    const std::vector<double>& state_rates() const noexcept { return rates_; }

    double transition_prob(int t, StateVector from, StateVector to) const;
    double emission_logprob(int t, std::uint32_t state, std::uint32_t count) const;

    /// In place: v(s) <- sum_u v(u) a_t(u, s). Maps a distribution over
    /// S_t to the predicted distribution over S_{t+1}.
    void propagate(int t, std::span<double> v) const;
    /// In place: w(u) <- sum_s a_t(u, s) w(s).
    void propagate_back(int t, std::span<double> w) const;

    /// exp(emission log-probabilities - offset) for every state at chip t;
    /// returns the offset. Throws DegenerateLikelihood when no state can
    /// emit `count`.
    double chip_likelihoods(int t, std::uint32_t count, std::span<double> out) const;

private:
    double redraw_prior(int t, int layer) const;

    ChannelConfig config_;
    std::vector<double> rates_;
    std::vector<double> log_rates_;
    std::vector<double> initial_;
    int num_chips_ = 0;
};

/// Scaled forward/backward quantities. alpha rows sum to 1;
/// sum_s alpha(t,s) beta(t,s) = 1 for every t.
struct TrellisPosterior {
    Matrix<double> alpha;         // T x 2^L, alpha(t-1, s) for chip t
    Matrix<double> beta;          // T x 2^L
    std::vector<double> log_scale;  // per-chip log normalizer (natural log)
    double log_likelihood = 0.0;    // log P(N_T), natural log

    /// P(S_t = s | N_T).
    double state_posterior(int t, std::uint32_t s) const {
        const auto r = static_cast<std::size_t>(t - 1);
        return alpha(r, s) * beta(r, s);
    }
};

/// pi_1: mass q_{1,1} on e_1 and 1 - q_{1,1} on the zero state (async);
/// the product of first-symbol priors when aligned.
std::vector<double> initial_distribution(const ChannelConfig& config);

/// a_t(from, to) for 1 <= t <= T-1.
double transition_prob(const ChannelConfig& config, int t, StateVector from, StateVector to);

/// log P(N_t = n | S_t = s) with the 0 log 0 = 0 convention.
double emission_logprob(const ChannelConfig& config, int t, StateVector s, std::uint32_t n);

TrellisPosterior forward_backward(const HmmView& hmm, const ObservationSequence& obs);
TrellisPosterior forward_backward(const ChannelConfig& config, const ObservationSequence& obs);

/// Unconditional state marginals P(S_t = s), T x 2^L.
Matrix<double> prior_marginals(const ChannelConfig& config);

/// H(S_T | N_T = n) in bits via the forward entropy recursion.
double sequence_entropy_given_obs(const HmmView& hmm, const ObservationSequence& obs);
double sequence_entropy_given_obs(const ChannelConfig& config, const ObservationSequence& obs);

}  // namespace superpose
