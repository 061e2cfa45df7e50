#include "superpose/rng.hpp"

#include <cmath>

#include <boost/math/distributions/poisson.hpp>

namespace superpose {

namespace {

using RoundUp = boost::math::policies::policy<
    boost::math::policies::discrete_quantile<boost::math::policies::integer_round_up>>;

// Below this mean the sequential search is exact enough and much faster.
constexpr double kSequentialLimit = 64.0;

}  // namespace

std::uint32_t poisson_quantile(double mean, double u) {
    if (mean <= 0.0) return 0;
    if (mean < kSequentialLimit) {
        double pmf = std::exp(-mean);
        double cdf = pmf;
        std::uint32_t n = 0;
        while (cdf < u) {
            ++n;
            pmf *= mean / n;
            const double next = cdf + pmf;
            if (next == cdf) break;  // remaining mass below double resolution
            cdf = next;
        }
        return n;
    }
    boost::math::poisson_distribution<double, RoundUp> dist(mean);
    if (u <= 0.0) return 0;
    const double q = boost::math::quantile(dist, u);
    return static_cast<std::uint32_t>(q);
}

std::uint32_t poisson_tail_cap(double mean, double tail) {
    if (mean <= 0.0) return 0;
    boost::math::poisson_distribution<double, RoundUp> dist(mean);
    return static_cast<std::uint32_t>(boost::math::quantile(boost::math::complement(dist, tail)));
}

std::uint32_t Rng::poisson(double mean) { return poisson_quantile(mean, uniform()); }

}  // namespace superpose
