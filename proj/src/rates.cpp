#include "superpose/rates.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

#include "superpose/errors.hpp"
#include "superpose/hmm.hpp"
#include "superpose/parallel.hpp"
#include "superpose/rng.hpp"

namespace superpose {

namespace {

std::vector<double> poisson_pmf_table(double mean, std::uint32_t cap) {
    std::vector<double> pmf(cap + 1);
    if (mean == 0.0) {
        pmf[0] = 1.0;
        return pmf;
    }
    const double log_mean = std::log(mean);
    for (std::uint32_t n = 0; n <= cap; ++n)
        pmf[n] = std::exp(n * log_mean - mean - std::lgamma(n + 1.0));
    return pmf;
}

// a log(a / m) with 0 log 0 = 0.
double xlogx_ratio(double a, double m) { return a > 0.0 ? a * std::log(a / m) : 0.0; }

// H(Z | N_1..N_D) in bits for Z ~ Bernoulli(q) and independent
// N_d ~ Poisson(mean0[d] or mean1[d]) given Z = 0 or 1.
class BinarySpanEntropy {
public:
    BinarySpanEntropy(const std::vector<double>& mean0, const std::vector<double>& mean1, double q,
                      const SingleLayerOptions& options)
        : q_(q) {
        for (std::size_t d = 0; d < mean0.size(); ++d) {
            const std::uint32_t cap = poisson_tail_cap(std::max(mean0[d], mean1[d]), options.tail_epsilon);
            if (cap > options.count_cap)
                throw BudgetError("Poisson tail of mean " + std::to_string(std::max(mean0[d], mean1[d])) +
                                  " needs counts up to " + std::to_string(cap) + ", above the cap of " +
                                  std::to_string(options.count_cap));
            pmf0_.push_back(poisson_pmf_table(mean0[d], cap));
            pmf1_.push_back(poisson_pmf_table(mean1[d], cap));
        }
    }

    double terms() const {
        double n = 1.0;
        for (const auto& p : pmf0_) n *= static_cast<double>(p.size());
        return n;
    }

    double entropy_bits() {
        info_nats_ = 0.0;
        captured_ = 0.0;
        recurse(0, 1.0 - q_, q_);
        return -info_nats_ / std::numbers::ln2;
    }

    double truncated_mass() const { return std::max(0.0, 1.0 - captured_); }

private:
    void recurse(std::size_t d, double a, double b) {
        const auto& p0 = pmf0_[d];
        const auto& p1 = pmf1_[d];
        if (d + 1 == pmf0_.size()) {
            for (std::size_t n = 0; n < p0.size(); ++n) {
                const double x = a * p0[n];
                const double y = b * p1[n];
                const double m = x + y;
                if (m <= 0.0) continue;
                captured_ += m;
                info_nats_ += xlogx_ratio(x, m) + xlogx_ratio(y, m);
            }
            return;
        }
        for (std::size_t n = 0; n < p0.size(); ++n) {
            const double x = a * p0[n];
            const double y = b * p1[n];
            if (x + y <= 0.0) continue;
            recurse(d + 1, x, y);
        }
    }

    double q_;
    std::vector<std::vector<double>> pmf0_;
    std::vector<std::vector<double>> pmf1_;
    double info_nats_ = 0.0;
    double captured_ = 0.0;
};

bool all_priors_equal(const ChannelConfig& config) {
    const auto& d = config.priors.data();
    return std::all_of(d.begin(), d.end(), [&](double q) { return q == d.front(); });
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial, std::uint64_t stream) {
    return Rng(seed).split(2 * static_cast<std::uint64_t>(trial) + stream).seed();
}

}  // namespace

double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("binary_entropy: argument outside [0, 1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double input_entropy(const ChannelConfig& config, std::span<const int> layer_set) {
    CompensatedSum sum;
    for (int k : layer_set) {
        if (k < 1 || k > config.num_layers) throw IndexError("layer " + std::to_string(k) + " out of range");
        for (int j = 1; j <= config.num_symbols; ++j) sum.add(binary_entropy(symbol_prior(config, k, j)));
    }
    return sum.value();
}

double symbol_conditional_entropy(const ChannelConfig& config, int layer, int j, bool bulk,
                                  const SingleLayerOptions& options, double* truncated_mass) {
    const double qk = bulk ? symbol_prior(config, layer, std::clamp(j, 1, config.num_symbols))
                           : symbol_prior(config, layer, j);
    if (truncated_mass) *truncated_mass = 0.0;
    if (qk <= 0.0 || qk >= 1.0) return 0.0;

    // Neighbouring symbols touching the span, one slot per (layer, index).
    const ChipSpan span = symbol_span(config, layer, j);
    struct Slot {
        int layer;
        int index;
        double prior;
    };
    std::vector<Slot> slots;
    std::vector<std::vector<std::size_t>> chip_slots;  // per chip: slot per other layer
    std::vector<double> tau;
    for (int t = span.first; t <= span.last; ++t) {
        tau.push_back(chip_duration(config, t));
        std::vector<std::size_t> row;
        for (int i = 1; i <= config.num_layers; ++i) {
            if (i == layer) continue;
            const int idx = symbol_index(config, t, i);
            auto it = std::find_if(slots.begin(), slots.end(),
                                   [&](const Slot& s) { return s.layer == i && s.index == idx; });
            if (it == slots.end()) {
                slots.push_back({i, idx, bulk ? qk : symbol_prior(config, i, idx)});
                it = std::prev(slots.end());
            }
            row.push_back(static_cast<std::size_t>(it - slots.begin()));
        }
        chip_slots.push_back(std::move(row));
    }

    const double lambda_k = config.layer_rates[static_cast<std::size_t>(layer - 1)];
    const std::size_t num_configs = std::size_t{1} << slots.size();
    std::map<std::vector<double>, double> memo;  // base means -> entropy
    double entropy = 0.0;
    double lost = 0.0;
    double work = 0.0;
    for (std::size_t c = 0; c < num_configs; ++c) {
        double weight = 1.0;
        for (std::size_t s = 0; s < slots.size(); ++s) weight *= ((c >> s) & 1U) ? slots[s].prior : 1.0 - slots[s].prior;
        if (weight == 0.0) continue;

        std::vector<double> mean0(tau.size());
        std::vector<double> mean1(tau.size());
        for (std::size_t d = 0; d < tau.size(); ++d) {
            double base = config.background_rate;
            std::size_t o = 0;
            for (int i = 1; i <= config.num_layers; ++i) {
                if (i == layer) continue;
                if ((c >> chip_slots[d][o]) & 1U) base += config.layer_rates[static_cast<std::size_t>(i - 1)];
                ++o;
            }
            mean0[d] = tau[d] * base;
            mean1[d] = tau[d] * (base + lambda_k);
        }
        auto it = memo.find(mean0);
        if (it == memo.end()) {
            BinarySpanEntropy h(mean0, mean1, qk, options);
            work += h.terms();
            if (work > options.max_terms)
                throw BudgetError("single-layer rate needs more than " + std::to_string(options.max_terms) +
                                  " count-space terms");
            const double value = h.entropy_bits();
            lost = std::max(lost, h.truncated_mass());
            it = memo.emplace(std::move(mean0), value).first;
        }
        entropy += weight * it->second;
    }
    if (truncated_mass) *truncated_mass = lost;
    return entropy;
}

RateResult single_layer_rate(const ChannelConfig& config, int layer, const SingleLayerOptions& options) {
    config.validate();
    if (layer < 1 || layer > config.num_layers) throw IndexError("layer " + std::to_string(layer) + " out of range");
    const double M = config.num_symbols;
    RateResult result;

    bool bulk = options.method == SingleLayerMethod::UniformBulk;
    if (options.method == SingleLayerMethod::Auto) bulk = all_priors_equal(config);

    if (bulk) {
        const int j0 = std::min(2, config.num_symbols);
        double lost = 0.0;
        const double h = symbol_conditional_entropy(config, layer, j0, true, options, &lost);
        result.rate_bits_per_symbol = binary_entropy(symbol_prior(config, layer, j0)) - h;
        result.truncated_mass = lost;
        return result;
    }

    // Terms depend on the symbol only through the priors they touch.
    std::map<std::vector<double>, double> memo;
    CompensatedSum h_in;
    CompensatedSum h_cond;
    for (int j = 1; j <= config.num_symbols; ++j) {
        h_in.add(binary_entropy(symbol_prior(config, layer, j)));
        std::vector<double> key;
        key.push_back(symbol_prior(config, layer, j));
        const ChipSpan span = symbol_span(config, layer, j);
        for (int t = span.first; t <= span.last; ++t) {
            for (int i = 1; i <= config.num_layers; ++i) {
                if (i != layer) key.push_back(symbol_prior(config, i, symbol_index(config, t, i)));
            }
        }
        auto it = memo.find(key);
        if (it == memo.end()) {
            double lost = 0.0;
            const double h = symbol_conditional_entropy(config, layer, j, false, options, &lost);
            result.truncated_mass = std::max(result.truncated_mass, lost);
            it = memo.emplace(std::move(key), h).first;
        }
        h_cond.add(it->second);
    }
    result.rate_bits_per_symbol = (h_in.value() - h_cond.value()) / M;
    return result;
}

RateResult sum_rate_mc(const ChannelConfig& config, const RateQuery& query) {
    config.validate();
    if (query.mc_samples < 1) throw ConfigError("mc_samples", "must be >= 1");
    std::vector<int> layers = query.layer_set;
    if (layers.empty()) {
        for (int k = 1; k <= config.num_layers; ++k) layers.push_back(k);
    }
    std::uint32_t in_set = 0;
    for (int k : layers) {
        if (k < 1 || k > config.num_layers) throw ConfigError("layer_set", "layer " + std::to_string(k) + " out of range");
        in_set |= 1U << (k - 1);
    }

    const auto n = static_cast<std::size_t>(query.mc_samples);
    std::vector<double> h(n);
    const HmmView shared(config);
    parallel_for(n, query.workers, [&](std::size_t i) {
        const LayerSymbols z = sample_symbols(config, trial_seed(query.seed, i, 0));
        const ObservationSequence obs = sample_observations(config, z, trial_seed(query.seed, i, 1));
        if (in_set == (1U << config.num_layers) - 1U) {
            h[i] = sequence_entropy_given_obs(shared, obs);
            return;
        }
        // Layers outside U are known: pin their priors to the drawn symbols.
        ChannelConfig known = config;
        for (int k = 1; k <= config.num_layers; ++k) {
            if (in_set & (1U << (k - 1))) continue;
            for (int j = 1; j <= config.num_symbols; ++j)
                known.priors(static_cast<std::size_t>(k - 1), static_cast<std::size_t>(j - 1)) = z.symbol(k, j);
        }
        h[i] = sequence_entropy_given_obs(HmmView(std::move(known)), obs);
    });

    CompensatedSum sum;
    for (double x : h) sum.add(x);
    const double mean = sum.value() / static_cast<double>(n);
    CompensatedSum sq;
    for (double x : h) sq.add((x - mean) * (x - mean));

    const double M = config.num_symbols;
    RateResult result;
    result.samples_used = query.mc_samples;
    result.rate_bits_per_symbol = (input_entropy(config, layers) - mean) / M;
    result.std_error = n > 1 ? std::sqrt(sq.value() / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n)) / M : 0.0;
    return result;
}

double ook_mutual_information(double lambda1, double lambda0, double q, double tail_epsilon) {
    const std::uint32_t cap = poisson_tail_cap(lambda0 + lambda1, tail_epsilon);
    const auto p0 = poisson_pmf_table(lambda0, cap);
    const auto p1 = poisson_pmf_table(lambda0 + lambda1, cap);
    double info = 0.0;
    for (std::size_t n = 0; n <= cap; ++n) {
        const double a = (1.0 - q) * p0[n];
        const double b = q * p1[n];
        const double m = a + b;
        if (m <= 0.0) continue;
        info += xlogx_ratio(a, (1.0 - q) * m) + xlogx_ratio(b, q * m);
    }
    return std::max(0.0, info / std::numbers::ln2);
}

namespace {

// Conditional pmfs of D = N1 - N2 for X = 0 and X = 1 (D is sufficient for X).
struct PpmDifference {
    int offset = 0;  // index of D = 0
    std::vector<double> p0;
    std::vector<double> p1;
};

PpmDifference ppm_difference(double lambda1, double lambda0, double tau, double tail_epsilon) {
    const double lo1 = tau * lambda0, hi1 = tau * (lambda0 + lambda1);
    const double lo2 = (1.0 - tau) * lambda0, hi2 = (1.0 - tau) * (lambda0 + lambda1);
    const std::uint32_t c1 = poisson_tail_cap(hi1, tail_epsilon);
    const std::uint32_t c2 = poisson_tail_cap(hi2, tail_epsilon);
    // X = 0: pulse in the second slot; X = 1: pulse in the first slot.
    const auto a1 = poisson_pmf_table(lo1, c1), a2 = poisson_pmf_table(hi2, c2);
    const auto b1 = poisson_pmf_table(hi1, c1), b2 = poisson_pmf_table(lo2, c2);
    PpmDifference d;
    d.offset = static_cast<int>(c2);
    d.p0.assign(c1 + c2 + 1, 0.0);
    d.p1.assign(c1 + c2 + 1, 0.0);
    for (std::uint32_t n1 = 0; n1 <= c1; ++n1) {
        for (std::uint32_t n2 = 0; n2 <= c2; ++n2) {
            const std::size_t idx = n1 + c2 - n2;
            d.p0[idx] += a1[n1] * a2[n2];
            d.p1[idx] += b1[n1] * b2[n2];
        }
    }
    return d;
}

double ppm_info_from_difference(const PpmDifference& d, double q) {
    double info = 0.0;
    for (std::size_t i = 0; i < d.p0.size(); ++i) {
        const double a = (1.0 - q) * d.p0[i];
        const double b = q * d.p1[i];
        const double m = a + b;
        if (m <= 0.0) continue;
        info += xlogx_ratio(a, (1.0 - q) * m) + xlogx_ratio(b, q * m);
    }
    return std::max(0.0, info / std::numbers::ln2);
}

}  // namespace

double ppm_mutual_information(double lambda1, double lambda0, double q, double tau, double tail_epsilon) {
    return ppm_info_from_difference(ppm_difference(lambda1, lambda0, tau, tail_epsilon), q);
}

ModulationComparison ook_vs_ppm(double lambda1, double lambda0, int q_grid, int tau_grid, double tail_epsilon) {
    if (q_grid < 3 || tau_grid < 3) throw ConfigError("grid", "needs at least 3 points");
    ModulationComparison out;
    out.ook_bits = -1.0;
    out.ppm_bits = -1.0;
    for (int i = 1; i < q_grid - 1; ++i) {
        const double q = static_cast<double>(i) / (q_grid - 1);
        const double v = ook_mutual_information(lambda1, lambda0, q, tail_epsilon);
        if (v > out.ook_bits) {
            out.ook_bits = v;
            out.ook_best_q = q;
        }
    }
    for (int k = 1; k < tau_grid - 1; ++k) {
        const double tau = static_cast<double>(k) / (tau_grid - 1);
        const PpmDifference d = ppm_difference(lambda1, lambda0, tau, tail_epsilon);
        for (int i = 1; i < q_grid - 1; ++i) {
            const double q = static_cast<double>(i) / (q_grid - 1);
            const double v = ppm_info_from_difference(d, q);
            if (v > out.ppm_bits) {
                out.ppm_bits = v;
                out.ppm_best_q = q;
                out.ppm_best_tau = tau;
            }
        }
    }
    return out;
}

namespace {

ChannelConfig with_split(const ChannelConfig& templ, double lambda1, double lambda2) {
    ChannelConfig c = templ;
    c.layer_rates = {lambda1, lambda2};
    return c;
}

void check_two_layers(const ChannelConfig& templ, double lambda_s, const PowerAllocOptions& options) {
    if (templ.num_layers != 2) throw ConfigError("channel.layers", "power allocation needs exactly 2 layers");
    if (!(lambda_s >= 0.0)) throw ConfigError("lambda_s", "must be >= 0");
    if (options.grid < 2) throw ConfigError("grid", "needs at least 2 points");
}

double grid_value(double lambda_s, int i, int grid) {
    if (i == grid - 1) return lambda_s;
    return lambda_s * static_cast<double>(i) / (grid - 1);
}

}  // namespace

PowerAllocation power_alloc_sum(double lambda_s, const ChannelConfig& templ, const PowerAllocOptions& options) {
    check_two_layers(templ, lambda_s, options);
    PowerAllocation out;
    RateQuery query = options.mc;
    query.layer_set.clear();
    for (int i = 0; i < options.grid; ++i) {
        PowerPoint p;
        p.lambda1 = grid_value(lambda_s, i, options.grid);
        p.lambda2 = lambda_s - p.lambda1;
        const ChannelConfig c = with_split(templ, p.lambda1, p.lambda2);
        const RateResult r = sum_rate_mc(c, query);
        p.rate_sum = r.rate_bits_per_symbol;
        p.std_error = r.std_error;
        if (options.single_layer_rates) {
            p.rate1 = single_layer_rate(c, 1, options.single).rate_bits_per_symbol;
            p.rate2 = single_layer_rate(c, 2, options.single).rate_bits_per_symbol;
        }
        out.sweep.push_back(p);
    }
    const double half = lambda_s / 2.0;
    out.best = out.sweep.front();
    for (const PowerPoint& p : out.sweep) {
        if (p.rate_sum > out.best.rate_sum ||
            (p.rate_sum == out.best.rate_sum && std::abs(p.lambda1 - half) < std::abs(out.best.lambda1 - half)))
            out.best = p;
    }
    return out;
}

PowerAllocation power_alloc_constrained(double lambda_s, double r2_floor, const ChannelConfig& templ,
                                        const PowerAllocOptions& options) {
    check_two_layers(templ, lambda_s, options);
    PowerAllocation out;
    // Ascending lambda2, i.e. descending lambda1.
    for (int i = 0; i < options.grid; ++i) {
        PowerPoint p;
        p.lambda2 = grid_value(lambda_s, i, options.grid);
        p.lambda1 = lambda_s - p.lambda2;
        const ChannelConfig c = with_split(templ, p.lambda1, p.lambda2);
        p.rate1 = single_layer_rate(c, 1, options.single).rate_bits_per_symbol;
        p.rate2 = single_layer_rate(c, 2, options.single).rate_bits_per_symbol;
        p.rate_sum = p.rate1 + p.rate2;
        out.sweep.push_back(p);
    }
    double best_r2 = 0.0;
    bool found = false;
    for (const PowerPoint& p : out.sweep) {
        best_r2 = std::max(best_r2, p.rate2);
        if (!found && p.rate2 >= r2_floor) {
            out.best = p;
            found = true;
        }
    }
    if (!found)
        throw InfeasibleError("R*_2 >= " + std::to_string(r2_floor) + " is not reachable; largest R*_2 on the grid is " +
                                  std::to_string(best_r2),
                              best_r2);
    std::reverse(out.sweep.begin(), out.sweep.end());
    return out;
}

}  // namespace superpose
