#include "superpose/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "superpose/detection.hpp"
#include "superpose/errors.hpp"
#include "superpose/estimation.hpp"
#include "superpose/hmm.hpp"
#include "superpose/io.hpp"
#include "superpose/ldpc.hpp"
#include "superpose/rng.hpp"
#include "superpose/turbo.hpp"

namespace superpose {

using json = nlohmann::json;

std::string library_version() { return "0.1.0"; }

namespace {

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

template <typename T>
T field(const json& j, const std::string& key, const T& fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key, "has the wrong type");
    }
}

template <typename T>
T required_field(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + "." + key, "missing");
    return field<T>(j, key, T{}, path);
}

struct Series {
    std::string name;
    json channel;
};

std::vector<Series> expand_series(const json& cfg) {
    if (!cfg.contains("channel") || !cfg["channel"].is_object()) throw ConfigError("channel", "missing or not an object");
    std::vector<Series> out;
    if (!cfg.contains("series")) {
        out.push_back({"base", cfg["channel"]});
        return out;
    }
    const json& list = cfg["series"];
    if (!list.is_array() || list.empty()) throw ConfigError("series", "expected a non-empty list");
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "series[" + std::to_string(i) + "]";
        if (!list[i].is_object()) throw ConfigError(path, "expected an object");
        Series s;
        s.name = field<std::string>(list[i], "name", "s" + std::to_string(i), path);
        s.channel = cfg["channel"];
        if (list[i].contains("patch")) s.channel.merge_patch(list[i]["patch"]);
        out.push_back(std::move(s));
    }
    return out;
}

ChannelConfig parse_channel(const json& channel, const std::string& path) { return channel_from_json(channel, path); }

RateQuery mc_query(const json& cfg, std::uint64_t seed, int workers) {
    RateQuery q;
    q.mc_samples = field<int>(cfg, "mc_samples", 200, "config");
    if (q.mc_samples < 1) throw ConfigError("mc_samples", "must be >= 1");
    q.seed = seed;
    q.workers = workers;
    return q;
}

SingleLayerOptions single_options(const json& cfg) {
    SingleLayerOptions o;
    o.tail_epsilon = field<double>(cfg, "tail_epsilon", o.tail_epsilon, "config");
    if (!(o.tail_epsilon > 0.0 && o.tail_epsilon < 1.0)) throw ConfigError("tail_epsilon", "must be in (0, 1)");
    const std::string method = field<std::string>(cfg, "method", "auto", "config");
    if (method == "auto") {
        o.method = SingleLayerMethod::Auto;
    } else if (method == "per-symbol") {
        o.method = SingleLayerMethod::PerSymbol;
    } else if (method == "bulk") {
        o.method = SingleLayerMethod::UniformBulk;
    } else {
        throw ConfigError("method", "expected auto, per-symbol or bulk");
    }
    return o;
}

std::vector<double> axis_values(const json& cfg, std::string& axis) {
    if (!cfg.contains("sweep")) throw ConfigError("sweep", "missing");
    const json& sweep = cfg["sweep"];
    axis = field<std::string>(sweep, "axis", "", "sweep");
    if (axis.empty()) throw ConfigError("sweep.axis", "missing");
    return sweep_values(sweep);
}

ObservationSequence observations_for(const json& cfg, const ChannelConfig& config, std::uint64_t seed,
                                     LayerSymbols* truth) {
    if (cfg.contains("observations")) {
        return load_observations(field<std::string>(cfg, "observations", "", "config"));
    }
    const LayerSymbols z = sample_symbols(config, Rng(seed).split(0).seed());
    if (truth) *truth = z;
    return sample_observations(config, z, Rng(seed).split(1).seed());
}

RateTable rates_for(const json& cfg, const ChannelConfig& config) {
    if (!cfg.contains("state_rates")) return true_rate_table(config);
    RateTable r = field<std::vector<double>>(cfg, "state_rates", {}, "config");
    if (r.size() != static_cast<std::size_t>(config.num_states()))
        throw ConfigError("state_rates", "expected 2^L entries");
    return r;
}

// ---- kinds ----------------------------------------------------------------

std::string run_rate_sum(const json& cfg, std::uint64_t seed, int workers, json& manifest) {
    std::string axis;
    const auto xs = axis_values(cfg, axis);
    const RateQuery q = mc_query(cfg, seed, workers);
    manifest["mc_samples"] = q.mc_samples;
    std::ostringstream csv;
    csv << "series,x,rate,std_error,samples\n";
    for (const Series& s : expand_series(cfg)) {
        for (double x : xs) {
            const ChannelConfig c = parse_channel(apply_channel_axis(s.channel, axis, x), "channel");
            const RateResult r = sum_rate_mc(c, q);
            csv << s.name << ',' << num(x) << ',' << num(r.rate_bits_per_symbol) << ',' << num(r.std_error) << ','
                << r.samples_used << '\n';
        }
    }
    return csv.str();
}

std::string run_rate_single(const json& cfg, json& manifest) {
    std::string axis;
    const auto xs = axis_values(cfg, axis);
    const SingleLayerOptions o = single_options(cfg);
    manifest["tail_epsilon"] = o.tail_epsilon;
    std::ostringstream csv;
    csv << "series,x,layer,rate,truncated_mass\n";
    for (const Series& s : expand_series(cfg)) {
        for (double x : xs) {
            const ChannelConfig c = parse_channel(apply_channel_axis(s.channel, axis, x), "channel");
            for (int k = 1; k <= c.num_layers; ++k) {
                const RateResult r = single_layer_rate(c, k, o);
                csv << s.name << ',' << num(x) << ',' << k << ',' << num(r.rate_bits_per_symbol) << ','
                    << num(r.truncated_mass) << '\n';
            }
        }
    }
    return csv.str();
}

std::string run_layer_select(const json& cfg, std::uint64_t seed, int workers, json& manifest) {
    std::string axis;
    const auto xs = axis_values(cfg, axis);
    if (axis != "lambda") throw ConfigError("sweep.axis", "layer-select sweeps lambda");
    const double sigma = field<double>(cfg, "sigma", 0.2, "config");
    const int max_layers = field<int>(cfg, "max_layers", 4, "config");
    if (!(sigma > 0.0)) throw ConfigError("sigma", "must be > 0");
    if (max_layers < 1 || max_layers > 16) throw ConfigError("max_layers", "must be in [1, 16]");
    LayerSelectOptions o;
    const json& ch = cfg["channel"];
    o.symbols = field<int>(ch, "symbols_per_layer", 500, "channel");
    o.background = field<double>(ch, "background_rate", 0.01, "channel");
    o.mc = mc_query(cfg, seed, workers);
    manifest["mc_samples"] = o.mc.mc_samples;

    std::ostringstream csv;
    csv << "lambda";
    for (int L = 1; L <= max_layers; ++L) csv << ",R_" << L;
    csv << ",L_star\n";
    std::vector<double> threshold(static_cast<std::size_t>(max_layers + 1), std::nan(""));
    for (double x : xs) {
        const LayerSelection sel = select_layers(x, sigma, max_layers, o);
        csv << num(x);
        for (const auto& r : sel.sum_rates) csv << ',' << num(r.rate_bits_per_symbol);
        csv << ',' << sel.best_layers << '\n';
        for (int L = 2; L <= sel.best_layers; ++L) {
            if (std::isnan(threshold[static_cast<std::size_t>(L)])) threshold[static_cast<std::size_t>(L)] = x;
        }
    }
    json th = json::object();
    for (int L = 2; L <= max_layers; ++L) {
        const double v = threshold[static_cast<std::size_t>(L)];
        th[std::to_string(L - 1) + "->" + std::to_string(L)] = std::isnan(v) ? json(nullptr) : json(v);
    }
    manifest["thresholds"] = th;
    return csv.str();
}

std::string run_power_alloc(const json& cfg, std::uint64_t seed, int workers, json& manifest) {
    std::string axis;
    const auto xs = axis_values(cfg, axis);
    const int which = field<int>(cfg, "case", 1, "config");
    if (which != 1 && which != 2) throw ConfigError("case", "expected 1 or 2");
    if (axis != "lambda_s" && !(which == 2 && axis == "r2_floor"))
        throw ConfigError("sweep.axis", "power-alloc sweeps lambda_s (or r2_floor for case 2)");
    PowerAllocOptions o;
    o.grid = field<int>(cfg, "grid", 101, "config");
    o.mc = mc_query(cfg, seed, workers);
    o.single = single_options(cfg);
    o.single_layer_rates = field<bool>(cfg, "single_layer_rates", which == 2, "config");
    const double fixed_ls = field<double>(cfg, "lambda_s", 20.0, "config");
    const double fixed_floor = field<double>(cfg, "r2_floor", 0.5, "config");
    manifest["grid"] = o.grid;
    if (which == 1) manifest["mc_samples"] = o.mc.mc_samples;

    std::ostringstream csv;
    csv << "series,lambda_s,r2_floor,lambda1,lambda2,R1,R2,R_sum,std_error,best\n";
    for (const Series& s : expand_series(cfg)) {
        ChannelConfig templ = parse_channel(s.channel, "channel");
        for (double x : xs) {
            const double ls = axis == "lambda_s" ? x : fixed_ls;
            const double floor = axis == "r2_floor" ? x : fixed_floor;
            PowerAllocation pa;
            bool feasible = true;
            if (which == 1) {
                pa = power_alloc_sum(ls, templ, o);
            } else {
                try {
                    pa = power_alloc_constrained(ls, floor, templ, o);
                } catch (const InfeasibleError&) {
                    feasible = false;
                }
            }
            if (!feasible) {
                csv << s.name << ',' << num(ls) << ',' << num(floor) << ",nan,nan,nan,nan,nan,nan,infeasible\n";
                continue;
            }
            for (const PowerPoint& p : pa.sweep) {
                const bool best = p.lambda1 == pa.best.lambda1 && p.lambda2 == pa.best.lambda2;
                csv << s.name << ',' << num(ls) << ',' << (which == 2 ? num(floor) : std::string("nan")) << ','
                    << num(p.lambda1) << ',' << num(p.lambda2) << ',' << num(p.rate1) << ',' << num(p.rate2) << ','
                    << num(p.rate_sum) << ',' << num(p.std_error) << ',' << (best ? 1 : 0) << '\n';
            }
        }
    }
    return csv.str();
}

std::vector<std::uint8_t> parse_bits(const std::string& text, const std::string& path) {
    std::vector<std::uint8_t> bits;
    for (char ch : text) {
        if (ch == '0' || ch == '1') {
            bits.push_back(static_cast<std::uint8_t>(ch - '0'));
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            throw ConfigError(path, "pilot bits must be 0/1 characters");
        }
    }
    if (bits.empty()) throw ConfigError(path, "no pilot bits");
    return bits;
}

std::vector<std::uint8_t> pilot_sequence(const json& cfg) {
    if (cfg.contains("pilot_bits")) return parse_bits(field<std::string>(cfg, "pilot_bits", "", "config"), "pilot_bits");
    if (cfg.contains("pilot_file")) {
        const auto path = field<std::string>(cfg, "pilot_file", "", "config");
        std::ifstream in(path);
        if (!in) throw ConfigError("pilot_file", "cannot open " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        std::string text = ss.str();
        // Hex if any hex letter or an 0x prefix appears.
        const bool hex = text.find("0x") != std::string::npos ||
                         std::any_of(text.begin(), text.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) && !std::isdigit(static_cast<unsigned char>(c)); });
        if (!hex) return parse_bits(text, "pilot_file");
        std::vector<std::uint8_t> bits;
        std::size_t start = text.find("0x");
        for (std::size_t i = start == std::string::npos ? 0 : start + 2; i < text.size(); ++i) {
            const char c = text[i];
            if (std::isspace(static_cast<unsigned char>(c))) continue;
            if (!std::isxdigit(static_cast<unsigned char>(c))) throw ConfigError("pilot_file", "bad hex digit");
            const int v = std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : std::tolower(c) - 'a' + 10;
            for (int b = 3; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((v >> b) & 1));
        }
        if (bits.empty()) throw ConfigError("pilot_file", "no pilot bits");
        return bits;
    }
    return m_sequence();
}

std::string run_estimate(const json& cfg, std::uint64_t seed, json& manifest) {
    const ChannelConfig c = parse_channel(cfg["channel"], "channel");
    const auto layers = field<std::vector<int>>(cfg, "pilot_layers", {0, 1}, "config");
    if (layers.empty()) throw ConfigError("pilot_layers", "must not be empty");
    const int trials = field<int>(cfg, "trials", 1, "config");
    if (trials < 1) throw ConfigError("trials", "must be >= 1");
    EstimationOptions eo;
    eo.tol = field<double>(cfg, "tol", 1e-4, "config");
    eo.max_iters = field<int>(cfg, "max_iters", 200, "config");
    const auto seq = pilot_sequence(cfg);
    manifest["pilot_length"] = seq.size();
    manifest["trials"] = trials;
    const int frame_layers = *std::max_element(layers.begin(), layers.end());
    const PilotConfig frame_pilots = PilotConfig::tiled(c, frame_layers, seq);

    std::ostringstream csv;
    csv << "trial,pilot_layers,iteration,state,lambda_hat,log_likelihood\n";
    for (int trial = 0; trial < trials; ++trial) {
        const Rng r = Rng(seed).split(static_cast<std::uint64_t>(trial));
        // Every pilot setting sees the same frame and counts.
        const LayerSymbols z = pilot_frame(c, frame_pilots, r.split(0).seed());
        const ObservationSequence obs = sample_observations(c, z, r.split(1).seed());
        for (int lp : layers) {
            const PilotConfig p = PilotConfig::tiled(c, lp, seq);
            const EstimationResult er = em_estimate(c, p, obs, default_init(c, p, obs), eo);
            for (const auto& snap : er.trajectory) {
                for (std::size_t s = 0; s < snap.lambda_hat.size(); ++s) {
                    csv << trial << ',' << lp << ',' << snap.iteration << ',' << s << ',' << num(snap.lambda_hat[s]) << ','
                        << num(snap.log_likelihood) << '\n';
                }
            }
        }
    }
    return csv.str();
}

std::string run_detect(const json& cfg, std::uint64_t seed, json& manifest) {
    const ChannelConfig c = parse_channel(cfg["channel"], "channel");
    const std::string algo = field<std::string>(cfg, "algo", "bcjr", "config");
    if (algo != "bcjr" && algo != "viterbi") throw ConfigError("algo", "expected viterbi or bcjr");
    LayerSymbols truth;
    const ObservationSequence obs = observations_for(cfg, c, seed, &truth);
    const RateTable rates = rates_for(cfg, c);
    const DetectionOutput d = algo == "bcjr" ? bcjr_posteriors(c, rates, obs) : viterbi_detect(c, rates, obs);
    if (algo == "viterbi") manifest["path_metric"] = d.path_metric;
    const bool has_truth = !cfg.contains("observations");
    std::ostringstream csv;
    csv << "layer,symbol,bit,posterior" << (has_truth ? ",sent" : "") << '\n';
    for (int k = 1; k <= c.num_layers; ++k) {
        for (int j = 1; j <= c.num_symbols; ++j) {
            const auto r = static_cast<std::size_t>(k - 1), m = static_cast<std::size_t>(j - 1);
            csv << k << ',' << j << ',' << int(d.hard_bits.bits(r, m)) << ','
                << (algo == "bcjr" ? num(d.posteriors(r, m)) : std::string("nan"));
            if (has_truth) csv << ',' << truth.symbol(k, j);
            csv << '\n';
        }
    }
    return csv.str();
}

std::string run_trellis(const json& cfg, std::uint64_t seed) {
    const ChannelConfig c = parse_channel(cfg["channel"], "channel");
    const ObservationSequence obs = observations_for(cfg, c, seed, nullptr);
    const TrellisPosterior post = forward_backward(HmmView(c, rates_for(cfg, c)), obs);
    std::ostringstream csv;
    csv << "t,state,posterior\n";
    for (int t = 1; t <= chip_count(c); ++t) {
        for (std::uint32_t s = 0; s < static_cast<std::uint32_t>(c.num_states()); ++s)
            csv << t << ',' << s << ',' << num(post.state_posterior(t, s)) << '\n';
    }
    return csv.str();
}

std::string run_ber(const json& cfg, std::uint64_t seed, int workers, json& manifest) {
    std::string axis;
    const auto xs = axis_values(cfg, axis);
    if (axis != "lambda" && axis != "lambda_ave") throw ConfigError("sweep.axis", "ber-sim sweeps lambda_ave");
    const std::string code_path = field<std::string>(cfg, "code", "default", "config");
    const LdpcCode code = code_path == "default" ? LdpcCode::desk_default() : LdpcCode::load_alist(code_path);
    BerOptions o;
    o.frames = field<int>(cfg, "frames", 50, "config");
    o.seed = seed;
    o.workers = workers;
    const std::string mode = field<std::string>(cfg, "mode", "map", "config");
    if (mode == "map") {
        o.turbo.mode = DecodeMode::MAP;
    } else if (mode == "ml") {
        o.turbo.mode = DecodeMode::ML;
    } else {
        throw ConfigError("mode", "expected ml or map");
    }
    o.turbo.global_iters = field<int>(cfg, "global_iters", 5, "config");
    o.turbo.ldpc_iters = field<int>(cfg, "ldpc_iters", 25, "config");
    o.turbo.extrinsic_feedback = field<bool>(cfg, "extrinsic_feedback", false, "config");
    o.turbo.bcjr_init = field<bool>(cfg, "bcjr_init", false, "config");
    o.turbo.ml_form = field<std::string>(cfg, "ml_posterior", "as-printed", "config") == "standard"
                          ? MlPosteriorForm::Standard
                          : MlPosteriorForm::AsPrinted;
    manifest["code"] = {{"source", code_path}, {"n", code.n()}, {"k", code.k()}};
    manifest["frames"] = o.frames;

    std::ostringstream csv;
    csv << "series,lambda_ave,uncoded_ser,coded_ber,frames,bits,symbols,symbol_errors,bit_errors\n";
    for (const Series& s : expand_series(cfg)) {
        json ch = s.channel;
        ch["symbols_per_layer"] = code.n();
        if (ch.contains("priors") && !ch["priors"].is_number()) ch.erase("priors");
        const ChannelConfig templ = parse_channel(apply_channel_axis(ch, "lambda", 1.0), "channel");
        for (double x : xs) {
            const BerPoint p = simulate_ber(templ, code, x, o);
            csv << s.name << ',' << num(x) << ',' << num(p.uncoded_ser) << ',' << num(p.coded_ber) << ',' << p.frames
                << ',' << p.bits << ',' << p.symbols << ',' << p.symbol_errors << ',' << p.bit_errors << '\n';
        }
    }
    return csv.str();
}

std::string run_ook_ppm(const json& cfg, json& manifest) {
    std::string axis;
    const auto xs = axis_values(cfg, axis);
    if (axis != "lambda1" && axis != "lambda") throw ConfigError("sweep.axis", "ook-vs-ppm sweeps lambda1");
    double background = field<double>(cfg, "background_rate", std::nan(""), "config");
    if (std::isnan(background)) {
        background = cfg.contains("channel") ? field<double>(cfg["channel"], "background_rate", 0.01, "channel") : 0.01;
    }
    const int qg = field<int>(cfg, "q_grid", 101, "config");
    const int tg = field<int>(cfg, "tau_grid", 101, "config");
    manifest["background_rate"] = background;
    std::ostringstream csv;
    csv << "lambda1,ook_bits,ppm_bits,ook_q,ppm_q,ppm_tau\n";
    for (double x : xs) {
        const ModulationComparison m = ook_vs_ppm(x, background, qg, tg);
        csv << num(x) << ',' << num(m.ook_bits) << ',' << num(m.ppm_bits) << ',' << num(m.ook_best_q) << ','
            << num(m.ppm_best_q) << ',' << num(m.ppm_best_tau) << '\n';
    }
    return csv.str();
}

}  // namespace

LayerSelection select_layers(double lambda, double sigma, int max_layers, const LayerSelectOptions& options) {
    if (!(sigma > 0.0)) throw ConfigError("sigma", "must be > 0");
    if (max_layers < 1) throw ConfigError("max_layers", "must be >= 1");
    LayerSelection out;
    RateQuery q = options.mc;
    q.layer_set.clear();
    bool growing = true;
    for (int L = 1; L <= max_layers; ++L) {
        const ChannelConfig c = ChannelConfig::symmetric(L, options.symbols, lambda, options.background, 0.5);
        out.sum_rates.push_back(sum_rate_mc(c, q));
        if (L > 1 && growing) {
            const double gain = out.sum_rates[static_cast<std::size_t>(L - 1)].rate_bits_per_symbol -
                                out.sum_rates[static_cast<std::size_t>(L - 2)].rate_bits_per_symbol;
            if (gain >= sigma) {
                out.best_layers = L;
            } else {
                growing = false;
            }
        }
    }
    return out;
}

json apply_channel_axis(json channel, const std::string& axis, double value) {
    auto whole = [&](const char* name) {
        if (value != std::floor(value) || value < 1) throw ConfigError(std::string("sweep.") + name, "needs positive integers");
        return static_cast<int>(value);
    };
    auto scalar_priors = [&] {
        if (channel.contains("priors") && !channel["priors"].is_number())
            throw ConfigError("channel.priors", "must be a scalar when sweeping the frame shape");
    };
    if (axis == "symbols_per_layer") {
        scalar_priors();
        channel["symbols_per_layer"] = whole("symbols_per_layer");
    } else if (axis == "rho1") {
        if (field<int>(channel, "layers", 0, "channel") != 2) throw ConfigError("sweep.axis", "rho1 needs two layers");
        channel["delays"] = {value, 1.0 - value};
        channel["aligned"] = false;
    } else if (axis == "lambda" || axis == "lambda_ave") {
        const int L = required_field<int>(channel, "layers", "channel");
        channel["layer_rates"] = std::vector<double>(static_cast<std::size_t>(std::max(L, 0)), value);
    } else if (axis == "background_rate") {
        channel["background_rate"] = value;
    } else if (axis == "layers") {
        scalar_priors();
        const int L = whole("layers");
        double lambda = 0.0;
        if (channel.contains("layer_rates") && channel["layer_rates"].is_array() && !channel["layer_rates"].empty())
            lambda = channel["layer_rates"][0].get<double>();
        channel["layers"] = L;
        channel.erase("delays");
        channel["layer_rates"] = std::vector<double>(static_cast<std::size_t>(L), lambda);
    } else {
        throw ConfigError("sweep.axis", "unknown axis '" + axis + "'");
    }
    return channel;
}

std::vector<double> sweep_values(const json& sweep, const std::string& path) {
    if (!sweep.is_object()) throw ConfigError(path, "expected an object");
    std::vector<double> v;
    if (sweep.contains("values")) {
        v = field<std::vector<double>>(sweep, "values", {}, path);
    } else if (sweep.contains("step")) {
        const double from = required_field<double>(sweep, "from", path);
        const double to = required_field<double>(sweep, "to", path);
        const double step = required_field<double>(sweep, "step", path);
        if (!(step > 0.0) || to < from) throw ConfigError(path, "needs from <= to and step > 0");
        const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
        for (long i = 0; i <= n; ++i) v.push_back(from + static_cast<double>(i) * step);
    } else if (sweep.contains("count")) {
        const double from = required_field<double>(sweep, "from", path);
        const double to = required_field<double>(sweep, "to", path);
        const int count = required_field<int>(sweep, "count", path);
        const std::string spacing = field<std::string>(sweep, "spacing", "linear", path);
        if (count < 1) throw ConfigError(path + ".count", "must be >= 1");
        for (int i = 0; i < count; ++i) {
            const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
            if (spacing == "log") {
                if (!(from > 0.0 && to > 0.0)) throw ConfigError(path, "log spacing needs positive bounds");
                v.push_back(std::exp(std::log(from) + f * (std::log(to) - std::log(from))));
            } else if (spacing == "linear") {
                v.push_back(from + f * (to - from));
            } else {
                throw ConfigError(path + ".spacing", "expected linear or log");
            }
        }
        if (field<bool>(sweep, "integer", false, path)) {
            for (double& x : v) x = std::round(x);
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }
    } else {
        throw ConfigError(path, "needs values, from/to/step or from/to/count");
    }
    if (v.empty()) throw ConfigError(path, "sweep is empty");
    return v;
}

ExperimentOutput run_experiment(const json& input, const RunOptions& options) {
    if (!input.is_object()) throw ConfigError("config", "expected an object");
    json cfg = input;
    json shrinks = json::array();
    if (options.scale != "desk" && options.scale != "paper") throw ConfigError("scale", "expected desk or paper");
    if (cfg.contains("paper")) {
        const json flat = cfg["paper"].flatten();
        for (auto it = flat.begin(); it != flat.end(); ++it) {
            const json::json_pointer ptr(it.key());
            shrinks.push_back({{"field", it.key()},
                               {"desk", cfg.contains(ptr) ? cfg.at(ptr) : json(nullptr)},
                               {"paper", it.value()}});
        }
        if (options.scale == "paper") cfg.merge_patch(cfg["paper"]);
        cfg.erase("paper");
    }

    ExperimentOutput out;
    out.kind = field<std::string>(cfg, "kind", "", "config");
    const std::uint64_t seed = options.seed ? *options.seed : field<std::uint64_t>(cfg, "seed", 1, "config");
    const int workers = options.workers ? *options.workers : field<int>(cfg, "workers", 1, "config");
    if (workers < 1) throw ConfigError("workers", "must be >= 1");

    json manifest;
    manifest["kind"] = out.kind;
    manifest["seed"] = seed;
    manifest["scale"] = options.scale;
    manifest["scale_shrinks"] = shrinks;
    manifest["version"] = library_version();
    manifest["config"] = input;

    if (out.kind == "rate-sum") {
        out.csv = run_rate_sum(cfg, seed, workers, manifest);
    } else if (out.kind == "rate-single") {
        out.csv = run_rate_single(cfg, manifest);
    } else if (out.kind == "layer-select") {
        out.csv = run_layer_select(cfg, seed, workers, manifest);
    } else if (out.kind == "power-alloc") {
        out.csv = run_power_alloc(cfg, seed, workers, manifest);
    } else if (out.kind == "estimate") {
        out.csv = run_estimate(cfg, seed, manifest);
    } else if (out.kind == "detect") {
        out.csv = run_detect(cfg, seed, manifest);
    } else if (out.kind == "ber-sim") {
        out.csv = run_ber(cfg, seed, workers, manifest);
    } else if (out.kind == "ook-vs-ppm") {
        out.csv = run_ook_ppm(cfg, manifest);
    } else if (out.kind == "trellis") {
        out.csv = run_trellis(cfg, seed);
    } else {
        throw ConfigError("kind", "unknown experiment kind '" + out.kind + "'");
    }
    if (cfg.contains("channel")) manifest["channel"] = cfg["channel"];
    out.manifest = std::move(manifest);
    return out;
}

void write_experiment(const ExperimentOutput& output, const std::filesystem::path& dir, double wall_seconds) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / (output.kind + ".csv"), std::ios::binary);
        if (!csv) throw ConfigError("out", "cannot write into " + dir.string());
        csv << output.csv;
    }
    json manifest = output.manifest;
    manifest["wall_seconds"] = wall_seconds;
    manifest["csv"] = output.kind + ".csv";
    std::ofstream m(dir / "manifest.json");
    if (!m) throw ConfigError("out", "cannot write into " + dir.string());
    m << manifest.dump(2) << '\n';
}

}  // namespace superpose
