#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "superpose/detection.hpp"
#include "superpose/errors.hpp"
#include "superpose/estimation.hpp"
#include "superpose/experiment.hpp"
#include "superpose/hmm.hpp"
#include "superpose/io.hpp"
#include "superpose/ldpc.hpp"
#include "superpose/rates.hpp"
#include "superpose/turbo.hpp"

namespace py = pybind11;
namespace sp = superpose;
using json = nlohmann::json;

namespace {

template <typename T>
std::vector<std::vector<T>> rows(const sp::Matrix<T>& m) {
    std::vector<std::vector<T>> out;
    for (std::size_t r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
    return out;
}

std::vector<std::vector<int>> bit_rows(const sp::LayerSymbols& z) {
    std::vector<std::vector<int>> out;
    for (std::size_t r = 0; r < z.bits.rows(); ++r) out.emplace_back(z.bits.row(r).begin(), z.bits.row(r).end());
    return out;
}

sp::LayerSymbols symbols_from(const std::vector<std::vector<int>>& bits) {
    const int L = static_cast<int>(bits.size());
    const int M = L ? static_cast<int>(bits.front().size()) : 0;
    sp::LayerSymbols z(L, M);
    for (int k = 0; k < L; ++k) {
        if (static_cast<int>(bits[static_cast<std::size_t>(k)].size()) != M)
            throw sp::ConfigError("symbols", "rows must have equal length");
        for (int j = 0; j < M; ++j)
            z.bits(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) =
                static_cast<std::uint8_t>(bits[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] != 0);
    }
    return z;
}

sp::ObservationSequence obs_from(const std::vector<std::uint32_t>& counts) { return sp::ObservationSequence{counts}; }

sp::ChannelConfig channel_from_str(const std::string& text) { return sp::channel_from_json(json::parse(text)); }

py::dict rate_dict(const sp::RateResult& r) {
    py::dict d;
    d["rate"] = r.rate_bits_per_symbol;
    d["std_error"] = r.std_error;
    d["samples"] = r.samples_used;
    d["truncated_mass"] = r.truncated_mass;
    return d;
}

}  // namespace

PYBIND11_MODULE(_superpose, m) {
    m.doc() = "Superimposed multi-layer OOK over a discrete Poisson channel";

    py::register_exception<sp::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<sp::DegenerateLikelihood>(m, "DegenerateLikelihood", PyExc_RuntimeError);
    py::register_exception<sp::BudgetError>(m, "BudgetError", PyExc_RuntimeError);
    py::register_exception<sp::InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
    py::register_exception<sp::InitError>(m, "InitError", PyExc_ValueError);

    py::class_<sp::ChannelConfig>(m, "ChannelConfig")
        .def_static("symmetric", &sp::ChannelConfig::symmetric, py::arg("layers"), py::arg("symbols"), py::arg("rate"),
                    py::arg("background"), py::arg("prior") = 0.5, py::arg("aligned") = false)
        .def_static("_from_json", &channel_from_str)
        .def("_to_json", [](const sp::ChannelConfig& c) { return sp::channel_to_json(c).dump(); })
        .def_readwrite("num_layers", &sp::ChannelConfig::num_layers)
        .def_readwrite("num_symbols", &sp::ChannelConfig::num_symbols)
        .def_readwrite("delays", &sp::ChannelConfig::delays)
        .def_readwrite("layer_rates", &sp::ChannelConfig::layer_rates)
        .def_readwrite("background_rate", &sp::ChannelConfig::background_rate)
        .def_readwrite("aligned", &sp::ChannelConfig::aligned)
        .def_property(
            "priors", [](const sp::ChannelConfig& c) { return rows(c.priors); },
            [](sp::ChannelConfig& c, const std::vector<std::vector<double>>& p) {
                sp::Matrix<double> x(p.size(), p.empty() ? 0 : p.front().size());
                for (std::size_t r = 0; r < p.size(); ++r) {
                    if (p[r].size() != x.cols()) throw sp::ConfigError("priors", "rows must have equal length");
                    for (std::size_t k = 0; k < x.cols(); ++k) x(r, k) = p[r][k];
                }
                c.priors = std::move(x);
            })
        .def("validate", &sp::ChannelConfig::validate)
        .def("chip_count", [](const sp::ChannelConfig& c) { return sp::chip_count(c); });

    m.def("sample_symbols", [](const sp::ChannelConfig& c, std::uint64_t seed) { return bit_rows(sp::sample_symbols(c, seed)); },
          py::arg("config"), py::arg("seed"));
    m.def(
        "sample_observations",
        [](const sp::ChannelConfig& c, const std::vector<std::vector<int>>& z, std::uint64_t seed) {
            return sp::sample_observations(c, symbols_from(z), seed).counts;
        },
        py::arg("config"), py::arg("symbols"), py::arg("seed"));

    m.def(
        "log_likelihood",
        [](const sp::ChannelConfig& c, const std::vector<std::uint32_t>& n) { return sp::forward_backward(c, obs_from(n)).log_likelihood; },
        py::arg("config"), py::arg("counts"));
    m.def(
        "sequence_entropy",
        [](const sp::ChannelConfig& c, const std::vector<std::uint32_t>& n) { return sp::sequence_entropy_given_obs(c, obs_from(n)); },
        py::arg("config"), py::arg("counts"));

    m.def("binary_entropy", &sp::binary_entropy);
    m.def(
        "sum_rate_mc",
        [](const sp::ChannelConfig& c, std::vector<int> layer_set, int samples, std::uint64_t seed, int workers) {
            sp::RateQuery q;
            q.layer_set = std::move(layer_set);
            q.mc_samples = samples;
            q.seed = seed;
            q.workers = workers;
            return rate_dict(sp::sum_rate_mc(c, q));
        },
        py::arg("config"), py::arg("layer_set") = std::vector<int>{}, py::arg("samples") = 200, py::arg("seed") = 1,
        py::arg("workers") = 1);
    m.def(
        "single_layer_rate",
        [](const sp::ChannelConfig& c, int layer, double tail_epsilon) {
            sp::SingleLayerOptions o;
            o.tail_epsilon = tail_epsilon;
            return rate_dict(sp::single_layer_rate(c, layer, o));
        },
        py::arg("config"), py::arg("layer"), py::arg("tail_epsilon") = 1e-10);
    m.def("ook_mutual_information", &sp::ook_mutual_information, py::arg("lambda1"), py::arg("lambda0"), py::arg("q"),
          py::arg("tail_epsilon") = 1e-12);
    m.def("ppm_mutual_information", &sp::ppm_mutual_information, py::arg("lambda1"), py::arg("lambda0"), py::arg("q"),
          py::arg("tau"), py::arg("tail_epsilon") = 1e-12);

    m.def(
        "viterbi_detect",
        [](const sp::ChannelConfig& c, const std::vector<std::uint32_t>& n) {
            const auto d = sp::viterbi_detect(c, sp::true_rate_table(c), obs_from(n));
            return py::make_tuple(bit_rows(d.hard_bits), d.path_metric);
        },
        py::arg("config"), py::arg("counts"));
    m.def(
        "bcjr_posteriors",
        [](const sp::ChannelConfig& c, const std::vector<std::uint32_t>& n) {
            return rows(sp::bcjr_posteriors(c, sp::true_rate_table(c), obs_from(n)).posteriors);
        },
        py::arg("config"), py::arg("counts"));

    m.def("m_sequence", &sp::m_sequence, py::arg("degree") = 8, py::arg("taps") = std::vector<int>{4, 3, 2});
    m.def(
        "em_estimate",
        [](const sp::ChannelConfig& c, int pilot_layers, const std::vector<std::uint8_t>& pilot_sequence,
           const std::vector<std::uint32_t>& n, double tol, int max_iters) {
            const auto p = sp::PilotConfig::tiled(c, pilot_layers, pilot_sequence);
            sp::EstimationOptions o;
            o.tol = tol;
            o.max_iters = max_iters;
            const auto obs = obs_from(n);
            const auto r = sp::em_estimate(c, p, obs, sp::default_init(c, p, obs), o);
            py::dict d;
            d["rates"] = r.lambda_hat;
            d["iterations"] = r.iterations_run;
            d["converged"] = r.converged;
            std::vector<double> ll;
            for (const auto& s : r.trajectory) ll.push_back(s.log_likelihood);
            d["log_likelihood"] = ll;
            return d;
        },
        py::arg("config"), py::arg("pilot_layers"), py::arg("pilot_sequence"), py::arg("counts"), py::arg("tol") = 1e-6,
        py::arg("max_iters") = 200);

    py::class_<sp::LdpcCode>(m, "LdpcCode")
        .def_static("default", &sp::LdpcCode::desk_default)
        .def_static("load_alist", &sp::LdpcCode::load_alist)
        .def_static("quasi_cyclic", &sp::LdpcCode::quasi_cyclic)
        .def_property_readonly("n", &sp::LdpcCode::n)
        .def_property_readonly("k", &sp::LdpcCode::k)
        .def("encode", [](const sp::LdpcCode& c, const std::vector<std::uint8_t>& u) { return c.encode(u); })
        .def("is_codeword", [](const sp::LdpcCode& c, const std::vector<std::uint8_t>& w) { return c.is_codeword(w); })
        .def(
            "decode",
            [](const sp::LdpcCode& c, const std::vector<double>& llr, int max_iters, double scale) {
                const auto r = sp::ldpc_decode(c, llr, max_iters, scale);
                return py::make_tuple(r.bits, r.converged, r.iterations);
            },
            py::arg("llr"), py::arg("max_iters") = 25, py::arg("scale") = 0.75);

    m.def(
        "_run_experiment",
        [](const std::string& text, std::optional<std::uint64_t> seed, std::optional<int> workers, const std::string& scale) {
            sp::RunOptions o;
            o.seed = seed;
            o.workers = workers;
            o.scale = scale;
            sp::ExperimentOutput out;
            {
                py::gil_scoped_release release;
                out = sp::run_experiment(json::parse(text), o);
            }
            return py::make_tuple(out.kind, out.csv, out.manifest.dump());
        },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("workers") = py::none(), py::arg("scale") = "desk");
    m.attr("__version__") = sp::library_version();
}
