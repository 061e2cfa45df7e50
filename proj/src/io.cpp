#include "superpose/io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "superpose/errors.hpp"

namespace superpose {

using nlohmann::json;

namespace {

template <typename T>
T required(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + "." + key, "missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + "." + key, e.what());
    }
}

std::vector<double> number_list(const json& j, const std::string& key, const std::string& path) {
    const auto field = path + "." + key;
    if (!j.contains(key)) throw ConfigError(field, "missing");
    const json& v = j.at(key);
    if (!v.is_array()) throw ConfigError(field, "expected a list");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(field + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

}  // namespace

ChannelConfig channel_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    ChannelConfig c;
    c.num_layers = required<int>(j, "layers", path);
    c.num_symbols = required<int>(j, "symbols_per_layer", path);
    c.aligned = j.value("aligned", false);
    if (c.num_layers < 1) throw ConfigError(path + ".layers", "must be >= 1");
    if (c.num_symbols < 1) throw ConfigError(path + ".symbols_per_layer", "must be >= 1");
    if (j.contains("delays")) {
        c.delays = number_list(j, "delays", path);
    } else {
        c.delays.assign(static_cast<std::size_t>(c.num_layers), 1.0 / c.num_layers);
    }
    c.layer_rates = number_list(j, "layer_rates", path);
    c.background_rate = required<double>(j, "background_rate", path);

    const auto L = static_cast<std::size_t>(c.num_layers);
    const auto M = static_cast<std::size_t>(c.num_symbols);
    const json priors = j.value("priors", json(0.5));
    if (priors.is_number()) {
        c.priors = Matrix<double>(L, M, priors.get<double>());
    } else if (priors.is_array()) {
        if (priors.size() != L) throw ConfigError(path + ".priors", "expected one row per layer");
        c.priors = Matrix<double>(L, M);
        for (std::size_t i = 0; i < L; ++i) {
            const auto row_path = path + ".priors[" + std::to_string(i) + "]";
            if (!priors[i].is_array() || priors[i].size() != M)
                throw ConfigError(row_path, "expected a list of symbols_per_layer priors");
            for (std::size_t m = 0; m < M; ++m) {
                if (!priors[i][m].is_number())
                    throw ConfigError(row_path + "[" + std::to_string(m) + "]", "expected a number");
                c.priors(i, m) = priors[i][m].get<double>();
            }
        }
    } else {
        throw ConfigError(path + ".priors", "expected a number or a matrix");
    }

    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(path + "." + e.field(), e.message());
    }
    return c;
}

json channel_to_json(const ChannelConfig& c) {
    json j;
    j["layers"] = c.num_layers;
    j["symbols_per_layer"] = c.num_symbols;
    j["delays"] = c.delays;
    j["layer_rates"] = c.layer_rates;
    j["background_rate"] = c.background_rate;
    j["aligned"] = c.aligned;
    bool uniform = true;
    for (double q : c.priors.data()) uniform = uniform && q == c.priors.data().front();
    if (uniform && !c.priors.data().empty()) {
        j["priors"] = c.priors.data().front();
    } else {
        json rows = json::array();
        for (std::size_t i = 0; i < c.priors.rows(); ++i) {
            const auto r = c.priors.row(i);
            rows.push_back(std::vector<double>(r.begin(), r.end()));
        }
        j["priors"] = rows;
    }
    return j;
}

ChannelConfig load_channel(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file.string(), "cannot open");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(file.string(), e.what());
    }
    if (j.contains("channel")) return channel_from_json(j.at("channel"));
    return channel_from_json(j);
}

void save_channel(const ChannelConfig& config, const std::filesystem::path& file) {
    std::ofstream out(file);
    out << channel_to_json(config).dump(2) << '\n';
}

ObservationSequence read_observations(std::istream& in) {
    ObservationSequence obs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        std::istringstream ss(line.substr(first));
        long long value = -1;
        std::string rest;
        if (!(ss >> value) || value < 0 || (ss >> rest))
            throw ConfigError("observations:" + std::to_string(line_no), "expected a non-negative integer");
        obs.counts.push_back(static_cast<std::uint32_t>(value));
    }
    return obs;
}

void write_observations(const ObservationSequence& obs, std::ostream& out) {
    for (auto n : obs.counts) out << n << '\n';
}

ObservationSequence load_observations(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file.string(), "cannot open");
    return read_observations(in);
}

void save_observations(const ObservationSequence& obs, const std::filesystem::path& file) {
    std::ofstream out(file);
    write_observations(obs, out);
}

}  // namespace superpose
