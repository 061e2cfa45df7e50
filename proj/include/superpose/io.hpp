#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "superpose/channel.hpp"

namespace superpose {

/// Channel config <-> JSON object with keys layers, symbols_per_layer,
/// delays, layer_rates, background_rate, priors (scalar or L x M matrix),
/// aligned. `path` prefixes field names in ConfigError messages.
ChannelConfig channel_from_json(const nlohmann::json& j, const std::string& path = "channel");
nlohmann::json channel_to_json(const ChannelConfig& config);

ChannelConfig load_channel(const std::filesystem::path& file);
void save_channel(const ChannelConfig& config, const std::filesystem::path& file);

/// One decimal count per line.
ObservationSequence read_observations(std::istream& in);
void write_observations(const ObservationSequence& obs, std::ostream& out);
ObservationSequence load_observations(const std::filesystem::path& file);
void save_observations(const ObservationSequence& obs, const std::filesystem::path& file);

}  // namespace superpose
