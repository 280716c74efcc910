#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "imd2/chain.hpp"
#include "imd2/train.hpp"

namespace imd2 {

using json = nlohmann::json;

/// Parses the TOML subset used by the config files: [tables] and [dotted.tables],
/// `key = value` with strings, integers, floats (including inf/nan), booleans
/// and (nested, possibly multi-line) arrays, plus # comments.
/// Non-finite floats are stored as the strings "inf", "-inf", "nan".
json parse_toml(std::string_view text);

/// Reads a `.json` file as JSON and anything else as TOML.
json load_config_file(const std::filesystem::path& path);

// Each reader starts from the defaults, overrides the keys present and
// rejects unknown keys with a ConfigError naming them.
OfdmConfig ofdm_config_from_json(const json& j);
ChainConfig chain_config_from_json(const json& j);
ModelSpec model_spec_from_json(const json& j);
OptimConfig optim_config_from_json(const json& j);

json to_json(const OfdmConfig& c);
json to_json(const ChainConfig& c);
json to_json(const ModelSpec& m);
json to_json(const OptimConfig& c);

/// Number or one of the strings "inf", "-inf", "+inf", "nan".
double json_number(const json& v, const std::string& field);
/// Non-finite values become the strings accepted by json_number.
json number_json(double v);

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const json& j);

/// Parses "1000,2000,5000" into strictly increasing positive integers.
std::vector<std::size_t> parse_checkpoints(std::string_view csv);

} // namespace imd2
