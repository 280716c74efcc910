#pragma once

#include <filesystem>

#include <json.hpp>

#include "imd2/train.hpp"

namespace imd2 {

/// {type:"chebyshev", delays, order, input_scale, theta:[[...] x K]} or
/// {type:"nn", delays, widths, activation, input_scale, weights:[layer][row][col]}.
nlohmann::json model_to_json(const AnyModel& model);
AnyModel model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_model(const std::filesystem::path& path);

} // namespace imd2
