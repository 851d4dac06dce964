#pragma once

#include <filesystem>
#include <string>

#include "kolmo/bsde/model.hpp"

namespace kolmo::bsde {

inline constexpr int kModelFormatVersion = 1;

/// Versioned text format: a header with scheme, grid and input scaling, then
/// every network as its widths followed by its raw parameters in hexfloat.
/// Reading back yields a bit-identical model.
std::string serialize_model(const DeepBsdeModel& model);
DeepBsdeModel deserialize_model(const std::string& text);

void save_model(const DeepBsdeModel& model, const std::filesystem::path& path);
DeepBsdeModel load_model(const std::filesystem::path& path);

/// Same format restricted to one network, used by the linear solver.
std::string serialize_mlp(const Mlp& net);
Mlp deserialize_mlp(const std::string& text);

}  // namespace kolmo::bsde
