#pragma once

#include <string>
#include <variant>

#include "mfc/bounds.hpp"
#include "mfc/models.hpp"

namespace mfc {

using AnyModel = std::variant<FeynmanKacModel, McKeanGasModel, GaussianMeanFieldModel>;

/// A model definition file: the model plus its default horizon.
struct ModelFile {
    AnyModel model;
    int horizon = 0;
};

/// Parse a model definition document. Accepted "type" values:
/// "feynman_kac", "mckean_gas", "two_velocities", "gaussian". Unknown keys
/// are rejected; parse errors carry origin:line positions.
ModelFile parse_model_json(const std::string& text, const std::string& origin = "<string>");
ModelFile load_model_file(const std::string& path);

/// Certificate parameter document: either the explicit scalar bundle
/// {r, sigma_bar_sq, beta_sq, b_star} or {mixing: {...}, sigma_sq} resolved
/// through the horizon-uniform estimates.
ConcentrationParams parse_params_json(const std::string& text,
                                      const std::string& origin = "<string>");
ConcentrationParams load_params_file(const std::string& path);

/// Slurp a file; throws std::runtime_error when unreadable.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace mfc
