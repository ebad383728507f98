#pragma once

// JSON views of the result types, used by the command-line tool.

#include "curvedim/density.hpp"
#include "curvedim/dimension.hpp"
#include "curvedim/ts_models.hpp"

#include <nlohmann/json.hpp>

#include <string_view>

namespace curvedim {

inline constexpr std::string_view kArtifactVersion = "1.0.0";

nlohmann::json eigenvalues_json(const Vector& eigenvalues);
nlohmann::json to_json(const EigenDecomposition& dec);
nlohmann::json to_json(const DimensionReport& report);
nlohmann::json to_json(const PortmanteauResult& result);

/// Coefficients as {"A1": [[a_{1,11}, a_{1,12}], ...], ...}, innovation
/// covariance, and the AIC row centered at its minimum.
nlohmann::json to_json(const VarFit& fit);

nlohmann::json to_json(const DensityPanel& panel, const DensityConfig& cfg);

nlohmann::json error_json(const Error& error);

}  // namespace curvedim
