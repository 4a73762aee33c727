#pragma once

#include <string>

#include <json.hpp>

#include "mcq/grsbl.hpp"
#include "mcq/lse2d.hpp"
#include "mcq/quantizer.hpp"
#include "mcq/vsbl.hpp"

namespace mcq::io {

using json = nlohmann::json;

// {"m", "n", "B", "sigma_z", "entries": [[i, j, re_bin, im_bin], ...]}, bins
// of the uniform quantizer with that B and sigma_z. B = 0 marks the
// unquantized channel, whose entries are [i, j, re, im] measurements.
json to_json(const ObservedMatrix& obs);
ObservedMatrix observed_from_json(const json& j);

// {"Z_hat": {"re": [[...]], "im": [[...]]}, "rank", "gamma", "sigma2",
// "nmse_trace", "iterations"}
json to_json(const GrSblResult& result);

// {"theta", "phi", "g_re", "g_im", "r", "m", "n"}
json to_json(const LineSpectralScene& scene);
LineSpectralScene scene_from_json(const json& j);

json to_json(const FactorState& state);
FactorState factors_from_json(const json& j);

json matrix_to_json(const Eigen::MatrixXcd& z);
Eigen::MatrixXcd matrix_from_json(const json& j);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace mcq::io
