#pragma once

#include <string>
#include <vector>

// Column layout of every output file. Kept in lockstep with schema/outputs.json by the test suite.
namespace coexist::cli::schema {

inline const std::vector<std::string> eig = {"form", "sigma1", "residual", "iterations", "n", "gap"};
inline const std::vector<std::string> semitrivial = {"gamma", "exists", "sup_norm", "margin"};
inline const std::vector<std::string> curves = {"param", "curve", "value", "form", "gap"};
inline const std::vector<std::string> branch = {"step", "param", "sup_u", "sup_v", "min_u", "min_v", "arclength"};
inline const std::vector<std::string> region = {"lambda", "mu", "verdict", "probe_residual"};
inline const std::vector<std::string> check = {"hypothesis", "condition", "u", "v", "x", "value"};
inline const std::vector<std::string> verdict_json = {"termination", "side", "fixed_parameter", "fixed_value",
                                                      "free_parameter", "parameter", "matched_eigenvalue",
                                                      "mismatch", "tolerance", "matched", "points", "detail"};

} // namespace coexist::cli::schema
