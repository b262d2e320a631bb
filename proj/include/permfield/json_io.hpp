#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "permfield/lattice.hpp"
#include "permfield/markov.hpp"
#include "permfield/measures.hpp"

namespace permfield {

/// {"states":[...], "rates":[[...]], "kill":[...], "m":[...]},
/// matrices row-major doubles.
ModelSpec model_spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json model_spec_to_json(const ModelSpec& spec);

/// One measure: atoms keyed by state name, e.g. {"a": 1.0, "b": -0.5}.
SignedMeasure measure_from_json(const nlohmann::json& j, const MarkovModel& model);
nlohmann::ordered_json measure_to_json(const SignedMeasure& nu,
                                       const MarkovModel& model);

/// Measures file: {"measures":[{"name":"nu1","atoms":{...}}, ...]}.
std::vector<std::pair<std::string, SignedMeasure>> measures_from_json(
    const nlohmann::json& j, const MarkovModel& model);

/// {"d":1,"N":64,"beta":1.0,"exponent":{"kind":"rw","params":{...}}}.
/// Kinds: "rw" (params rate, drift), "stable_surrogate" (alpha, scale),
/// "table" (re, im arrays of length N^d).
LatticeKernel lattice_kernel_from_json(const nlohmann::json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace permfield
