#pragma once

#include <filesystem>

#include "json.hpp"

#include "lps/bundle.hpp"
#include "lps/graph.hpp"

namespace lps {

/// "lps-graph" version 1; see docs/graph-format.md.
nlohmann::json graph_to_json(const WeightedGraph& g);
WeightedGraph graph_from_json(const nlohmann::json& j);

/// Graph plus potential (per graph vertex) and, for divergence-form bundles,
/// the per-edge coefficients.
nlohmann::json bundle_to_json(const OperatorBundle& b);
OperatorBundle bundle_from_json(const nlohmann::json& j);

void save_bundle(const std::filesystem::path& path, const OperatorBundle& b);
OperatorBundle load_bundle(const std::filesystem::path& path);

}  // namespace lps
