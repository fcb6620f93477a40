#pragma once

// Internal: lets other modules embed forests in their own JSON documents
// without re-parsing text.

#include <string>

#include "aqd/forest.hpp"
#include "json.hpp"

namespace aqd::forest::detail {

/// Appends the forest document to `out` (compact, no trailing newline).
void append_forest_json(std::string& out, const Forest& forest);
Forest forest_from_json(const nlohmann::json& doc);

}  // namespace aqd::forest::detail
