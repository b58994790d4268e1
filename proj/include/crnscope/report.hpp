#pragma once

// Canonical JSON text: sorted keys, two-space indent, doubles at 17
// significant digits, non-finite numbers as null.

#include <string>

#include <nlohmann/json.hpp>

namespace crnscope {

inline constexpr int kSchemaVersion = 1;

std::string format_double(double v);

/// Emits `j` canonically. Objects at the top level get "schema_version"
/// added if absent.
std::string emit_canonical(const nlohmann::json& j);

}  // namespace crnscope
