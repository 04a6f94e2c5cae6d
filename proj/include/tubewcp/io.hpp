#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace tubewcp::io {

/// Writes content to path via a temp file + atomic rename, so failed
/// commands never leave partial output behind.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// atomic_write of j.dump(2) + newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace tubewcp::io
