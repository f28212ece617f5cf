#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace memsieve::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path);

// Write via a temp file in the same directory plus rename, so a crashed run
// never leaves a half-written artifact.
void atomic_write(const std::filesystem::path& path, const std::string& content);

json parse_json_file(const std::filesystem::path& path);

void write_json_file(const std::filesystem::path& path, const ordered_json& doc);

}  // namespace memsieve::io
