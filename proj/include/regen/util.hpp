#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace regen {

using Json = nlohmann::ordered_json;

// 64-bit FNV-1a; used for transcript lookup keys.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// Lowercase hex SHA-256 of the bytes; used for manifest content hashes.
std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Parses JSON text, converting library errors into kParse errors that carry
// "<origin>:<line>:<column>".
Json parse_json(std::string_view text, const std::string& origin);
Json load_json(const std::filesystem::path& path);
std::string dump_json(const Json& value);

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);
// Collapses runs of whitespace to one space and trims.
std::string normalize_space(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split(std::string_view text, char sep);
bool starts_with(std::string_view text, std::string_view prefix);
bool ends_with(std::string_view text, std::string_view suffix);

// Renders a list the way the prompt templates expect: ['a', 'b'].
std::string python_list(const std::vector<std::string>& items);

// Shortest decimal text that round-trips; deterministic across runs.
std::string format_double(double value);

}  // namespace regen
