#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rulf {

// --- timestamps ------------------------------------------------------------
// Log timestamps are UTC seconds since the Unix epoch. The text form is
// ISO-8601 "YYYY-MM-DDTHH:MM:SSZ".

std::optional<std::int64_t> parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t epoch_seconds);

// --- CSV -------------------------------------------------------------------

std::vector<std::string> split_csv_line(const std::string& line);
// Splits into at most max_fields pieces; the last piece keeps any commas.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t max_fields);

std::optional<double> parse_double(const std::string& text);
std::optional<std::int64_t> parse_int(const std::string& text);

// Shortest text that parses back to the same double.
std::string format_double(double v);

std::string trim(const std::string& s);

// --- files -----------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);
// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// --- binary ----------------------------------------------------------------
// All binary payloads are little-endian regardless of host order.

void append_u32(std::string& out, std::uint32_t v);
void append_u64(std::string& out, std::uint64_t v);
void append_i64(std::string& out, std::int64_t v);
void append_f64(std::string& out, double v);

std::uint32_t read_u32(const std::string& buf, std::size_t& pos);
std::uint64_t read_u64(const std::string& buf, std::size_t& pos);
std::int64_t read_i64(const std::string& buf, std::size_t& pos);
double read_f64(const std::string& buf, std::size_t& pos);

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

} // namespace rulf
