#pragma once

#include <filesystem>
#include <string>

#include "pairlink/detection.hpp"

namespace pairlink {

enum class TagFormat { Binary, Csv };

const char* to_string(TagFormat format);
TagFormat tag_format_from_string(const std::string& name);

// Binary tag format: fixed 16-byte little-endian records, unsigned 64-bit
// time in picoseconds, unsigned 16-bit channel, six reserved zero bytes.
inline constexpr size_t kTagRecordBytes = 16;

// CSV alternative: header "time_ps,channel" plus one record per line.
inline constexpr const char* kTagCsvHeader = "time_ps,channel";

void write_tags(const std::filesystem::path& path, const TimeTagStream& stream,
                TagFormat format);

// Throws FormatError with the byte offset (binary) or line number (CSV) of
// the first malformed record. duration_s of the result is 0; callers that
// know the acquisition duration set it themselves.
TimeTagStream read_tags(const std::filesystem::path& path, TagFormat format);

} // namespace pairlink
