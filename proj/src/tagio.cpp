#include "pairlink/tagio.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "pairlink/errors.hpp"

namespace pairlink {

namespace {

void pack_le(unsigned char* out, uint64_t value, int bytes)
{
    for (int i = 0; i < bytes; ++i)
        out[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
}

uint64_t unpack_le(const unsigned char* in, int bytes)
{
    uint64_t value = 0;
    for (int i = 0; i < bytes; ++i)
        value |= static_cast<uint64_t>(in[i]) << (8 * i);
    return value;
}

void write_binary(const std::filesystem::path& path, const TimeTagStream& stream)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");

    std::vector<unsigned char> buffer(stream.records.size() * kTagRecordBytes, 0);
    unsigned char* p = buffer.data();
    for (const auto& tag : stream.records) {
        if (tag.time_ps < 0)
            throw IoError("negative tag time cannot be serialized");
        pack_le(p, static_cast<uint64_t>(tag.time_ps), 8);
        pack_le(p + 8, tag.channel, 2);
        // bytes 10..15 stay zero (reserved)
        p += kTagRecordBytes;
    }
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size()));
    if (!out)
        throw IoError("failed writing " + path.string());
}

TimeTagStream read_binary(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());

    std::vector<unsigned char> bytes(
        (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % kTagRecordBytes != 0)
        throw FormatError(path.string() + ": truncated record at byte offset "
                          + std::to_string(bytes.size() - bytes.size() % kTagRecordBytes));

    TimeTagStream stream;
    stream.records.reserve(bytes.size() / kTagRecordBytes);
    int64_t previous = std::numeric_limits<int64_t>::min();
    for (size_t offset = 0; offset < bytes.size(); offset += kTagRecordBytes) {
        const unsigned char* rec = bytes.data() + offset;
        const uint64_t raw_time = unpack_le(rec, 8);
        if (raw_time > static_cast<uint64_t>(std::numeric_limits<int64_t>::max()))
            throw FormatError(path.string() + ": time overflow at byte offset "
                              + std::to_string(offset));
        for (int i = 10; i < 16; ++i)
            if (rec[i] != 0)
                throw FormatError(path.string()
                                  + ": nonzero reserved bytes at byte offset "
                                  + std::to_string(offset + static_cast<size_t>(i)));
        const int64_t time = static_cast<int64_t>(raw_time);
        if (time < previous)
            throw FormatError(path.string() + ": time order violated at byte offset "
                              + std::to_string(offset));
        previous = time;
        stream.records.push_back(
            { time, static_cast<uint16_t>(unpack_le(rec + 8, 2)) });
    }
    return stream;
}

void write_csv(const std::filesystem::path& path, const TimeTagStream& stream)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << kTagCsvHeader << '\n';
    for (const auto& tag : stream.records)
        out << tag.time_ps << ',' << tag.channel << '\n';
    if (!out)
        throw IoError("failed writing " + path.string());
}

TimeTagStream read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line) || line != kTagCsvHeader)
        throw FormatError(path.string() + ":1: expected header \""
                          + std::string(kTagCsvHeader) + "\"");

    TimeTagStream stream;
    int64_t previous = std::numeric_limits<int64_t>::min();
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const char* begin = line.data();
        const char* end = begin + line.size();
        int64_t time = 0;
        auto [p, ec] = std::from_chars(begin, end, time);
        if (ec != std::errc() || p == end || *p != ',' || time < 0)
            throw FormatError(path.string() + ":" + std::to_string(line_no)
                              + ": malformed record");
        unsigned channel = 0;
        auto [p2, ec2] = std::from_chars(p + 1, end, channel);
        if (ec2 != std::errc() || p2 != end || channel > 0xFFFF)
            throw FormatError(path.string() + ":" + std::to_string(line_no)
                              + ": malformed record");
        if (time < previous)
            throw FormatError(path.string() + ":" + std::to_string(line_no)
                              + ": time order violated");
        previous = time;
        stream.records.push_back({ time, static_cast<uint16_t>(channel) });
    }
    return stream;
}

} // namespace

const char* to_string(TagFormat format)
{
    return format == TagFormat::Binary ? "bin" : "csv";
}

TagFormat tag_format_from_string(const std::string& name)
{
    if (name == "bin" || name == "binary")
        return TagFormat::Binary;
    if (name == "csv")
        return TagFormat::Csv;
    throw ConfigError("unknown tag format '" + name + "' (expected bin or csv)");
}

void write_tags(const std::filesystem::path& path, const TimeTagStream& stream,
                TagFormat format)
{
    if (format == TagFormat::Binary)
        write_binary(path, stream);
    else
        write_csv(path, stream);
}

TimeTagStream read_tags(const std::filesystem::path& path, TagFormat format)
{
    return format == TagFormat::Binary ? read_binary(path) : read_csv(path);
}

} // namespace pairlink
