#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "banditlab/types.hpp"

namespace banditlab {

// First line of every log file: the feature-schema fingerprint plus a hash of
// the generator config that produced the records.
struct LogHeader {
    std::uint64_t schema_fp = 0;
    std::uint64_t config_hash = 0;
};

// One record per line, named fields in fixed order. decode(encode(r)) == r
// field-for-field for any valid record.
std::string encode_log(const LogRecord& record);
LogRecord decode_log(std::string_view line);

std::string encode_log_header(const LogHeader& header);
LogHeader decode_log_header(std::string_view line);

struct LogFile {
    LogHeader header;
    std::vector<LogRecord> records;
};

void write_log_file(const std::filesystem::path& path, const LogHeader& header,
                    std::span<const LogRecord> records);
// Parse errors carry the 1-based line number.
LogFile read_log_file(const std::filesystem::path& path);

}  // namespace banditlab
