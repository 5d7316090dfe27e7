#include "banditlab/log_codec.hpp"

#include <fstream>
#include <json.hpp>

#include "banditlab/errors.hpp"

namespace banditlab {

namespace {

using ojson = nlohmann::ordered_json;

char hex_digit(std::uint64_t nibble) {
    return "0123456789abcdef"[nibble & 0xf];
}

std::string hex64(std::uint64_t value) {
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = hex_digit(value);
        value >>= 4;
    }
    return s;
}

std::uint64_t parse_hex64(const std::string& text) {
    if (text.size() != 16) {
        throw ParseError("expected 16 hex digits, got \"" + text + "\"");
    }
    std::uint64_t value = 0;
    for (char c : text) {
        value <<= 4;
        if (c >= '0' && c <= '9') {
            value |= static_cast<std::uint64_t>(c - '0');
        } else if (c >= 'a' && c <= 'f') {
            value |= static_cast<std::uint64_t>(c - 'a' + 10);
        } else {
            throw ParseError("invalid hex digit in \"" + text + "\"");
        }
    }
    return value;
}

template <typename T>
T field(const ojson& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) {
        throw ParseError(std::string("missing field \"") + name + "\"");
    }
    try {
        return it->get<T>();
    } catch (const ojson::exception&) {
        throw ParseError(std::string("field \"") + name + "\" has wrong type");
    }
}

}  // namespace

std::string encode_log(const LogRecord& record) {
    validate_record(record);
    ojson j;
    j["gen"] = record.generation;
    j["t"] = record.round;
    ojson ctx;
    ctx["amount"] = record.context.amount;
    ctx["country"] = record.context.country;
    ctx["merchant"] = record.context.merchant;
    ctx["mcc"] = record.context.mcc;
    ctx["device"] = record.context.device;
    ctx["xnum"] = record.context.extra_numeric;
    j["ctx"] = std::move(ctx);
    j["eligible"] = record.eligible;
    j["chosen"] = record.chosen;
    j["propensity"] = record.propensity;
    j["reward"] = record.reward;
    j["greedy"] = record.was_greedy;
    return j.dump();
}

LogRecord decode_log(std::string_view line) {
    ojson j = ojson::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("malformed record line");
    }
    LogRecord r;
    r.generation = field<std::int32_t>(j, "gen");
    r.round = field<std::int64_t>(j, "t");
    ojson ctx = field<ojson>(j, "ctx");
    r.context.amount = field<double>(ctx, "amount");
    r.context.country = field<std::int32_t>(ctx, "country");
    r.context.merchant = field<std::int32_t>(ctx, "merchant");
    r.context.mcc = field<std::int32_t>(ctx, "mcc");
    r.context.device = field<std::int32_t>(ctx, "device");
    r.context.extra_numeric = field<std::vector<double>>(ctx, "xnum");
    r.eligible = field<std::vector<ActionId>>(j, "eligible");
    r.chosen = field<ActionId>(j, "chosen");
    r.propensity = field<double>(j, "propensity");
    r.reward = field<std::int32_t>(j, "reward");
    r.was_greedy = field<bool>(j, "greedy");
    validate_record(r);
    return r;
}

std::string encode_log_header(const LogHeader& header) {
    ojson j;
    j["format"] = "banditlab-log";
    j["v"] = 1;
    j["schema_fp"] = hex64(header.schema_fp);
    j["config_hash"] = hex64(header.config_hash);
    return j.dump();
}

LogHeader decode_log_header(std::string_view line) {
    ojson j = ojson::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("malformed log header");
    }
    if (field<std::string>(j, "format") != "banditlab-log") {
        throw ParseError("not a banditlab log file");
    }
    LogHeader h;
    h.schema_fp = parse_hex64(field<std::string>(j, "schema_fp"));
    h.config_hash = parse_hex64(field<std::string>(j, "config_hash"));
    return h;
}

void write_log_file(const std::filesystem::path& path, const LogHeader& header,
                    std::span<const LogRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open log file for writing: " + path.string());
    }
    out << encode_log_header(header) << '\n';
    for (const LogRecord& r : records) {
        out << encode_log(r) << '\n';
    }
    if (!out) {
        throw ConfigError("write failed: " + path.string());
    }
}

LogFile read_log_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open log file: " + path.string());
    }
    LogFile file;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            if (line_no == 1) {
                file.header = decode_log_header(line);
            } else {
                file.records.push_back(decode_log(line));
            }
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ":" +
                                  std::to_string(line_no) + ": " + e.what());
        }
    }
    if (line_no == 0) {
        throw ParseError(path.string() + ": empty log file (missing header)");
    }
    return file;
}

}  // namespace banditlab
