#pragma once

// Line-delimited JSON episode traces. One record per line; doubles are written
// in shortest round-trip form, object keys sorted, so equal traces are equal bytes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mpcb/core/error.hpp"

namespace mpcb {

inline constexpr int kTraceSchemaVersion = 1;

enum class RecordKind { world, switch_, plan, solve, event };

inline const char* to_string(RecordKind k) {
    switch (k) {
        case RecordKind::world: return "world";
        case RecordKind::switch_: return "switch";
        case RecordKind::plan: return "plan";
        case RecordKind::solve: return "solve";
        case RecordKind::event: return "event";
    }
    return "?";
}

inline std::optional<RecordKind> record_kind_from_string(const std::string& s) {
    for (auto k : {RecordKind::world, RecordKind::switch_, RecordKind::plan, RecordKind::solve, RecordKind::event})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

struct TraceRecord {
    int schema_version{kTraceSchemaVersion};
    std::int64_t step{0};
    double time{0.0};  ///< simulation time
    RecordKind kind{RecordKind::event};
    nlohmann::json payload = nlohmann::json::object();

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

inline std::string to_line(const TraceRecord& r) {
    nlohmann::json j;
    j["v"] = r.schema_version;
    j["step"] = r.step;
    j["t"] = r.time;
    j["kind"] = to_string(r.kind);
    j["data"] = r.payload;
    return j.dump();
}

/// Parses one line. Structural problems throw MalformedTrace; version mismatches do not (see validate).
inline TraceRecord from_line(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedTrace(e.what());
    }
    try {
        TraceRecord r;
        r.schema_version = j.at("v").get<int>();
        r.step = j.at("step").get<std::int64_t>();
        r.time = j.at("t").get<double>();
        auto kind = record_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) throw MalformedTrace("unknown record kind " + j.at("kind").dump());
        r.kind = *kind;
        r.payload = j.at("data");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedTrace(e.what());
    }
}

class TraceWriter {
public:
    explicit TraceWriter(const std::filesystem::path& path, bool append = false) : path_(path) {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        out_.open(path, append ? std::ios::app : std::ios::trunc);
        if (!out_) throw IoError("cannot open trace for writing: " + path.string());
    }

    void write(const TraceRecord& r) {
        out_ << to_line(r) << '\n';
        if (!out_) throw IoError("write failed: " + path_.string());
    }
    void flush() { out_.flush(); }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

inline void write_trace(const std::filesystem::path& path, const std::vector<TraceRecord>& records) {
    TraceWriter w(path);
    for (const auto& r : records) w.write(r);
}

struct TraceReadResult {
    std::vector<TraceRecord> records;
    std::vector<std::string> warnings;
    bool truncated{false};
};

/// Reads every complete record. An unparsable final line without a newline is
/// reported as truncation; unparsable lines elsewhere throw MalformedTrace.
inline TraceReadResult read_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open trace: " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    TraceReadResult out;
    std::size_t pos = 0, line_no = 0;
    while (pos < content.size()) {
        ++line_no;
        const auto nl = content.find('\n', pos);
        const bool last = nl == std::string::npos;
        std::string line = content.substr(pos, last ? std::string::npos : nl - pos);
        pos = last ? content.size() : nl + 1;
        if (line.empty()) continue;
        try {
            out.records.push_back(from_line(line));
        } catch (const MalformedTrace& e) {
            if (!last) throw MalformedTrace(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            out.truncated = true;
            out.warnings.push_back(path.string() + ":" + std::to_string(line_no) +
                                   ": truncated final record dropped");
        }
    }
    return out;
}

struct TraceValidation {
    bool ok{true};
    std::vector<std::string> errors;  ///< "line N: message"
    std::size_t records{0};
};

/// Checks schema version and that step indices never decrease.
inline TraceValidation validate_trace(const std::filesystem::path& path) {
    TraceValidation v;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::int64_t> last_step;
    auto fail = [&](const std::string& msg) {
        v.ok = false;
        v.errors.push_back("line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        TraceRecord r;
        try {
            r = from_line(line);
        } catch (const MalformedTrace& e) {
            fail(e.what());
            continue;
        }
        ++v.records;
        if (r.schema_version != kTraceSchemaVersion)
            fail("unknown schema version " + std::to_string(r.schema_version));
        if (last_step && r.step < *last_step)
            fail("step " + std::to_string(r.step) + " after step " + std::to_string(*last_step));
        last_step = r.step;
    }
    return v;
}

}  // namespace mpcb
