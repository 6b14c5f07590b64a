#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "mpcb/trace/trace.hpp"

using namespace mpcb;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    auto dir = fs::temp_directory_path() / "mpcb_trace_test";
    fs::create_directories(dir);
    return dir / name;
}

std::vector<TraceRecord> sample_trace(std::size_t n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    std::vector<TraceRecord> out;
    const RecordKind kinds[] = {RecordKind::world, RecordKind::switch_, RecordKind::plan, RecordKind::solve,
                                RecordKind::event};
    for (std::size_t i = 0; i < n; ++i) {
        TraceRecord r;
        r.step = static_cast<std::int64_t>(i / 3);
        r.time = 0.05 * static_cast<double>(r.step);
        r.kind = kinds[i % 5];
        r.payload = {{"x", u(rng)}, {"tiny", u(rng) * 1e-300}, {"label", "LC.gap"}, {"list", {1, 2, 3}}};
        out.push_back(r);
    }
    return out;
}

}  // namespace

TEST(Trace, RoundTrip1000Records) {
    auto path = temp_file("roundtrip.trace");
    auto t = sample_trace(1000);
    write_trace(path, t);
    auto r = read_trace(path);
    EXPECT_FALSE(r.truncated);
    ASSERT_EQ(r.records.size(), t.size());
    EXPECT_EQ(r.records, t);
    EXPECT_TRUE(validate_trace(path).ok);
}

TEST(Trace, ShuffledStepsFailValidationWithLine) {
    auto path = temp_file("shuffled.trace");
    auto t = sample_trace(30);
    std::swap(t[4], t[20]);
    write_trace(path, t);
    auto v = validate_trace(path);
    EXPECT_FALSE(v.ok);
    ASSERT_FALSE(v.errors.empty());
    EXPECT_EQ(v.errors[0].rfind("line 6:", 0), 0u) << v.errors[0];
}

TEST(Trace, UnknownSchemaVersionRejected) {
    auto path = temp_file("version.trace");
    auto t = sample_trace(5);
    t[2].schema_version = 99;
    write_trace(path, t);
    auto v = validate_trace(path);
    EXPECT_FALSE(v.ok);
    EXPECT_NE(v.errors[0].find("line 3"), std::string::npos);
    EXPECT_NE(v.errors[0].find("schema version 99"), std::string::npos);
}

TEST(Trace, TruncatedFinalLineIsDroppedWithWarning) {
    auto path = temp_file("truncated.trace");
    auto t = sample_trace(10);
    write_trace(path, t);
    {
        std::ofstream out(path, std::ios::app);
        out << to_line(t[0]).substr(0, 17);
    }
    auto r = read_trace(path);
    EXPECT_TRUE(r.truncated);
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_NE(r.warnings[0].find(":11:"), std::string::npos);
    EXPECT_EQ(r.records, t);
}

TEST(Trace, MalformedMiddleLineThrows) {
    auto path = temp_file("malformed.trace");
    {
        std::ofstream out(path);
        out << to_line(sample_trace(1)[0]) << "\n{not json\n" << to_line(sample_trace(1)[0]) << "\n";
    }
    EXPECT_THROW(read_trace(path), MalformedTrace);
    EXPECT_THROW(read_trace(temp_file("does_not_exist.trace")), IoError);
    EXPECT_THROW(from_line(R"({"v":1,"step":0,"t":0,"kind":"bogus","data":{}})"), MalformedTrace);
}

TEST(Trace, LinesAreDeterministic) {
    auto t = sample_trace(20);
    for (const auto& r : t) EXPECT_EQ(to_line(r), to_line(from_line(to_line(r))));
}
