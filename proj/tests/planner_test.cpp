#include <gtest/gtest.h>
#include <png.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mpcb/planner/planner.hpp"

using namespace mpcb;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(MPCB_SOURCE_DIR) / "tests/fixtures/responses";

WorldState scene() {
    WorldState w;
    w.ego = {100.0, 4.0, 0.0, 22.0};
    w.vehicles = {{3, 1, 130.0, 4.0, 18.0, 0.0, 18.0}, {5, 0, 90.0, 0.0, 24.0, 0.0, 24.0}, {8, 2, 160.0, 8.0, 20.0, 0.0, 20.0}};
    return w;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Centroid {
    double px{0}, py{0};
    int count{0};
};

Centroid centroid(const Image& img, Rgb c) {
    Centroid out;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (img.at(x, y) == c) {
                out.px += x + 0.5;
                out.py += y + 0.5;
                ++out.count;
            }
    if (out.count) {
        out.px /= out.count;
        out.py /= out.count;
    }
    return out;
}

class FailingTransport : public Transport {
public:
    int calls{0};
    std::string complete(const ChatRequest&) override {
        ++calls;
        throw ApiError("HTTP 429");
    }
};

ApiPlannerOptions replay_options(bool safety = true) {
    ApiPlannerOptions o;
    o.prompt.safety_instructions = safety;
    return o;
}

}  // namespace

TEST(Planner, ScriptedRepeatsLast) {
    ScriptedPlanner p({TaskCommand::IDLE, TaskCommand::LANE_LEFT, TaskCommand::IDLE});
    const auto w = scene();
    std::vector<TaskCommand> got;
    for (int i = 0; i < 5; ++i) got.push_back(p.plan(w, std::nullopt).command);
    EXPECT_EQ(got, (std::vector<TaskCommand>{TaskCommand::IDLE, TaskCommand::LANE_LEFT, TaskCommand::IDLE,
                                             TaskCommand::IDLE, TaskCommand::IDLE}));
    EXPECT_THROW(ScriptedPlanner({}), InvalidParams);
    EXPECT_EQ(ScriptedPlanner::parse_script("IDLE # wait\nLANE_LEFT\n").size(), 2u);
    EXPECT_THROW(ScriptedPlanner::parse_script("LEFT"), ConfigError);
}

TEST(Parser, FixtureCorpus) {
    std::istringstream idx(slurp(kFixtures / "expected.tsv"));
    std::string line;
    int total = 0, correct = 0;
    while (std::getline(idx, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        const std::string file = line.substr(0, tab), expected = line.substr(tab + 1);
        std::string got;
        try {
            got = to_string(parse_command(slurp(kFixtures / file), mpc_command_set()));
        } catch (const ParseError&) {
            got = "NONE";
        }
        ++total;
        correct += got == expected;
        EXPECT_EQ(got, expected) << file;
    }
    EXPECT_EQ(total, 20);
    EXPECT_EQ(correct, total);
}

TEST(Parser, LastTokenWinsAndCommandSetFilters) {
    EXPECT_EQ(parse_command("Decision: LANE_LEFT because ...", mpc_command_set()), TaskCommand::LANE_LEFT);
    EXPECT_EQ(parse_command("IDLE then FASTER", pid_command_set()), TaskCommand::FASTER);
    EXPECT_EQ(parse_command("IDLE then FASTER", mpc_command_set()), TaskCommand::IDLE);
    EXPECT_THROW(parse_command("I would idle.", mpc_command_set()), ParseError);
}

TEST(ApiPlanner, NoTokenRepromptsOnceThenIdle) {
    auto dir = std::filesystem::temp_directory_path() / "mpcb_noparse";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "a.txt") << "I would idle.";
    std::ofstream(dir / "b.txt") << "Still thinking.";
    auto t = std::make_unique<ReplayTransport>(dir);
    auto* raw = t.get();
    ApiPlanner p(std::move(t), replay_options());
    const auto r = p.plan(scene(), std::nullopt);
    EXPECT_EQ(r.command, TaskCommand::IDLE);
    EXPECT_TRUE(r.fallback);
    ASSERT_EQ(raw->requests().size(), 2u);
    EXPECT_NE(raw->requests()[1].find("did not contain a valid decision"), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(ApiPlanner, ApiErrorFallsBackToIdle) {
    auto t = std::make_unique<FailingTransport>();
    auto* raw = t.get();
    ApiPlanner p(std::move(t), replay_options());
    const auto r = p.plan(scene(), std::nullopt);
    EXPECT_EQ(r.command, TaskCommand::IDLE);
    EXPECT_TRUE(r.fallback);
    EXPECT_EQ(raw->calls, 1);
    EXPECT_EQ(r.exchange["error"].get<std::string>(), "ApiError: HTTP 429");
}

TEST(ApiPlanner, FeedbackReachesPromptAndMemory) {
    auto t = std::make_unique<ReplayTransport>(kFixtures);
    auto* raw = t.get();
    ApiPlanner p(std::move(t), replay_options());
    EXPECT_EQ(p.plan(scene(), std::nullopt).command, TaskCommand::LANE_LEFT);  // 00.txt
    PlannerFeedback fb{TaskCommand::LANE_LEFT, false, true, SwitchMode::reverted};
    EXPECT_EQ(p.plan(scene(), fb).command, TaskCommand::LANE_RIGHT);  // 01.txt
    ASSERT_EQ(raw->requests().size(), 2u);
    EXPECT_EQ(raw->requests()[0].find(rejection_notice()), std::string::npos);
    EXPECT_NE(raw->requests()[1].find(rejection_notice()), std::string::npos);
    EXPECT_NE(raw->requests()[1].find("decided LANE_LEFT; rejected"), std::string::npos);
    ASSERT_EQ(p.memory().size(), 1u);
    EXPECT_TRUE(p.memory().entries()[0].feedback->rejected);
}

TEST(ChatBody, ShapeHasOneImage) {
    const auto j = chat_body("m", {"hello", "data:image/png;base64,AAA"});
    EXPECT_EQ(j["model"], "m");
    const auto& content = j["messages"][0]["content"];
    ASSERT_EQ(content.size(), 2u);
    EXPECT_EQ(content[0]["text"], "hello");
    EXPECT_EQ(content[1]["image_url"]["url"], "data:image/png;base64,AAA");
    EXPECT_EQ(chat_response_text(R"({"choices":[{"message":{"role":"assistant","content":"Decision: IDLE"}}]})"),
              "Decision: IDLE");
    EXPECT_THROW(chat_response_text(R"({"error":"x"})"), ApiError);
}

TEST(Prompt, SafetyFlagAndDeterminism) {
    const auto tpl = PromptTemplate::load(default_template_path());
    ContextMemory mem(3);
    PromptOptions on, off;
    off.safety_instructions = false;
    const auto a = render_prompt(tpl, scene(), std::nullopt, mem, on);
    const auto b = render_prompt(tpl, scene(), std::nullopt, mem, off);
    EXPECT_EQ(a.sections, prompt_section_order());
    EXPECT_EQ(std::count(b.sections.begin(), b.sections.end(), "safety_instructions"), 0);
    EXPECT_EQ(b.sections.size(), prompt_section_order().size() - 1);
    EXPECT_NE(a.text.find("## Safety instructions"), std::string::npos);
    EXPECT_EQ(b.text.find("## Safety instructions"), std::string::npos);
    EXPECT_EQ(b.text, render_prompt(tpl, scene(), std::nullopt, mem, off).text);

    // Sections appear in the fixed order in the text.
    std::optional<std::size_t> last;
    for (const char* head : {"## Role", "## Observation", "## Command format", "## Safety instructions",
                             "## User instruction", "## Previous decisions", "step by step"}) {
        const auto pos = a.text.find(head);
        ASSERT_NE(pos, std::string::npos) << head;
        if (last) {
            EXPECT_GT(pos, *last);
        }
        last = pos;
    }
}

TEST(Prompt, ObservationListsVehiclesNumbered) {
    const auto text = observation_text(scene(), 100.0);
    EXPECT_NE(text.find("lane 1 of 3, speed 22.0 m/s"), std::string::npos);
    EXPECT_NE(text.find("1. car 5: lane 0, 10.0 m behind, speed 24.0 m/s (+2.0 relative)"), std::string::npos);
    EXPECT_NE(text.find("2. car 3: lane 1, 30.0 m ahead"), std::string::npos);
    EXPECT_NE(text.find("3. car 8: lane 2, 60.0 m ahead"), std::string::npos);
}

TEST(Prompt, RejectionNoticeAndMemoryOrder) {
    const auto tpl = PromptTemplate::load(default_template_path());
    ContextMemory mem(4);
    mem.push({"first obs", "r1", TaskCommand::LANE_LEFT, std::nullopt});
    mem.push({"second obs", "r2", TaskCommand::IDLE, std::nullopt});
    PlannerFeedback fb{TaskCommand::LANE_LEFT, false, true, SwitchMode::reverted};
    const auto p = render_prompt(tpl, scene(), fb, mem, {});
    EXPECT_NE(p.text.find(rejection_notice()), std::string::npos);
    const auto i1 = p.text.find("first obs"), i2 = p.text.find("second obs");
    ASSERT_NE(i1, std::string::npos);
    ASSERT_NE(i2, std::string::npos);
    EXPECT_LT(i1, i2);
    fb.rejected = false;
    fb.feasible = true;
    EXPECT_EQ(render_prompt(tpl, scene(), fb, mem, {}).text.find(rejection_notice()), std::string::npos);
}

TEST(Prompt, TemplateErrors) {
    EXPECT_THROW(PromptTemplate::parse("[[bogus]]\nx"), ConfigError);
    EXPECT_THROW(PromptTemplate::parse("stray text"), ConfigError);
    EXPECT_THROW(PromptTemplate::load("/nonexistent/template.txt"), IoError);
}

TEST(Memory, CapacityKeepsMostRecent) {
    ContextMemory m(3);
    for (int i = 0; i < 7; ++i) m.push({std::to_string(i), "", TaskCommand::IDLE, std::nullopt});
    ASSERT_EQ(m.size(), 3u);
    EXPECT_EQ(m.entries()[0].observation, "4");
    EXPECT_EQ(m.entries()[2].observation, "6");
    ContextMemory zero(0);
    zero.push({"x", "", TaskCommand::IDLE, std::nullopt});
    EXPECT_EQ(zero.size(), 0u);
}

TEST(Bev, EmptyRoadLanesOnlyAndDeterministic) {
    WorldState w;
    w.ego = {0.0, 4.0, 0.0, 20.0};
    const BevConfig c;
    auto img = render_bev(w, c);
    EXPECT_EQ(img.width, 400);
    EXPECT_EQ(img.height, 120);
    EXPECT_EQ(img, render_bev(w, c));
    // Only background, lane lines and the ego.
    int other = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto p = img.at(x, y);
            if (!(p == kBevBackground) && !(p == kBevLaneLine) && !(p == kBevEgo)) ++other;
        }
    EXPECT_EQ(other, 0);
    EXPECT_EQ(centroid(img, kBevVehicle).count, 0);
    // Every lane boundary row has line pixels.
    const BevMapping m(c, w);
    for (int k = 0; k <= w.road.lanes; ++k) {
        const int row = std::clamp(static_cast<int>(std::floor(m.py(-2.0 + 4.0 * k))), 0, c.height - 1);
        int n = 0;
        for (int x = 0; x < c.width; ++x) n += img.at(x, row) == kBevLaneLine;
        EXPECT_GT(n, 100) << "boundary " << k;
    }
}

TEST(Bev, VehicleCentroidInvertsToWorld) {
    const BevConfig c;
    for (auto [dx, y] : {std::pair{30.3, 4.7}, std::pair{-12.2, 0.1}, std::pair{71.9, 7.6}}) {
        WorldState w;
        w.ego = {500.0, 0.0, 0.0, 20.0};
        if (std::abs(y) < 3.0) w.ego.y = 8.0;
        w.vehicles = {{11, w.road.lane_of(y), 500.0 + dx, y, 20.0, 0.0, 20.0}};
        const auto img = render_bev(w, c);
        const auto cen = centroid(img, kBevVehicle);
        ASSERT_GT(cen.count, 0);
        // Independent affine inverse: 120 m across 400 px starting 20 m behind, 12 m across 120 px from y = -2.
        const double wx = cen.px * (120.0 / 400.0) + (500.0 - 20.0);
        const double wy = cen.py * (12.0 / 120.0) - 2.0;
        EXPECT_NEAR(wx, 500.0 + dx, 0.5 * 120.0 / 400.0);
        EXPECT_NEAR(wy, y, 0.5 * 12.0 / 120.0);
        EXPECT_GT(centroid(img, kBevText).count, 0);
    }
}

TEST(Bev, EgoLaneChangeCrossesLineInExpectedFrame) {
    // Ego drifts from lane 1 (y = 4) to lane 0 (y = 0) over 40 frames; the separator is at y = 2.
    const BevConfig c;
    int crossed_frame = -1, expected_frame = -1;
    for (int f = 0; f <= 40; ++f) {
        WorldState w;
        const double y = 4.0 - 0.1 * f;
        w.ego = {20.0 * f, y, 0.0, 20.0};
        if (expected_frame < 0 && y < 2.0) expected_frame = f;
        const auto cen = centroid(render_bev(w, c), kBevEgo);
        const double line_row = (2.0 + 2.0) * 10.0;
        if (crossed_frame < 0 && cen.py < line_row) crossed_frame = f;
    }
    EXPECT_EQ(crossed_frame, expected_frame);
    EXPECT_GT(crossed_frame, 0);
}

TEST(Bev, PngRoundTrip) {
    const auto img = render_bev(scene());
    const auto png = encode_png(img);
    ASSERT_GT(png.size(), 8u);
    png_image decoded{};
    decoded.version = PNG_IMAGE_VERSION;
    ASSERT_TRUE(png_image_begin_read_from_memory(&decoded, png.data(), png.size()));
    decoded.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(decoded));
    ASSERT_TRUE(png_image_finish_read(&decoded, nullptr, buf.data(), 0, nullptr));
    EXPECT_EQ(static_cast<int>(decoded.width), img.width);
    EXPECT_EQ(static_cast<int>(decoded.height), img.height);
    EXPECT_EQ(buf, img.rgb);
    EXPECT_EQ(png_data_url(img).rfind("data:image/png;base64,iVBORw0KGgo", 0), 0u);
}

TEST(Reckless, PicksOpenAdjacentLaneWithoutLookingBack) {
    WorldState w;
    w.ego = {0.0, 4.0, 0.0, 25.0};
    RecklessPlanner p;
    EXPECT_EQ(p.plan(w, std::nullopt).command, TaskCommand::IDLE);
    w.vehicles = {{1, 1, 30.0, 4.0, 15.0, 0.0, 15.0}, {2, 0, 50.0, 0.0, 15.0, 0.0, 15.0}};
    EXPECT_EQ(p.plan(w, std::nullopt).command, TaskCommand::LANE_RIGHT);  // lane 2 empty
    w.vehicles.push_back({3, 2, 40.0, 8.0, 15.0, 0.0, 15.0});
    EXPECT_EQ(p.plan(w, std::nullopt).command, TaskCommand::LANE_LEFT);
    w.vehicles.push_back({4, 0, 0.0, 0.0, 25.0, 0.0, 25.0});  // alongside on the left: still goes
    EXPECT_EQ(p.plan(w, std::nullopt).command, TaskCommand::LANE_LEFT);
}

TEST(Mailbox, LatestWins) {
    Mailbox<int> m;
    EXPECT_FALSE(m.try_take());
    m.put(1);
    m.put(2);
    EXPECT_EQ(*m.try_take(), 2);
    EXPECT_FALSE(m.try_take());
    ScriptedPlanner sp({TaskCommand::LANE_LEFT});
    AsyncPlanner ap(sp);
    ap.request(scene(), std::nullopt);
    EXPECT_EQ(ap.wait().command, TaskCommand::LANE_LEFT);
    EXPECT_FALSE(ap.busy());
}
