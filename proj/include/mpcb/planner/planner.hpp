#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "mpcb/planner/bev.hpp"
#include "mpcb/planner/command.hpp"
#include "mpcb/planner/prompt.hpp"

namespace mpcb {

struct PlanResult {
    TaskCommand command{TaskCommand::IDLE};
    std::string reasoning;
    bool fallback{false};       ///< IDLE substituted after an API or parse failure
    nlohmann::json exchange;    ///< prompts and raw responses, for the trace
};

class Planner {
public:
    virtual ~Planner() = default;
    virtual PlanResult plan(const WorldState& w, const std::optional<PlannerFeedback>& feedback) = 0;
    virtual std::string name() const = 0;
};

/// Returns the script in order, then keeps repeating its last entry.
class ScriptedPlanner : public Planner {
public:
    explicit ScriptedPlanner(std::vector<TaskCommand> script) : script_(std::move(script)) {
        if (script_.empty()) throw InvalidParams("scripted planner needs at least one command");
    }

    PlanResult plan(const WorldState&, const std::optional<PlannerFeedback>&) override {
        const auto c = script_[std::min(next_, script_.size() - 1)];
        ++next_;
        return {c, "scripted", false, nullptr};
    }
    std::string name() const override { return "scripted"; }

    static std::vector<TaskCommand> parse_script(const std::string& text) {
        std::vector<TaskCommand> out;
        std::istringstream in(text);
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::getline(in, tok);
                continue;
            }
            auto c = command_from_string(tok);
            if (!c) throw ConfigError("unknown command '" + tok + "' in script");
            out.push_back(*c);
        }
        return out;
    }
    static std::vector<TaskCommand> load_script(const std::filesystem::path& p) {
        std::ifstream in(p);
        if (!in) throw IoError("cannot read script " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_script(ss.str());
    }

private:
    std::vector<TaskCommand> script_;
    std::size_t next_{0};
};

/// Impatient driver: when the own lane is blocked within `trigger`, asks for the adjacent lane whose
/// leader is farthest away, without looking behind or beside. Feedback is ignored.
class RecklessPlanner : public Planner {
public:
    explicit RecklessPlanner(double trigger = 60.0) : trigger_(trigger) {}

    PlanResult plan(const WorldState& w, const std::optional<PlannerFeedback>&) override {
        const int lane = w.ego_lane();
        const double own = lead_distance(w, lane);
        if (own > trigger_) return {TaskCommand::IDLE, "own lane clear", false, nullptr};
        TaskCommand best = TaskCommand::IDLE;
        double best_room = own;
        for (auto [cmd, target] : {std::pair{TaskCommand::LANE_LEFT, lane - 1}, std::pair{TaskCommand::LANE_RIGHT, lane + 1}}) {
            if (!w.road.valid_lane(target)) continue;
            const double room = lead_distance(w, target);
            if (room > best_room) {
                best_room = room;
                best = cmd;
            }
        }
        return {best, "blocked at " + std::to_string(own), false, nullptr};
    }
    std::string name() const override { return "reckless"; }

private:
    static double lead_distance(const WorldState& w, int lane) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& v : w.vehicles)
            if (v.lane == lane && v.x - w.ego.x > 0.0) best = std::min(best, v.x - w.ego.x);
        return best;
    }
    double trigger_;
};

struct ChatRequest {
    std::string text;
    std::string image_url;  ///< data URL; empty for none
};

class Transport {
public:
    virtual ~Transport() = default;
    /// Returns the assistant message text; throws ApiError.
    virtual std::string complete(const ChatRequest& req) = 0;
};

inline nlohmann::json chat_body(const std::string& model, const ChatRequest& req) {
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", req.text}});
    if (!req.image_url.empty()) content.push_back({{"type", "image_url"}, {"image_url", {{"url", req.image_url}}}});
    return {{"model", model}, {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})}};
}

inline std::string chat_response_text(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ApiError(std::string("unexpected response body: ") + e.what());
    }
}

struct HttpSettings {
    std::string endpoint{"https://api.openai.com/v1/chat/completions"};
    std::string model{"gpt-4o"};
    std::string api_key_env{"OPENAI_API_KEY"};
    double timeout_s{60.0};
    int max_attempts{3};
    double backoff_s{1.0};  ///< doubled after each failed attempt
};

class HttpTransport : public Transport {
public:
    explicit HttpTransport(HttpSettings s) : s_(std::move(s)) {
        const auto scheme_end = s_.endpoint.find("://");
        if (scheme_end == std::string::npos) throw ConfigError("planner.endpoint must include a scheme");
        const auto path_start = s_.endpoint.find('/', scheme_end + 3);
        host_ = s_.endpoint.substr(0, path_start);
        path_ = path_start == std::string::npos ? "/" : s_.endpoint.substr(path_start);
    }

    std::string complete(const ChatRequest& req) override {
        const char* key = std::getenv(s_.api_key_env.c_str());
        if (!key || !*key) throw ApiError("environment variable " + s_.api_key_env + " is not set");
        const std::string body = chat_body(s_.model, req).dump();
        std::string last_error;
        double wait = s_.backoff_s;
        for (int attempt = 0; attempt < s_.max_attempts; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::duration<double>(wait));
                wait *= 2.0;
            }
            httplib::Client cli(host_);
            const auto t = std::chrono::duration<double>(s_.timeout_s);
            cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(t));
            cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(t));
            cli.set_bearer_token_auth(key);
            auto res = cli.Post(path_, body, "application/json");
            if (!res) {
                last_error = httplib::to_string(res.error());
                continue;
            }
            if (res->status == 200) return chat_response_text(res->body);
            last_error = "HTTP " + std::to_string(res->status);
            if (res->status == 401 || res->status == 403 || res->status == 400) break;  // retrying cannot help
        }
        throw ApiError(last_error);
    }

private:
    HttpSettings s_;
    std::string host_, path_;
};

/// Serves canned responses from a directory, one file per call in file-name order, wrapping around.
class ReplayTransport : public Transport {
public:
    explicit ReplayTransport(const std::filesystem::path& dir) {
        if (!std::filesystem::is_directory(dir)) throw IoError("replay directory not found: " + dir.string());
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::ifstream in(f);
            std::stringstream ss;
            ss << in.rdbuf();
            responses_.push_back(ss.str());
        }
        if (responses_.empty()) throw IoError("no .txt responses in " + dir.string());
    }

    std::string complete(const ChatRequest& req) override {
        requests_.push_back(req.text);
        return responses_[next_++ % responses_.size()];
    }
    const std::vector<std::string>& requests() const { return requests_; }

private:
    std::vector<std::string> responses_;
    std::vector<std::string> requests_;
    std::size_t next_{0};
};

struct ApiPlannerOptions {
    PromptOptions prompt;
    BevConfig bev;
    std::size_t memory_capacity{5};
    std::string template_path{default_template_path()};
};

inline std::string reparse_note(const std::vector<TaskCommand>& allowed) {
    std::string s = "\n\nYour previous answer did not contain a valid decision. Reply with one of:";
    for (auto c : allowed) s += std::string(" ") + to_string(c);
    return s + ".";
}

/// Renders the prompt and image, queries the transport, parses the decision.
/// ApiError falls back to IDLE; a reply without a decision is re-prompted once, then IDLE.
class ApiPlanner : public Planner {
public:
    ApiPlanner(std::unique_ptr<Transport> t, ApiPlannerOptions o)
        : transport_(std::move(t)), opt_(std::move(o)), tpl_(PromptTemplate::load(opt_.template_path)),
          memory_(opt_.memory_capacity) {}

    PlanResult plan(const WorldState& w, const std::optional<PlannerFeedback>& feedback) override {
        // The feedback describes the outcome of the previous decision, so it is attached to it.
        if (feedback && pending_) pending_->feedback = feedback;
        if (pending_) memory_.push(*pending_);
        pending_.reset();

        const auto bundle = render_prompt(tpl_, w, feedback, memory_, opt_.prompt);
        ChatRequest req{bundle.text, png_data_url(render_bev(w, opt_.bev))};
        PlanResult r;
        r.exchange = {{"prompt", bundle.text}, {"image", req.image_url}, {"responses", nlohmann::json::array()}};
        for (int attempt = 0; attempt < 2; ++attempt) {
            std::string reply;
            try {
                reply = transport_->complete(req);
            } catch (const ApiError& e) {
                r.exchange["error"] = e.what();
                r.fallback = true;
                break;
            }
            r.exchange["responses"].push_back(reply);
            r.reasoning = reply;
            try {
                r.command = parse_command(reply, opt_.prompt.commands);
                r.fallback = false;
                break;
            } catch (const ParseError&) {
                r.fallback = true;
                r.exchange["reprompt"] = reparse_note(opt_.prompt.commands);
                req.text += r.exchange["reprompt"].get<std::string>();
            }
        }
        if (r.fallback) r.command = TaskCommand::IDLE;
        pending_ = MemoryEntry{observation_summary(w), r.reasoning, r.command, std::nullopt};
        return r;
    }
    std::string name() const override { return "api"; }
    const ContextMemory& memory() const { return memory_; }

private:
    std::unique_ptr<Transport> transport_;
    ApiPlannerOptions opt_;
    PromptTemplate tpl_;
    ContextMemory memory_;
    std::optional<MemoryEntry> pending_;
};

/// Single-slot mailbox: a newer value overwrites an unread one.
template <class T>
class Mailbox {
public:
    void put(T v) {
        {
            std::lock_guard lk(m_);
            slot_ = std::move(v);
        }
        cv_.notify_all();
    }
    std::optional<T> try_take() {
        std::lock_guard lk(m_);
        auto v = std::move(slot_);
        slot_.reset();
        return v;
    }
    T take() {
        std::unique_lock lk(m_);
        cv_.wait(lk, [&] { return slot_.has_value(); });
        T v = std::move(*slot_);
        slot_.reset();
        return v;
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    std::optional<T> slot_;
};

/// Runs a planner on a worker thread so the control loop can keep going while a request is in flight.
class AsyncPlanner {
public:
    explicit AsyncPlanner(Planner& p) : planner_(p) {}
    ~AsyncPlanner() {
        if (worker_.joinable()) worker_.join();
    }

    bool busy() const { return busy_; }

    void request(const WorldState& w, const std::optional<PlannerFeedback>& fb) {
        if (busy_) return;
        if (worker_.joinable()) worker_.join();
        busy_ = true;
        worker_ = std::thread([this, w, fb] { box_.put(planner_.plan(w, fb)); });
    }
    std::optional<PlanResult> poll() {
        auto r = box_.try_take();
        if (r) busy_ = false;
        return r;
    }
    PlanResult wait() {
        auto r = box_.take();
        busy_ = false;
        return r;
    }

private:
    Planner& planner_;
    Mailbox<PlanResult> box_;
    std::thread worker_;
    bool busy_{false};
};

}  // namespace mpcb
