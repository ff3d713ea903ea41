#include "xssguard/catalog.hpp"
#include "xssguard/error.hpp"
#include "xssguard/gateway.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace xssguard {

namespace {

std::string required_string(const Json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw DomainError(std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
}

std::optional<UserChoice> parse_choice(std::string_view s) {
    if (s == "allow") {
        return UserChoice::Allow;
    }
    if (s == "block") {
        return UserChoice::Block;
    }
    return std::nullopt;
}

ScriptedAnswer parse_answer(const Json& j) {
    ScriptedAnswer a;
    std::string word;
    if (j.is_string()) {
        word = j.get<std::string>();
    } else if (j.is_object()) {
        word = required_string(j, "decision");
        if (const auto it = j.find("latency"); it != j.end()) {
            if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
                throw DomainError("latency must be a non-negative integer");
            }
            a.latency = it->get<std::int64_t>();
        }
    } else {
        throw DomainError("answer must be a string or an object");
    }
    if (word == "timeout") {
        return a;
    }
    a.choice = parse_choice(word);
    if (!a.choice) {
        throw DomainError("unknown decision '" + word + "'");
    }
    return a;
}

} // namespace

Json event_to_json(const BridgeEvent& e) {
    return Json{{"event_id", e.event_id},         {"app_name", e.app_name}, {"object_name", e.object_name},
                {"website_name", e.website_name}, {"ip", e.ip},             {"location", e.location},
                {"permissions", e.permissions},   {"requested_apis", e.requested_apis},
                {"timestamp", e.timestamp}};
}

BridgeEvent event_from_json(const Json& j) {
    if (!j.is_object()) {
        throw DomainError("event must be a JSON object");
    }
    BridgeEvent e;
    if (j.contains("event_id")) {
        e.event_id = required_string(j, "event_id");
    }
    e.app_name = required_string(j, "app_name");
    e.object_name = required_string(j, "object_name");
    e.website_name = required_string(j, "website_name");
    e.ip = required_string(j, "ip");
    e.location = required_string(j, "location");

    const auto perms = j.find("permissions");
    if (perms == j.end()) {
        throw DomainError("field 'permissions' is missing");
    }
    std::vector<std::string> tokens;
    if (perms->is_string()) {
        tokens = split_permissions(perms->get<std::string>());
    } else if (perms->is_array()) {
        for (const auto& t : *perms) {
            if (!t.is_string()) {
                throw DomainError("field 'permissions' must hold strings");
            }
            tokens.push_back(t.get<std::string>());
        }
    } else {
        throw DomainError("field 'permissions' must be a string or an array");
    }
    e.permissions = canonical_permissions(tokens);

    const auto apis = j.find("requested_apis");
    if (apis == j.end() || !apis->is_array()) {
        throw DomainError("field 'requested_apis' must be an array");
    }
    for (const auto& a : *apis) {
        if (!a.is_string()) {
            throw DomainError("field 'requested_apis' must hold strings");
        }
        e.requested_apis.push_back(a.get<std::string>());
    }

    if (const auto ts = j.find("timestamp"); ts != j.end()) {
        if (!ts->is_number_integer()) {
            throw DomainError("field 'timestamp' must be an integer");
        }
        e.timestamp = ts->get<std::int64_t>();
    }
    return e;
}

Json ticket_to_json(const AlertTicket& t, std::optional<std::int64_t> now) {
    Json j{{"ticket_id", t.id},
           {"state", state_name(t.state)},
           {"website_name", t.event.website_name},
           {"object_name", t.event.object_name},
           {"app_name", t.event.app_name},
           {"sensitive_apis", t.sensitive_apis},
           {"classifier_verdict", label_name(t.classifier_verdict)},
           {"score", t.score},
           {"created_at", t.created_at},
           {"resolved_at", t.resolved_at ? Json(*t.resolved_at) : Json(nullptr)}};
    if (now) {
        j["age"] = *now - t.created_at;
    }
    j["event"] = event_to_json(t.event);
    return j;
}

Json ticket_event_to_json(const TicketEvent& ev) {
    return Json{{"sequence", ev.sequence},
                {"type", ev.kind == TicketEventKind::Created ? "ticket.created" : "ticket.resolved"},
                {"ticket", ticket_to_json(ev.ticket)}};
}

Json blocklist_to_json(const BlockList& blocklist) {
    Json entries = Json::array();
    for (const auto& e : blocklist.entries()) {
        entries.push_back(Json{{"ts", e.timestamp}, {"website", e.website}, {"object", e.object}});
    }
    return Json{{"count", entries.size()}, {"entries", std::move(entries)}};
}

// ---------------------------------------------------------------------------
// Scenario files

Scenario read_scenario(std::istream& in) {
    Scenario scenario;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    bool seen_event = false;
    std::int64_t last_ts = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        try {
            const Json j = Json::parse(line);
            if (j.is_object() && j.contains("scenario")) {
                if (seen_event || !scenario.name.empty() || scenario.seed) {
                    throw DomainError("scenario header must be the first line");
                }
                const Json& h = j.at("scenario");
                if (!h.is_object()) {
                    throw DomainError("scenario header must be an object");
                }
                if (h.contains("name")) {
                    scenario.name = required_string(h, "name");
                }
                if (h.contains("seed")) {
                    if (!h.at("seed").is_number_unsigned()) {
                        throw DomainError("scenario seed must be a non-negative integer");
                    }
                    scenario.seed = h.at("seed").get<std::uint64_t>();
                }
                continue;
            }
            BridgeEvent e = event_from_json(j);
            if (e.event_id.empty()) {
                e.event_id = "e" + std::to_string(scenario.events.size() + 1);
            }
            validate(e);
            if (seen_event && e.timestamp < last_ts) {
                throw DomainError("timestamp " + std::to_string(e.timestamp) + " precedes " + std::to_string(last_ts));
            }
            if (!ids.insert(e.event_id).second) {
                throw DomainError("duplicate event_id '" + e.event_id + "'");
            }
            seen_event = true;
            last_ts = e.timestamp;
            scenario.events.push_back(std::move(e));
        } catch (const Json::exception& ex) {
            throw ParseError(std::string("invalid JSON: ") + ex.what(), line_no);
        } catch (const DomainError& ex) {
            throw ParseError(ex.what(), line_no);
        }
    }
    return scenario;
}

Scenario read_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open scenario " + path.string());
    }
    return read_scenario(in);
}

void write_scenario(const Scenario& scenario, std::ostream& out) {
    if (!scenario.name.empty() || scenario.seed) {
        Json h = Json::object();
        if (!scenario.name.empty()) {
            h["name"] = scenario.name;
        }
        if (scenario.seed) {
            h["seed"] = *scenario.seed;
        }
        out << Json{{"scenario", h}}.dump() << '\n';
    }
    for (const auto& e : scenario.events) {
        out << event_to_json(e).dump() << '\n';
    }
}

Scenario scenario_from_dataset(const Dataset& ds, std::string name, std::int64_t step, std::string object_name) {
    Scenario scenario;
    scenario.name = std::move(name);
    scenario.seed = ds.seed;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Sample& s = ds.samples[i];
        BridgeEvent e;
        e.event_id = "e" + std::to_string(i + 1);
        e.app_name = s.value(Feature::AppName);
        e.object_name = object_name;
        e.website_name = s.value(Feature::WebsiteName);
        e.ip = s.value(Feature::Ip);
        e.location = s.value(Feature::Location);
        e.permissions = s.value(Feature::Permissions);
        e.requested_apis = {s.value(Feature::ApiName)};
        e.timestamp = static_cast<std::int64_t>(i) * step;
        scenario.events.push_back(std::move(e));
    }
    return scenario;
}

// ---------------------------------------------------------------------------
// Policies

std::string_view policy_name(PolicyKind p) {
    switch (p) {
    case PolicyKind::AlwaysAllow:
        return "always_allow";
    case PolicyKind::AlwaysBlock:
        return "always_block";
    case PolicyKind::FlagSensitive:
        return "flag_sensitive";
    case PolicyKind::Scripted:
        return "scripted";
    }
    return "?";
}

std::optional<PolicyKind> parse_policy(std::string_view name) {
    for (auto p : {PolicyKind::AlwaysAllow, PolicyKind::AlwaysBlock, PolicyKind::FlagSensitive, PolicyKind::Scripted}) {
        if (policy_name(p) == name) {
            return p;
        }
    }
    return std::nullopt;
}

std::vector<ScriptedAnswer> read_answers(std::istream& in) {
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    std::vector<ScriptedAnswer> answers;

    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return answers;
    }
    if (text[first] == '[') {
        try {
            const Json doc = Json::parse(text);
            for (const auto& a : doc) {
                answers.push_back(parse_answer(a));
            }
        } catch (const Json::exception& ex) {
            throw ParseError(std::string("invalid JSON: ") + ex.what(), 1);
        } catch (const DomainError& ex) {
            throw ParseError(ex.what(), 1);
        }
        return answers;
    }

    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            answers.push_back(parse_answer(Json::parse(line)));
        } catch (const Json::exception& ex) {
            throw ParseError(std::string("invalid JSON: ") + ex.what(), line_no);
        } catch (const DomainError& ex) {
            throw ParseError(ex.what(), line_no);
        }
    }
    return answers;
}

std::vector<ScriptedAnswer> read_answers(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open answers " + path.string());
    }
    return read_answers(in);
}

PolicyDecisionProvider::PolicyDecisionProvider(PolicyKind kind, std::vector<ScriptedAnswer> answers)
    : kind_(kind), answers_(std::move(answers)) {}

std::optional<UserChoice> PolicyDecisionProvider::decide(const AlertTicket& ticket, std::chrono::milliseconds timeout) {
    ++calls_;
    last_latency_ = 0;
    switch (kind_) {
    case PolicyKind::AlwaysAllow:
        return UserChoice::Allow;
    case PolicyKind::AlwaysBlock:
        return UserChoice::Block;
    case PolicyKind::FlagSensitive:
        return ticket.sensitive_apis.empty() ? UserChoice::Allow : UserChoice::Block;
    case PolicyKind::Scripted:
        break;
    }
    if (next_ >= answers_.size()) {
        last_latency_ = timeout.count();
        return std::nullopt;
    }
    const ScriptedAnswer& a = answers_[next_++];
    if (!a.choice || a.latency > timeout.count()) {
        last_latency_ = timeout.count();
        return std::nullopt;
    }
    last_latency_ = a.latency;
    return a.choice;
}

// ---------------------------------------------------------------------------
// Replay

Json session_record_to_json(const SessionRecord& r) {
    return Json{{"event_id", r.event_id},
                {"verdict", decision_name(r.decision)},
                {"reason", reason_name(r.reason)},
                {"latency", r.latency},
                {"ticket_id", r.ticket_id ? Json(*r.ticket_id) : Json(nullptr)}};
}

void write_session_log(const SessionLog& log, std::ostream& out) {
    for (const auto& r : log.records) {
        out << session_record_to_json(r).dump() << '\n';
    }
}

namespace {

/// Advances the replay clock by the provider's simulated response time.
class ClockedProvider : public DecisionProvider {
public:
    ClockedProvider(PolicyDecisionProvider& inner, std::int64_t& tick) : inner_(inner), tick_(tick) {}

    std::optional<UserChoice> decide(const AlertTicket& ticket, std::chrono::milliseconds timeout) override {
        auto choice = inner_.decide(ticket, timeout);
        tick_ += inner_.last_latency();
        return choice;
    }

private:
    PolicyDecisionProvider& inner_;
    std::int64_t& tick_;
};

} // namespace

SessionLog replay(const Scenario& scenario, const ClassifierModel& model, PolicyDecisionProvider& provider,
                  BlockList& blocklist, const ReplayOptions& options) {
    std::int64_t tick = 0;
    EngineOptions engine_options;
    engine_options.decision_timeout = options.decision_timeout;
    engine_options.clock = [&tick] { return tick; };
    Engine engine(blocklist, engine_options);
    if (options.configure) {
        options.configure(engine);
    }
    ClockedProvider clocked(provider, tick);

    SessionLog log;
    for (const auto& event : scenario.events) {
        tick = std::max(tick, event.timestamp);
        const Verdict v = engine.intercept(event, model, clocked);
        SessionRecord r{event.event_id, v.decision, v.reason, 0, v.ticket_id};
        if (v.ticket_id) {
            const auto t = engine.ticket(*v.ticket_id);
            r.latency = *t->resolved_at - t->created_at;
        }
        log.records.push_back(std::move(r));
    }
    return log;
}

} // namespace xssguard
