#pragma once

#include "xssguard/engine.hpp"
#include "xssguard/learners.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace xssguard {

// ---------------------------------------------------------------------------
// JSON shapes shared by scenario files, logs and HTTP endpoints

Json event_to_json(const BridgeEvent& event);
/// `permissions` may be a '|'-joined string or an array; it is canonicalized.
/// Throws DomainError on missing or mistyped fields.
BridgeEvent event_from_json(const Json& j);

/// Ticket as served to the alert console. `now` adds an `age` field.
Json ticket_to_json(const AlertTicket& ticket, std::optional<std::int64_t> now = std::nullopt);
Json ticket_event_to_json(const TicketEvent& event);
Json blocklist_to_json(const BlockList& blocklist);

// ---------------------------------------------------------------------------
// Scenarios

struct Scenario {
    std::string name;
    std::optional<std::uint64_t> seed;
    std::vector<BridgeEvent> events;  // timestamps non-decreasing
};

/// JSON lines, one event per line, with an optional first line
/// {"scenario": {"name": ..., "seed": ...}}. Throws ParseError carrying the
/// offending line number.
Scenario read_scenario(std::istream& in);
Scenario read_scenario(const std::filesystem::path& path);
void write_scenario(const Scenario& scenario, std::ostream& out);

/// One event per sample, `step` ticks apart, requesting the sample's API
/// through an object named `object_name`.
Scenario scenario_from_dataset(const Dataset& ds, std::string name, std::int64_t step = 1000,
                               std::string object_name = "jsBridge");

// ---------------------------------------------------------------------------
// Decision policies for replay

enum class PolicyKind { AlwaysAllow, AlwaysBlock, FlagSensitive, Scripted };

std::string_view policy_name(PolicyKind p);
std::optional<PolicyKind> parse_policy(std::string_view name);

struct ScriptedAnswer {
    std::optional<UserChoice> choice;  // nullopt: the operator never answers
    std::int64_t latency = 0;          // simulated response time, in ticks
};

/// A JSON array, or JSON lines, of "allow" | "block" | "timeout" or
/// {"decision": ..., "latency": n}.
std::vector<ScriptedAnswer> read_answers(std::istream& in);
std::vector<ScriptedAnswer> read_answers(const std::filesystem::path& path);

/// Non-interactive operator. flag_sensitive blocks exactly the tickets
/// whose event requests a catalog API. Scripted answers are consumed in
/// ticket order; once exhausted every further ticket times out.
class PolicyDecisionProvider : public DecisionProvider {
public:
    explicit PolicyDecisionProvider(PolicyKind kind, std::vector<ScriptedAnswer> answers = {});

    std::optional<UserChoice> decide(const AlertTicket& ticket, std::chrono::milliseconds timeout) override;

    /// Simulated response time of the last decide() call.
    std::int64_t last_latency() const noexcept { return last_latency_; }
    std::size_t calls() const noexcept { return calls_; }

private:
    PolicyKind kind_;
    std::vector<ScriptedAnswer> answers_;
    std::size_t next_ = 0;
    std::size_t calls_ = 0;
    std::int64_t last_latency_ = 0;
};

struct SessionRecord {
    std::string event_id;
    Decision decision = Decision::Allow;
    Reason reason = Reason::AutoBenign;
    std::int64_t latency = 0;  // ticks from ticket creation to resolution; 0 without a ticket
    std::optional<std::uint64_t> ticket_id;

    bool operator==(const SessionRecord&) const = default;
};

struct SessionLog {
    std::vector<SessionRecord> records;
};

Json session_record_to_json(const SessionRecord& r);
void write_session_log(const SessionLog& log, std::ostream& out);

struct ReplayOptions {
    std::chrono::milliseconds decision_timeout{120'000};
    /// Called once with the replay engine before the first event, e.g. to
    /// install registration or ticket callbacks.
    std::function<void(Engine&)> configure;
};

/// Feeds the scenario through a fresh engine in order, on a logical clock:
/// each event happens at its timestamp, a scripted answer takes its
/// latency, and a missing answer takes the decision timeout (in ms ticks).
SessionLog replay(const Scenario& scenario, const ClassifierModel& model, PolicyDecisionProvider& provider,
                  BlockList& blocklist, const ReplayOptions& options = {});

// ---------------------------------------------------------------------------
// Live service

struct GatewayOptions {
    std::chrono::milliseconds decision_timeout{120'000};
    /// Longest a stream connection waits before sending a keep-alive.
    std::chrono::milliseconds stream_tick{250};
};

/// HTTP front end for the engine.
///
///   GET  /alerts/pending          pending tickets
///   GET  /alerts                  all tickets
///   POST /alerts/{id}/decision    {"decision": "allow" | "block"}
///   GET  /events/stream           server-sent ticket lifecycle events
///   POST /simulate/event          inject a BridgeEvent
///   GET  /blocklist               current entries
///   GET  /session                 verdicts so far
///
/// Each injected event is intercepted on its own worker; workers enter the
/// engine in arrival order, and a flagged one waits for an operator
/// decision while later events proceed.
class Gateway {
public:
    Gateway(ClassifierModel model, BlockList& blocklist, GatewayOptions options = {});
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Binds; port 0 picks a free port. Returns false on failure.
    bool bind(const std::string& host, int port);
    int port() const noexcept { return port_; }
    /// Serves on a background thread (after bind()).
    void start();
    /// Serves on the calling thread until stop().
    void run();
    void stop();

    // The same operations the HTTP handlers use.

    /// Validates and queues the event; returns its id (generated when empty).
    std::string inject(BridgeEvent event);

    enum class SubmitStatus { Accepted, NotFound, Conflict };
    struct SubmitResult {
        SubmitStatus status;
        std::optional<AlertTicket> ticket;  // state after the call
    };
    /// Resolves a pending ticket. Waits until the engine has applied the
    /// decision, so the returned ticket is already Allowed or Blocked.
    SubmitResult submit(std::uint64_t ticket_id, UserChoice choice);

    /// Blocks until every injected event has a verdict or `timeout` passes.
    bool wait_idle(std::chrono::milliseconds timeout);

    Engine& engine() noexcept { return engine_; }
    SessionLog session() const;
    std::vector<std::string> stream_messages() const;

private:
    class OperatorProvider;
    struct Impl;

    void process(std::uint64_t arrival, BridgeEvent event);
    void record_stream(const TicketEvent& ev);

    ClassifierModel model_;
    BlockList& blocklist_;
    GatewayOptions options_;
    Engine engine_;
    std::unique_ptr<OperatorProvider> operator_;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    bool stopping_ = false;
    std::uint64_t arrivals_ = 0;
    std::uint64_t admitted_ = 0;  // arrivals that have entered the engine
    std::uint64_t finished_ = 0;
    std::vector<std::thread> workers_;
    SessionLog session_;
    std::vector<std::string> stream_;  // SSE frames, in publication order
    std::thread listener_;
};

} // namespace xssguard
