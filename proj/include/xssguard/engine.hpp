#pragma once

#include "xssguard/catalog.hpp"
#include "xssguard/dataset.hpp"
#include "xssguard/learners.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace xssguard {

enum class TicketState { Pending, Allowed, Blocked, Expired };
enum class Decision { Allow, Block };
enum class Reason { AutoBenign, AutoBlocklisted, UserAllowed, UserBlocked, PolicyDefault };
enum class UserChoice { Allow, Block };

std::string_view state_name(TicketState s);
std::string_view decision_name(Decision d);
std::string_view reason_name(Reason r);
std::optional<Decision> parse_decision(std::string_view s);
std::optional<Reason> parse_reason(std::string_view s);

/// A flagged registration awaiting (or past) operator adjudication.
struct AlertTicket {
    std::uint64_t id = 0;
    BridgeEvent event;
    std::vector<std::string> sensitive_apis;
    Label classifier_verdict = Label::Yes;
    double score = 0.0;
    TicketState state = TicketState::Pending;
    std::int64_t created_at = 0;
    std::optional<std::int64_t> resolved_at;  // set iff state != Pending
};

struct Verdict {
    Decision decision = Decision::Allow;
    Reason reason = Reason::AutoBenign;
    std::optional<std::uint64_t> ticket_id;
    double score = 0.0;               // 0 when the classifier was not consulted
    bool persistence_failed = false;  // Block applied but not written to the store
};

/// Answers "allow this object?" for a flagged registration.
class DecisionProvider {
public:
    virtual ~DecisionProvider() = default;
    /// nullopt means no answer arrived within `timeout`.
    virtual std::optional<UserChoice> decide(const AlertTicket& ticket, std::chrono::milliseconds timeout) = 0;
};

struct BlockEntry {
    std::int64_t timestamp = 0;
    std::string website;
    std::string object;
};

/// Set of blocked (website, object) pairs, optionally backed by an
/// append-only JSON-lines store. Thread-safe.
class BlockList {
public:
    /// In-memory only.
    BlockList() = default;

    /// Loads `store` if it exists. An unreadable store or corrupt lines are
    /// reported through warnings(); every intact record before them is kept.
    explicit BlockList(std::filesystem::path store);

    bool contains(std::string_view website, std::string_view object) const;

    struct AppendResult {
        bool inserted = false;   // false if the pair was already present
        bool persisted = false;  // durable in the store (true when there is no store)
    };
    /// Inserts and, for a new pair, writes and fsyncs one line before returning.
    AppendResult append(const BlockEntry& entry);

    std::vector<BlockEntry> entries() const;
    std::size_t size() const;
    std::vector<std::string> warnings() const;
    const std::optional<std::filesystem::path>& store() const noexcept { return store_; }

private:
    mutable std::mutex mu_;
    std::optional<std::filesystem::path> store_;
    std::vector<BlockEntry> entries_;
    std::set<std::pair<std::string, std::string>, std::less<>> keys_;
    std::vector<std::string> warnings_;
};

enum class TicketEventKind { Created, Resolved };

struct TicketEvent {
    std::uint64_t sequence = 0;
    TicketEventKind kind = TicketEventKind::Created;
    AlertTicket ticket;
};

struct EngineOptions {
    std::chrono::milliseconds decision_timeout{120'000};
    /// Tick source for ticket and blocklist timestamps. Defaults to
    /// milliseconds since the engine was constructed.
    std::function<std::int64_t()> clock;
};

/// Maps an event onto the six dataset features. The API feature is the
/// first requested sensitive API, or the first requested API if none is
/// sensitive.
Sample extract_features(const BridgeEvent& event, const SensitiveApiCatalog& catalog = SensitiveApiCatalog::builtin());

/// Threat-prevention unit: decides whether a bridge registration completes.
///
/// intercept() for one event runs start to finish on the caller's thread;
/// several events may be in flight at once, each with its own ticket.
class Engine {
public:
    explicit Engine(BlockList& blocklist, EngineOptions options = {},
                    const SensitiveApiCatalog& catalog = SensitiveApiCatalog::builtin());

    /// 1. A blocklisted (website, object) pair is denied without running the model.
    /// 2. Otherwise the event is classified; No allows it without a prompt.
    /// 3. Yes opens a ticket and asks `provider`; Block (or no answer within
    ///    the timeout) adds the pair to the blocklist.
    /// The registration callback runs only for Allow verdicts, after any
    /// ticket has left Pending.
    Verdict intercept(const BridgeEvent& event, const ClassifierModel& model, DecisionProvider& provider);

    /// Simulated completion of addJavascriptInterface for an allowed event.
    void on_register(std::function<void(const BridgeEvent&)> callback);
    /// Lifecycle feed; called outside the engine lock, in order per ticket.
    void on_ticket(std::function<void(const TicketEvent&)> callback);

    std::vector<AlertTicket> tickets() const;
    std::vector<AlertTicket> pending() const;
    std::optional<AlertTicket> ticket(std::uint64_t id) const;

    std::size_t classifier_calls() const noexcept { return classifier_calls_.load(); }
    std::size_t registrations() const noexcept { return registrations_.load(); }

    const BlockList& blocklist() const noexcept { return blocklist_; }
    const SensitiveApiCatalog& catalog() const noexcept { return catalog_; }
    std::chrono::milliseconds decision_timeout() const noexcept { return options_.decision_timeout; }

    /// Current tick on the engine clock.
    std::int64_t now() const;

private:
    void publish(TicketEventKind kind, const AlertTicket& ticket);

    BlockList& blocklist_;
    EngineOptions options_;
    const SensitiveApiCatalog& catalog_;
    std::chrono::steady_clock::time_point epoch_;

    mutable std::mutex mu_;
    std::map<std::uint64_t, AlertTicket> tickets_;
    std::uint64_t next_ticket_ = 1;
    std::uint64_t next_sequence_ = 1;
    std::mutex publish_mu_;

    std::function<void(const BridgeEvent&)> on_register_;
    std::function<void(const TicketEvent&)> on_ticket_;
    std::atomic<std::size_t> classifier_calls_{0};
    std::atomic<std::size_t> registrations_{0};
};

} // namespace xssguard
