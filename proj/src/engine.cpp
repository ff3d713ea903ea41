#include "xssguard/engine.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <unistd.h>

namespace xssguard {

namespace {

template <typename E, std::size_t N>
std::optional<E> parse_enum(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table) {
    for (const auto& [value, name] : table) {
        if (name == s) {
            return value;
        }
    }
    return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view enum_name(E e, const std::array<std::pair<E, std::string_view>, N>& table) {
    for (const auto& [value, name] : table) {
        if (value == e) {
            return name;
        }
    }
    return "?";
}

constexpr std::array<std::pair<TicketState, std::string_view>, 4> kStates = {{
    {TicketState::Pending, "Pending"},
    {TicketState::Allowed, "Allowed"},
    {TicketState::Blocked, "Blocked"},
    {TicketState::Expired, "Expired"},
}};

constexpr std::array<std::pair<Decision, std::string_view>, 2> kDecisions = {{
    {Decision::Allow, "Allow"},
    {Decision::Block, "Block"},
}};

constexpr std::array<std::pair<Reason, std::string_view>, 5> kReasons = {{
    {Reason::AutoBenign, "AutoBenign"},
    {Reason::AutoBlocklisted, "AutoBlocklisted"},
    {Reason::UserAllowed, "UserAllowed"},
    {Reason::UserBlocked, "UserBlocked"},
    {Reason::PolicyDefault, "PolicyDefault"},
}};

} // namespace

std::string_view state_name(TicketState s) { return enum_name(s, kStates); }
std::string_view decision_name(Decision d) { return enum_name(d, kDecisions); }
std::string_view reason_name(Reason r) { return enum_name(r, kReasons); }
std::optional<Decision> parse_decision(std::string_view s) { return parse_enum(s, kDecisions); }
std::optional<Reason> parse_reason(std::string_view s) { return parse_enum(s, kReasons); }

// ---------------------------------------------------------------------------
// BlockList

BlockList::BlockList(std::filesystem::path store) : store_(std::move(store)) {
    std::error_code ec;
    if (!std::filesystem::exists(*store_, ec)) {
        return;
    }
    std::ifstream in(*store_, std::ios::binary);
    if (!in) {
        warnings_.push_back("blocklist store " + store_->string() + " is unreadable; starting empty");
        return;
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            BlockEntry e{j.at("ts").get<std::int64_t>(), j.at("website").get<std::string>(),
                         j.at("object").get<std::string>()};
            if (keys_.emplace(e.website, e.object).second) {
                entries_.push_back(std::move(e));
            }
        } catch (const nlohmann::json::exception&) {
            warnings_.push_back("blocklist store " + store_->string() + ": line " + std::to_string(line_no) +
                                " is corrupt and was skipped");
        }
    }
}

bool BlockList::contains(std::string_view website, std::string_view object) const {
    std::lock_guard lock(mu_);
    return keys_.contains(std::pair<std::string, std::string>(website, object));
}

BlockList::AppendResult BlockList::append(const BlockEntry& entry) {
    std::lock_guard lock(mu_);
    AppendResult result;
    if (!keys_.emplace(entry.website, entry.object).second) {
        result.persisted = true;
        return result;
    }
    result.inserted = true;
    entries_.push_back(entry);
    if (!store_) {
        result.persisted = true;
        return result;
    }

    const std::string line =
        nlohmann::json{{"ts", entry.timestamp}, {"website", entry.website}, {"object", entry.object}}.dump();
    std::FILE* f = std::fopen(store_->c_str(), "a+b");
    if (f == nullptr) {
        warnings_.push_back("cannot open blocklist store " + store_->string() + " for append");
        return result;
    }
    // A torn last line must not swallow the new record.
    bool needs_newline = false;
    if (std::fseek(f, 0, SEEK_END) == 0 && std::ftell(f) > 0 && std::fseek(f, -1, SEEK_END) == 0) {
        needs_newline = std::fgetc(f) != '\n';
    }
    bool ok = true;
    if (needs_newline) {
        ok = std::fputc('\n', f) != EOF;
    }
    ok = ok && std::fputs(line.c_str(), f) != EOF && std::fputc('\n', f) != EOF;
    ok = ok && std::fflush(f) == 0 && ::fsync(::fileno(f)) == 0;
    ok = (std::fclose(f) == 0) && ok;
    if (!ok) {
        warnings_.push_back("write to blocklist store " + store_->string() + " failed");
    }
    result.persisted = ok;
    return result;
}

std::vector<BlockEntry> BlockList::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

std::size_t BlockList::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

std::vector<std::string> BlockList::warnings() const {
    std::lock_guard lock(mu_);
    return warnings_;
}

// ---------------------------------------------------------------------------
// Engine

Sample extract_features(const BridgeEvent& event, const SensitiveApiCatalog& catalog) {
    Sample s;
    s.value(Feature::AppName) = event.app_name;
    s.value(Feature::Permissions) = event.permissions;
    const auto sensitive = catalog.sensitive_subset(event);
    if (!sensitive.empty()) {
        s.value(Feature::ApiName) = sensitive.front();
    } else if (!event.requested_apis.empty()) {
        s.value(Feature::ApiName) = event.requested_apis.front();
    }
    s.value(Feature::WebsiteName) = event.website_name;
    s.value(Feature::Ip) = event.ip;
    s.value(Feature::Location) = event.location;
    return s;
}

Engine::Engine(BlockList& blocklist, EngineOptions options, const SensitiveApiCatalog& catalog)
    : blocklist_(blocklist), options_(std::move(options)), catalog_(catalog),
      epoch_(std::chrono::steady_clock::now()) {}

void Engine::on_register(std::function<void(const BridgeEvent&)> callback) { on_register_ = std::move(callback); }

void Engine::on_ticket(std::function<void(const TicketEvent&)> callback) { on_ticket_ = std::move(callback); }

std::int64_t Engine::now() const {
    if (options_.clock) {
        return options_.clock();
    }
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - epoch_).count();
}

void Engine::publish(TicketEventKind kind, const AlertTicket& ticket) {
    std::lock_guard lock(publish_mu_);
    TicketEvent ev{next_sequence_++, kind, ticket};
    if (on_ticket_) {
        on_ticket_(ev);
    }
}

Verdict Engine::intercept(const BridgeEvent& event, const ClassifierModel& model, DecisionProvider& provider) {
    Verdict verdict;
    if (blocklist_.contains(event.website_name, event.object_name)) {
        verdict.decision = Decision::Block;
        verdict.reason = Reason::AutoBlocklisted;
        return verdict;
    }

    const Sample features = extract_features(event, catalog_);
    ++classifier_calls_;
    verdict.score = model.score(features);
    if (verdict.score < 0.5) {
        verdict.decision = Decision::Allow;
        verdict.reason = Reason::AutoBenign;
        ++registrations_;
        if (on_register_) {
            on_register_(event);
        }
        return verdict;
    }

    AlertTicket ticket;
    {
        std::lock_guard lock(mu_);
        ticket.id = next_ticket_++;
        ticket.event = event;
        ticket.sensitive_apis = catalog_.sensitive_subset(event);
        ticket.classifier_verdict = Label::Yes;
        ticket.score = verdict.score;
        ticket.state = TicketState::Pending;
        ticket.created_at = now();
        tickets_.emplace(ticket.id, ticket);
    }
    verdict.ticket_id = ticket.id;
    publish(TicketEventKind::Created, ticket);

    const auto choice = provider.decide(ticket, options_.decision_timeout);
    TicketState final_state;
    if (!choice) {
        verdict.decision = Decision::Block;
        verdict.reason = Reason::PolicyDefault;
        final_state = TicketState::Expired;
    } else if (*choice == UserChoice::Allow) {
        verdict.decision = Decision::Allow;
        verdict.reason = Reason::UserAllowed;
        final_state = TicketState::Allowed;
    } else {
        verdict.decision = Decision::Block;
        verdict.reason = Reason::UserBlocked;
        final_state = TicketState::Blocked;
    }

    if (verdict.decision == Decision::Block) {
        const auto result = blocklist_.append({now(), event.website_name, event.object_name});
        verdict.persistence_failed = !result.persisted;
    }
    {
        std::lock_guard lock(mu_);
        auto& stored = tickets_.at(ticket.id);
        stored.state = final_state;
        stored.resolved_at = now();
        ticket = stored;
    }
    publish(TicketEventKind::Resolved, ticket);

    if (verdict.decision == Decision::Allow) {
        ++registrations_;
        if (on_register_) {
            on_register_(event);
        }
    }
    return verdict;
}

std::vector<AlertTicket> Engine::tickets() const {
    std::lock_guard lock(mu_);
    std::vector<AlertTicket> out;
    for (const auto& [id, t] : tickets_) {
        out.push_back(t);
    }
    return out;
}

std::vector<AlertTicket> Engine::pending() const {
    std::lock_guard lock(mu_);
    std::vector<AlertTicket> out;
    for (const auto& [id, t] : tickets_) {
        if (t.state == TicketState::Pending) {
            out.push_back(t);
        }
    }
    return out;
}

std::optional<AlertTicket> Engine::ticket(std::uint64_t id) const {
    std::lock_guard lock(mu_);
    const auto it = tickets_.find(id);
    if (it == tickets_.end()) {
        return std::nullopt;
    }
    return it->second;
}

} // namespace xssguard
