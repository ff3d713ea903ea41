#include "xssguard/gateway.hpp"

#include "xssguard/error.hpp"

#include <httplib.h>

namespace xssguard {

/// Per-ticket answer slots filled by HTTP decisions. A slot closes once the
/// engine has taken its answer (or timed out), after which any further
/// decision for that ticket conflicts.
class Gateway::OperatorProvider : public DecisionProvider {
public:
    std::optional<UserChoice> decide(const AlertTicket& ticket, std::chrono::milliseconds timeout) override {
        std::unique_lock lock(mu_);
        Slot& slot = slots_[ticket.id];
        cv_.wait_for(lock, timeout, [&] { return slot.choice.has_value() || stopping_; });
        slot.closed = true;
        return slot.choice;
    }

    bool submit(std::uint64_t id, UserChoice choice) {
        std::lock_guard lock(mu_);
        Slot& slot = slots_[id];
        if (slot.closed || slot.choice) {
            return false;
        }
        slot.choice = choice;
        cv_.notify_all();
        return true;
    }

    void shutdown() {
        std::lock_guard lock(mu_);
        stopping_ = true;
        cv_.notify_all();
    }

private:
    struct Slot {
        std::optional<UserChoice> choice;
        bool closed = false;
    };

    std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::uint64_t, Slot> slots_;
    bool stopping_ = false;
};

struct Gateway::Impl {
    httplib::Server server;
};

namespace {

/// Lets the next arrival into the engine as soon as this one is waiting on
/// the operator, or when it finishes without a ticket.
class GateProvider : public DecisionProvider {
public:
    GateProvider(DecisionProvider& inner, std::function<void()> open) : inner_(inner), open_(std::move(open)) {}

    std::optional<UserChoice> decide(const AlertTicket& ticket, std::chrono::milliseconds timeout) override {
        open_();
        return inner_.decide(ticket, timeout);
    }

private:
    DecisionProvider& inner_;
    std::function<void()> open_;
};

void reply_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply_json(res, status, Json{{"error", message}});
}

std::string sse_frame(const TicketEvent& ev) {
    const Json j = ticket_event_to_json(ev);
    return "id: " + std::to_string(ev.sequence) + "\nevent: " + j["type"].get<std::string>() + "\ndata: " + j.dump() +
           "\n\n";
}

} // namespace

Gateway::Gateway(ClassifierModel model, BlockList& blocklist, GatewayOptions options)
    : model_(std::move(model)), blocklist_(blocklist), options_(options),
      engine_(blocklist_, EngineOptions{options.decision_timeout, {}}),
      operator_(std::make_unique<OperatorProvider>()), impl_(std::make_unique<Impl>()) {
    engine_.on_ticket([this](const TicketEvent& ev) { record_stream(ev); });

    auto& srv = impl_->server;
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    srv.Get("/alerts/pending", [this](const httplib::Request&, httplib::Response& res) {
        const auto now = engine_.now();
        Json out = Json::array();
        for (const auto& t : engine_.pending()) {
            out.push_back(ticket_to_json(t, now));
        }
        reply_json(res, 200, out);
    });

    srv.Get("/alerts", [this](const httplib::Request&, httplib::Response& res) {
        Json out = Json::array();
        for (const auto& t : engine_.tickets()) {
            out.push_back(ticket_to_json(t));
        }
        reply_json(res, 200, out);
    });

    srv.Post(R"(/alerts/(\d+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
        std::uint64_t id = 0;
        try {
            id = std::stoull(req.matches[1].str());
        } catch (const std::exception&) {
            reply_error(res, 404, "no such ticket");
            return;
        }
        std::optional<UserChoice> choice;
        try {
            const Json body = Json::parse(req.body);
            const std::string word = body.at("decision").get<std::string>();
            if (word == "allow" || word == "Allow") {
                choice = UserChoice::Allow;
            } else if (word == "block" || word == "Block") {
                choice = UserChoice::Block;
            }
        } catch (const Json::exception&) {
        }
        if (!choice) {
            reply_error(res, 400, R"(body must be {"decision": "allow" | "block"})");
            return;
        }
        const SubmitResult r = submit(id, *choice);
        switch (r.status) {
        case SubmitStatus::NotFound:
            reply_error(res, 404, "no such ticket");
            return;
        case SubmitStatus::Conflict: {
            Json body{{"error", "ticket is not pending"}};
            if (r.ticket) {
                body["ticket"] = ticket_to_json(*r.ticket);
            }
            reply_json(res, 409, body);
            return;
        }
        case SubmitStatus::Accepted:
            reply_json(res, 200, ticket_to_json(*r.ticket));
            return;
        }
    });

    srv.Get("/events/stream", [this](const httplib::Request& req, httplib::Response& res) {
        auto cursor = std::make_shared<std::size_t>(0);
        {
            std::lock_guard lock(mu_);
            *cursor = stream_.size();
        }
        // Resume after the last frame the client saw; sequence n is frame n-1.
        if (req.has_header("Last-Event-ID")) {
            try {
                const auto seen = static_cast<std::size_t>(std::stoull(req.get_header_value("Last-Event-ID")));
                *cursor = std::min(*cursor, seen);
            } catch (const std::exception&) {
            }
        }
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [this, cursor](std::size_t, httplib::DataSink& sink) {
            std::vector<std::string> frames;
            {
                std::unique_lock lock(mu_);
                cv_.wait_for(lock, options_.stream_tick, [&] { return stream_.size() > *cursor || stopping_; });
                if (stopping_) {
                    sink.done();
                    return false;
                }
                frames.assign(stream_.begin() + static_cast<std::ptrdiff_t>(*cursor), stream_.end());
                *cursor = stream_.size();
            }
            if (frames.empty()) {
                frames.emplace_back(": keepalive\n\n");
            }
            for (const auto& f : frames) {
                if (!sink.write(f.data(), f.size())) {
                    return false;
                }
            }
            return true;
        });
    });

    srv.Post("/simulate/event", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            BridgeEvent event = event_from_json(Json::parse(req.body));
            const std::string id = inject(std::move(event));
            reply_json(res, 202, Json{{"event_id", id}});
        } catch (const Json::exception& e) {
            reply_error(res, 400, std::string("invalid JSON: ") + e.what());
        } catch (const DomainError& e) {
            reply_error(res, 400, e.what());
        } catch (const Error& e) {
            reply_error(res, 503, e.what());
        }
    });

    srv.Get("/blocklist", [this](const httplib::Request&, httplib::Response& res) {
        reply_json(res, 200, blocklist_to_json(blocklist_));
    });

    srv.Get("/session", [this](const httplib::Request&, httplib::Response& res) {
        Json out = Json::array();
        for (const auto& r : session().records) {
            out.push_back(session_record_to_json(r));
        }
        reply_json(res, 200, out);
    });
}

Gateway::~Gateway() { stop(); }

bool Gateway::bind(const std::string& host, int port) {
    auto& srv = impl_->server;
    if (port == 0) {
        port_ = srv.bind_to_any_port(host);
        return port_ > 0;
    }
    if (!srv.bind_to_port(host, port)) {
        return false;
    }
    port_ = port;
    return true;
}

void Gateway::start() {
    listener_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void Gateway::run() { impl_->server.listen_after_bind(); }

void Gateway::stop() {
    {
        std::lock_guard lock(mu_);
        if (stopping_) {
            return;
        }
        stopping_ = true;
        cv_.notify_all();
    }
    operator_->shutdown();
    impl_->server.stop();
    if (listener_.joinable()) {
        listener_.join();
    }
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(mu_);
        workers.swap(workers_);
    }
    for (auto& w : workers) {
        w.join();
    }
}

std::string Gateway::inject(BridgeEvent event) {
    validate(event);
    std::lock_guard lock(mu_);
    if (stopping_) {
        throw Error("gateway is shutting down");
    }
    const std::uint64_t arrival = arrivals_++;
    if (event.event_id.empty()) {
        event.event_id = "live-" + std::to_string(arrival + 1);
    }
    std::string id = event.event_id;
    workers_.emplace_back([this, arrival, e = std::move(event)]() mutable { process(arrival, std::move(e)); });
    return id;
}

void Gateway::process(std::uint64_t arrival, BridgeEvent event) {
    bool opened = false;
    auto open = [&] {
        std::lock_guard lock(mu_);
        if (!opened) {
            opened = true;
            ++admitted_;
            cv_.notify_all();
        }
    };
    {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return admitted_ == arrival; });
    }
    GateProvider gate(*operator_, open);
    std::optional<SessionRecord> record;
    try {
        const Verdict v = engine_.intercept(event, model_, gate);
        record = SessionRecord{event.event_id, v.decision, v.reason, 0, v.ticket_id};
        if (v.ticket_id) {
            const auto t = engine_.ticket(*v.ticket_id);
            record->latency = *t->resolved_at - t->created_at;
        }
    } catch (const std::exception&) {
    }
    open();
    std::lock_guard lock(mu_);
    if (record) {
        session_.records.push_back(std::move(*record));
    }
    ++finished_;
    cv_.notify_all();
}

void Gateway::record_stream(const TicketEvent& ev) {
    std::lock_guard lock(mu_);
    stream_.push_back(sse_frame(ev));
    cv_.notify_all();
}

Gateway::SubmitResult Gateway::submit(std::uint64_t ticket_id, UserChoice choice) {
    auto ticket = engine_.ticket(ticket_id);
    if (!ticket) {
        return {SubmitStatus::NotFound, std::nullopt};
    }
    if (ticket->state != TicketState::Pending || !operator_->submit(ticket_id, choice)) {
        return {SubmitStatus::Conflict, engine_.ticket(ticket_id)};
    }
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] {
        ticket = engine_.ticket(ticket_id);
        return ticket->state != TicketState::Pending || stopping_;
    });
    return {SubmitStatus::Accepted, ticket};
}

bool Gateway::wait_idle(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return finished_ == arrivals_; });
}

SessionLog Gateway::session() const {
    std::lock_guard lock(mu_);
    return session_;
}

std::vector<std::string> Gateway::stream_messages() const {
    std::lock_guard lock(mu_);
    return stream_;
}

} // namespace xssguard
