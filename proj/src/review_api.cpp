#include <httplib.h>

#include "locaudit/review_api.hpp"

#include "locaudit/error.hpp"

namespace locaudit {

namespace {

void send_json(httplib::Response& res, const nlohmann::ordered_json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, nlohmann::ordered_json{{"error", message}}, status);
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const NotFoundError& e) {
            send_error(res, 404, e.what());
        } catch (const StateError& e) {
            send_error(res, 409, e.what());
        } catch (const ValidationError& e) {
            send_error(res, 422, e.what());
        } catch (const ParseError& e) {
            send_error(res, 400, e.what());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, 400, std::string("bad request body: ") + e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    };
}

std::string param(const httplib::Request& req, const char* name) {
    return req.has_param(name) ? req.get_param_value(name) : std::string();
}

nlohmann::ordered_json summary_json(const TaskSummary& s) {
    nlohmann::ordered_json j;
    j["task_id"] = s.key.task_id;
    j["language"] = s.key.language;
    j["state"] = to_string(s.state);
    j["priority"] = s.priority;
    j["failed_filters"] = s.failed_filters;
    j["failed_judges"] = s.failed_judges;
    j["claimed_by"] = s.claimed_by ? nlohmann::ordered_json(*s.claimed_by) : nlohmann::ordered_json(nullptr);
    return j;
}

template <typename T>
nlohmann::ordered_json json_array(const std::vector<T>& items) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& i : items) arr.push_back(to_json(i));
    return arr;
}

nlohmann::ordered_json claimed_json(const ClaimedTask& c) {
    nlohmann::ordered_json j;
    j["task"] = record_to_json(c.task);
    j["source"] = record_to_json(c.source);
    j["report"] = to_json(c.report);
    j["prior_decisions"] = json_array(c.prior_decisions);
    j["prior_meta_reviews"] = json_array(c.prior_meta_reviews);
    return j;
}

}  // namespace

struct ReviewServer::Impl {
    AuditStore& store;
    httplib::Server server;

    explicit Impl(AuditStore& s) : store(s) {}

    TaskKey key_for(const httplib::Request& req) const { return store.resolve(req.matches[1], param(req, "language")); }

    void routes() {
        server.Get("/api/tasks", guarded([this](const httplib::Request& req, httplib::Response& res) {
            std::optional<AuditState> state;
            if (const auto s = param(req, "state"); !s.empty()) {
                state = parse_audit_state(s);
                if (!state) throw ValidationError("unknown state " + s);
            }
            auto arr = nlohmann::ordered_json::array();
            for (const auto& s : store.list(param(req, "language"), state)) arr.push_back(summary_json(s));
            send_json(res, arr);
        }));

        server.Get(R"(/api/tasks/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto key = key_for(req);
            const auto e = store.find(key);
            if (!e) throw NotFoundError("unknown task " + to_string(key));
            nlohmann::ordered_json j;
            j["task"] = record_to_json(e->pair.target);
            j["source"] = record_to_json(e->pair.source);
            j["state"] = to_string(e->state);
            j["claimed_by"] = e->claimed_by ? nlohmann::ordered_json(*e->claimed_by) : nlohmann::ordered_json(nullptr);
            j["report"] = to_json(make_check_report(key, e->findings, e->verdicts));
            j["decisions"] = json_array(e->decisions);
            j["meta_reviews"] = json_array(e->meta_reviews);
            send_json(res, j);
        }));

        server.Post("/api/claims", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            const auto reviewer = body.at("reviewer_id").get<std::string>();
            const auto language = body.value("language", "");
            send_json(res, claimed_json(store.next_task(reviewer, language)));
        }));

        server.Post(R"(/api/tasks/([^/]+)/review)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto body = nlohmann::json::parse(req.body);
            const auto key = store.resolve(req.matches[1], body.value("language", param(req, "language")));
            body["task_id"] = key.task_id;
            body["language"] = key.language;
            const auto state = store.submit_review(decision_from_json(body));
            send_json(res, {{"task_id", key.task_id}, {"language", key.language}, {"state", to_string(state)}});
        }));

        server.Post(R"(/api/tasks/([^/]+)/meta)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto body = nlohmann::json::parse(req.body);
            const auto key = store.resolve(req.matches[1], body.value("language", param(req, "language")));
            body["task_id"] = key.task_id;
            body["language"] = key.language;
            const auto state = store.submit_meta_review(meta_from_json(body));
            send_json(res, {{"task_id", key.task_id}, {"language", key.language}, {"state", to_string(state)}});
        }));

        server.Get("/api/export", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto language = param(req, "language");
            if (language.empty()) throw ValidationError("language is required");
            const auto d = store.export_audited(language);
            std::string body;
            for (const auto& line : serialize_dataset(d)) body += line + "\n";
            res.set_header("X-Export-Note", d.metadata.provenance);
            res.set_content(body, "application/x-ndjson");
        }));

        server.Get("/api/stats", guarded([this](const httplib::Request&, httplib::Response& res) {
            nlohmann::ordered_json j = nlohmann::ordered_json::object();
            for (const auto& [lang, s] : store.stats()) {
                nlohmann::ordered_json l;
                l["tasks"] = s.tasks;
                for (const auto& [st, n] : s.states) l["states"][std::string(to_string(st))] = n;
                for (const auto& [c, n] : s.flags) l["flags"][std::string(to_string(c))] = n;
                j[lang] = std::move(l);
            }
            send_json(res, j);
        }));
    }
};

ReviewServer::ReviewServer(AuditStore& store, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(store)) {
    // httplib defaults to SO_REUSEPORT, which lets a second server share a busy port.
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    impl_->routes();
    if (static_dir && std::filesystem::is_directory(*static_dir)) {
        impl_->server.set_mount_point("/", static_dir->string());
    }
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) throw Error("port " + std::to_string(port) + " is busy");
    return port;
}

void ReviewServer::listen() { impl_->server.listen_after_bind(); }

void ReviewServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void ReviewServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace locaudit
