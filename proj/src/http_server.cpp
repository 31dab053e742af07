#include "courseassist/http_server.hpp"

#include "json_codec.hpp"

#include <httplib.h>

#include <sstream>
#include <thread>

namespace courseassist {

int http_status_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::validation:
    case ErrorCode::malformed_input:
    case ErrorCode::invalid_config:
    case ErrorCode::budget_too_small:
    case ErrorCode::inconsistent_spec:
        return 400;
    case ErrorCode::unauthorized:
        return 403;
    case ErrorCode::not_found:
        return 404;
    case ErrorCode::provider_unreachable:
    case ErrorCode::provider_rejected:
        return 502;
    case ErrorCode::deadline_exceeded:
        return 504;
    case ErrorCode::dimension_mismatch:
    case ErrorCode::zero_vector:
    case ErrorCode::unparseable_verdict:
    case ErrorCode::io:
    case ErrorCode::storage:
        return 500;
    }
    return 500;
}

namespace {

using httplib::Request;
using httplib::Response;

void send_json(Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(Response& res, int status, std::string_view code, const std::string& message,
                const std::string& request_id = {}) {
    json err = {{"code", code}, {"message", message}};
    if (!request_id.empty()) err["request_id"] = request_id;
    send_json(res, {{"error", err}}, status);
}

bool truthy(const std::string& v) {
    const auto l = to_lower(trim(v));
    return l == "1" || l == "true" || l == "yes";
}

Caller caller_of(const Request& req) {
    Caller c;
    c.account = trim(req.get_header_value("X-User"));
    if (c.account.empty()) throw Error(ErrorCode::unauthorized, "missing X-User header");
    const auto role = to_lower(trim(req.get_header_value("X-Role")));
    if (role == "educator") c.role = Role::educator;
    else if (role.empty() || role == "student") c.role = Role::student;
    else throw Error(ErrorCode::validation, "unknown role: " + role);
    c.developer = truthy(req.get_header_value("X-Developer"));
    return c;
}

json body_of(const Request& req) {
    if (trim(req.body).empty()) return json::object();
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::validation, "request body must be a JSON object");
    return j;
}

std::optional<Timestamp> query_time(const Request& req, const char* key) {
    if (!req.has_param(key)) return std::nullopt;
    auto t = try_parse_timestamp(req.get_param_value(key));
    if (!t) throw Error(ErrorCode::validation, std::string(key) + " is not a date or ISO-8601 timestamp");
    return t;
}

void require_educator(const Caller& c) {
    if (c.role != Role::educator) throw Error(ErrorCode::unauthorized, "educator role required");
}

json conversation_view(const CourseAssistService& service, const Conversation& c) {
    json j = c;
    json structured = json::object();
    for (const auto& m : c.messages) {
        if (m.role == MessageRole::assistant && !m.is_error_turn()) structured[m.id] = service.structured_view(c, m);
    }
    return {{"conversation", j}, {"structured", structured}, {"rounds", rounds(c)}};
}

template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f = std::move(f)](const Request& req, Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            const auto missing_identity = e.code() == ErrorCode::unauthorized && req.get_header_value("X-User").empty();
            send_error(res, missing_identity ? 401 : http_status_for(e.code()), to_string(e.code()), e.what(),
                       e.request_id());
        } catch (const json::exception& e) {
            send_error(res, 400, "validation", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

} // namespace

struct HttpServer::Impl {
    CourseAssistService& service;
    HttpServerOptions options;
    httplib::Server server;
    std::thread thread;

    Impl(CourseAssistService& s, HttpServerOptions o) : service(s), options(std::move(o)) { routes(); }

    void routes() {
        const auto threads = options.worker_threads;
        server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
        // the library default adds SO_REUSEPORT, which lets a second server share a port silently
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });

        server.Get("/health", [](const Request&, Response& res) { send_json(res, {{"status", "ok"}}); });

        server.Post(R"(/courses/([^/]+)/conversations)", guarded([this](const Request& req, Response& res) {
            const auto caller = caller_of(req);
            const auto body = body_of(req);
            auto mode = ConversationMode::general;
            if (body.contains("mode") && !body["mode"].is_null()) mode = parse_mode(body["mode"].get<std::string>());
            const auto id = service.start_conversation(req.matches[1], caller, mode);
            send_json(res, {{"conversation_id", id}, {"course_id", req.matches[1]}, {"mode", to_string(mode)}}, 201);
        }));

        server.Post(R"(/conversations/([^/]+)/messages)", guarded([this](const Request& req, Response& res) {
            const auto caller = caller_of(req);
            const auto body = body_of(req);
            PostQuestionRequest q;
            q.text = body.at("text").get<std::string>();
            q.selected_documents = body.value("selected_documents", std::vector<std::string>{});
            if (body.contains("mode") && !body["mode"].is_null()) q.explicit_mode = parse_mode(body["mode"].get<std::string>());
            const auto turn = service.post_question(req.matches[1], caller, std::move(q));
            send_json(res, {{"user_message_id", turn.user_message_id},
                            {"message_id", turn.assistant_message_id},
                            {"response", turn.response},
                            {"mode", to_string(turn.decision.mode)},
                            {"advisory", turn.decision.advisory},
                            {"decision", turn.decision},
                            {"rounds", turn.rounds}});
        }));

        server.Get(R"(/conversations/([^/]+))", guarded([this](const Request& req, Response& res) {
            const auto c = service.get_conversation(req.matches[1], caller_of(req));
            send_json(res, conversation_view(service, c));
        }));

        server.Post(R"(/conversations/([^/]+)/share)", guarded([this](const Request& req, Response& res) {
            const auto body = body_of(req);
            const bool shared = body.value("shared", true);
            const std::string id = req.matches[1];
            service.set_shared(id, shared, caller_of(req));
            json out = {{"conversation_id", id}, {"shared", shared}};
            if (shared) out["link"] = "/shared/" + id;
            send_json(res, out);
        }));

        server.Get(R"(/shared/([^/]+))", guarded([this](const Request& req, Response& res) {
            send_json(res, conversation_view(service, service.get_shared(req.matches[1])));
        }));

        server.Get(R"(/courses/([^/]+)/config)", guarded([this](const Request& req, Response& res) {
            require_educator(caller_of(req));
            res.set_content(course_config_to_json(*service.course_config(req.matches[1])), "application/json");
        }));

        server.Put(R"(/courses/([^/]+)/config)", guarded([this](const Request& req, Response& res) {
            const auto caller = caller_of(req);
            auto config = course_config_from_json(req.body);
            service.update_course_config(req.matches[1], std::move(config), caller);
            res.set_content(course_config_to_json(*service.course_config(req.matches[1])), "application/json");
        }));

        server.Post(R"(/courses/([^/]+)/documents)", guarded([this](const Request& req, Response& res) {
            const auto caller = caller_of(req);
            const auto body = body_of(req);
            DocumentInput in;
            in.title = body.at("title").get<std::string>();
            in.kind = parse_document_kind(body.value("kind", std::string("other")));
            in.raw_text = body.at("text").get<std::string>();
            if (body.contains("source_uri")) in.source_uri = body["source_uri"].get<std::string>();
            const auto id = service.upload_document(req.matches[1], std::move(in), caller);
            auto doc = service.knowledge().document(id);
            send_json(res, document_summary(*doc), 201);
        }));

        server.Get(R"(/courses/([^/]+)/documents)", guarded([this](const Request& req, Response& res) {
            caller_of(req);
            json out = json::array();
            for (const auto& d : service.knowledge().documents(req.matches[1])) out.push_back(document_summary(d));
            send_json(res, {{"documents", out}});
        }));

        server.Get(R"(/courses/([^/]+)/documents/([^/]+))", guarded([this](const Request& req, Response& res) {
            caller_of(req);
            auto doc = service.knowledge().document(req.matches[2]);
            if (!doc || doc->course_id != req.matches[1]) {
                throw Error(ErrorCode::not_found, "unknown document: " + std::string(req.matches[2]));
            }
            auto j = document_summary(*doc);
            j["text"] = doc->raw_text;
            send_json(res, j);
        }));

        server.Get(R"(/courses/([^/]+)/export)", guarded([this](const Request& req, Response& res) {
            require_educator(caller_of(req));
            ExportFilter filter;
            filter.from = query_time(req, "from");
            filter.to = query_time(req, "to");
            filter.include_developers = req.has_param("developers") && truthy(req.get_param_value("developers"));
            std::ostringstream out;
            service.export_conversations(req.matches[1], filter, out);
            res.set_content(out.str(), "application/x-ndjson");
        }));

        server.Get(R"(/courses/([^/]+)/analytics/([^/]+))", guarded([this](const Request& req, Response& res) {
            require_educator(caller_of(req));
            service.course_config(req.matches[1]);
            ExportFilter filter;
            filter.from = query_time(req, "from");
            filter.to = query_time(req, "to");
            filter.include_developers = true;
            const auto conversations = service.export_conversations(req.matches[1], filter);
            const std::string report = req.matches[2];
            auto options = this->options.report;
            if (auto t = query_time(req, "semester_start")) options.semester_start = *t;
            if (req.has_param("tz_offset_minutes")) options.tz_offset_minutes = std::stoi(req.get_param_value("tz_offset_minutes"));
            if (req.has_param("developers")) options.exclude_developers = !truthy(req.get_param_value("developers"));
            if (report == "usage") {
                res.set_content(report_to_json(compute_report(conversations, options), -1), "application/json");
            } else if (report == "follow_up") {
                std::vector<Conversation> included;
                for (const auto& c : conversations) {
                    if (!options.exclude_developers || c.user_kind != UserKind::developer) included.push_back(c);
                }
                json out = json::object();
                for (const auto& [course, f] : follow_up_report(included)) {
                    out[course] = {{"conversations", f.conversations},
                                   {"emitted", f.emitted},
                                   {"answered", f.answered},
                                   {"emitted_ratio", f.emitted_ratio},
                                   {"answered_ratio", f.answered_ratio ? json(*f.answered_ratio) : json(nullptr)}};
                }
                send_json(res, out);
            } else {
                throw Error(ErrorCode::not_found, "unknown report: " + report + " (usage, follow_up)");
            }
        }));
    }
};

HttpServer::HttpServer(CourseAssistService& service, HttpServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw Error(ErrorCode::io, "cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw Error(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

int HttpServer::start(const std::string& host, int port) {
    const int bound = bind(host, port);
    impl_->thread = std::thread([this] { serve(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

} // namespace courseassist
