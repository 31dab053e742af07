#include "courseassist/app.hpp"

#include "courseassist/annotation.hpp"
#include "courseassist/http_server.hpp"
#include "courseassist/synthetic.hpp"
#include "json_codec.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

namespace courseassist {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::malformed_input:
    case ErrorCode::invalid_config:
        return exit_code::malformed_input;
    case ErrorCode::inconsistent_spec:
        return exit_code::inconsistent_spec;
    case ErrorCode::io:
    case ErrorCode::not_found:
        return exit_code::io;
    case ErrorCode::validation:
    case ErrorCode::unauthorized:
    case ErrorCode::budget_too_small:
        return exit_code::validation;
    case ErrorCode::provider_unreachable:
    case ErrorCode::provider_rejected:
    case ErrorCode::deadline_exceeded:
    case ErrorCode::unparseable_verdict:
        return exit_code::provider;
    case ErrorCode::storage:
        return exit_code::storage;
    case ErrorCode::dimension_mismatch:
    case ErrorCode::zero_vector:
        return exit_code::internal;
    }
    return exit_code::internal;
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    return out;
}

HttpEndpointConfig endpoint_from(const json& j) {
    HttpEndpointConfig c;
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model = j.at("model").get<std::string>();
    c.api_key_env = j.value("api_key_env", std::string{});
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    return c;
}

} // namespace

AppConfig load_app_config(const fs::path& path) {
    const auto text = read_file(path);
    const auto base = path.parent_path();
    const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    AppConfig c;
    try {
        const auto j = json::parse(text);
        if (!j.is_object()) throw Error(ErrorCode::invalid_config, "config must be a JSON object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            static const std::vector<std::string> known{"db", "salt", "embedding", "llm", "gateway",
                                                        "courses", "host", "port", "report"};
            if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
                throw Error(ErrorCode::invalid_config, "unknown config key: " + it.key());
            }
        }
        if (j.contains("db")) {
            const auto db = j["db"].get<std::string>();
            c.db = db == ":memory:" ? fs::path(db) : resolve(db);
        }
        c.salt = j.value("salt", c.salt);
        if (j.contains("embedding")) {
            const auto& e = j["embedding"];
            c.embedding_provider = e.value("provider", c.embedding_provider);
            c.embedding_dimension = e.value("dimension", c.embedding_dimension);
            if (c.embedding_provider == "http") c.embedding_endpoint = endpoint_from(e);
            else if (c.embedding_provider != "hash") {
                throw Error(ErrorCode::invalid_config, "unknown embedding provider: " + c.embedding_provider);
            }
        }
        if (j.contains("llm")) {
            const auto& l = j["llm"];
            c.llm_provider = l.value("provider", c.llm_provider);
            if (c.llm_provider == "http") c.llm_endpoint = endpoint_from(l);
            else if (c.llm_provider == "scripted") {
                if (l.contains("script")) c.llm_script = resolve(l["script"].get<std::string>());
            } else {
                throw Error(ErrorCode::invalid_config, "unknown llm provider: " + c.llm_provider);
            }
        }
        if (j.contains("gateway")) {
            const auto& g = j["gateway"];
            c.gateway.max_retries = g.value("max_retries", c.gateway.max_retries);
            c.gateway.initial_backoff =
                std::chrono::milliseconds(g.value("initial_backoff_ms", c.gateway.initial_backoff.count()));
            c.gateway.backoff_multiplier = g.value("backoff_multiplier", c.gateway.backoff_multiplier);
            c.gateway.deadline = std::chrono::milliseconds(g.value("deadline_ms", c.gateway.deadline.count()));
            c.gateway.max_concurrent = g.value("max_concurrent", c.gateway.max_concurrent);
        }
        for (const auto& p : j.value("courses", std::vector<std::string>{})) c.courses.push_back(resolve(p));
        c.host = j.value("host", c.host);
        c.port = j.value("port", c.port);
        if (j.contains("report")) {
            const auto& r = j["report"];
            if (r.contains("semester_start")) c.report.semester_start = r["semester_start"].get<Timestamp>();
            c.report.tz_offset_minutes = r.value("tz_offset_minutes", 0);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_config, path.string() + ": " + e.what());
    }
    return c;
}

App build_app(const AppConfig& config) {
    App app;
    app.storage = std::make_shared<Storage>(config.db.string());

    std::shared_ptr<const EmbeddingProvider> embedder;
    if (config.embedding_provider == "http") {
        embedder = make_http_embedding_provider(config.embedding_endpoint, config.embedding_dimension);
    } else {
        embedder = std::make_shared<HashEmbedder>(config.embedding_dimension);
    }
    app.knowledge = std::make_shared<KnowledgeStore>(embedder);

    std::shared_ptr<CompletionProvider> llm;
    if (config.llm_provider == "http") {
        llm = make_http_completion_provider(config.llm_endpoint);
    } else if (config.llm_script) {
        llm = ScriptedProvider::from_file(*config.llm_script);
    } else {
        llm = std::make_shared<ScriptedProvider>(std::vector<ScriptRule>{},
                                                 "I can help with that. Start from the definitions in the course notes.");
    }
    app.gateway = std::make_shared<LlmGateway>(llm, config.gateway);

    ServiceOptions options;
    options.anonymization_salt = config.salt;
    app.service = std::make_unique<CourseAssistService>(app.storage, app.knowledge, app.gateway, options);
    app.service->load_from_storage();
    for (const auto& path : config.courses) app.service->register_course(load_course_config(path));
    return app;
}

namespace {

struct ManifestEntry {
    std::string title;
    DocumentKind kind;
    fs::path path;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open manifest " + path.string());
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            ManifestEntry e{j.at("title").get<std::string>(),
                            parse_document_kind(j.at("kind").get<std::string>()),
                            fs::path(j.at("path").get<std::string>())};
            if (e.path.is_relative()) e.path = path.parent_path() / e.path;
            entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::malformed_input,
                        "manifest line " + std::to_string(lineno) + ": " + ex.what());
        } catch (const Error& ex) {
            throw Error(ErrorCode::malformed_input, "manifest line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return entries;
}

std::vector<Conversation> read_export_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    return read_export(in);
}

std::optional<Timestamp> parse_optional_time(const std::string& text, const char* flag) {
    if (text.empty()) return std::nullopt;
    auto t = try_parse_timestamp(text);
    if (!t) throw Error(ErrorCode::validation, std::string(flag) + ": not a date or ISO-8601 timestamp");
    return t;
}

std::atomic<HttpServer*> g_serving{nullptr};

extern "C" void stop_on_signal(int) {
    if (auto* s = g_serving.load()) s->stop();
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App cli{"Course assistant service and analytics tools", "courseassist"};
    cli.require_subcommand(1);
    cli.set_help_all_flag("--help-all");

    std::string config_path, db_override, course, manifest, spec_path, in_path, out_path;
    std::string from_text, to_text, semester_text, host;
    int port = -1;
    int tz_offset = 0;
    bool tz_given = false;
    std::uint64_t seed = 0;
    std::size_t n = 200;
    bool developers = false, with_follow_up = false, per_course = false;

    auto* ingest = cli.add_subcommand("ingest", "Ingest documents listed in a JSONL manifest");
    ingest->add_option("--config", config_path, "Service config file")->required();
    ingest->add_option("--db", db_override, "Override the database path");
    ingest->add_option("--course", course, "Course id")->required();
    ingest->add_option("--manifest", manifest, "JSONL manifest of {title, kind, path}")->required();

    auto* serve = cli.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--config", config_path, "Service config file")->required();
    serve->add_option("--db", db_override, "Override the database path");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Bind port (0 picks a free one)")->check(CLI::Range(0, 65535));

    auto* simulate = cli.add_subcommand("simulate", "Write a synthetic conversation export");
    simulate->add_option("--spec", spec_path, "Simulation spec JSON")->required();
    simulate->add_option("--seed", seed, "RNG seed");
    simulate->add_option("--out", out_path, "Output NDJSON path")->required();

    auto* report = cli.add_subcommand("report", "Compute usage analytics from an export file");
    report->add_option("--in", in_path, "Export NDJSON")->required();
    report->add_option("--out", out_path, "Output directory")->required();
    report->add_option("--semester-start", semester_text, "First semester day (YYYY-MM-DD)");
    auto* tz_opt = report->add_option("--tz-offset", tz_offset, "Course timezone, minutes east of UTC");
    report->add_option("--from", from_text, "Only conversations started at or after");
    report->add_option("--to", to_text, "Only conversations started before");
    report->add_flag("--developers", developers, "Include developer conversations");

    auto* sample = cli.add_subcommand("sample", "Sample conversation ids for annotation");
    sample->add_option("--in", in_path, "Export NDJSON")->required();
    sample->add_option("--n", n, "Sample size (per course with --per-course)");
    sample->add_option("--seed", seed, "RNG seed");
    sample->add_option("--course", course, "Restrict to one course");
    sample->add_flag("--per-course", per_course, "Draw n from each course");
    sample->add_flag("--with-follow-up", with_follow_up, "Only conversations with a model follow-up question");
    sample->add_flag("--developers", developers, "Include developer conversations");
    sample->add_option("--out", out_path, "Output file (default stdout)");

    auto* annotate = cli.add_subcommand("annotate-import", "Validate annotation CSV and write aggregate tables");
    annotate->add_option("--in", in_path, "Annotation CSV")->required();
    annotate->add_option("--out", out_path, "Aggregate tables JSON (default stdout)");

    auto* exp = cli.add_subcommand("export", "Export a course's conversations as NDJSON");
    exp->add_option("--config", config_path, "Service config file")->required();
    exp->add_option("--db", db_override, "Override the database path");
    exp->add_option("--course", course, "Course id")->required();
    exp->add_option("--from", from_text, "Only conversations started at or after");
    exp->add_option("--to", to_text, "Only conversations started before");
    exp->add_flag("--developers", developers, "Include developer conversations");
    exp->add_option("--out", out_path, "Output file (default stdout)");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return cli.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return cli.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: code=usage message=\"" << e.what() << "\"\n";
        return exit_code::usage;
    }
    tz_given = tz_opt->count() > 0;

    const auto app_config = [&] {
        auto c = load_app_config(config_path);
        if (!db_override.empty()) c.db = db_override;
        return c;
    };

    try {
        if (cli.got_subcommand(ingest)) {
            auto app = build_app(app_config());
            app.service->course_config(course);
            // read everything first so a bad entry ingests nothing
            std::vector<DocumentInput> inputs;
            for (const auto& e : read_manifest(manifest)) {
                DocumentInput in;
                in.course_id = course;
                in.title = e.title;
                in.kind = e.kind;
                in.raw_text = read_file(e.path);
                in.source_uri = e.path.string();
                if (!utf8::is_valid(in.raw_text)) {
                    throw Error(ErrorCode::malformed_input, e.path.string() + " is not valid UTF-8");
                }
                inputs.push_back(std::move(in));
            }
            for (auto& in : inputs) {
                const auto id = app.knowledge->ingest_document(in);
                out << id << '\t' << in.title << '\n';
            }
            return exit_code::ok;
        }

        if (cli.got_subcommand(serve)) {
            auto config = app_config();
            if (!host.empty()) config.host = host;
            if (port >= 0) config.port = port;
            auto app = build_app(config);
            HttpServerOptions options;
            options.report = config.report;
            HttpServer server(*app.service, options);
            int bound = 0;
            try {
                bound = server.bind(config.host, config.port);
            } catch (const Error& e) {
                err << "error: code=bind_failed message=\"" << e.what() << "\"\n";
                return exit_code::bind_failed;
            }
            out << "listening on " << config.host << ':' << bound << std::endl;
            g_serving = &server;
            std::signal(SIGINT, stop_on_signal);
            std::signal(SIGTERM, stop_on_signal);
            server.serve();
            g_serving = nullptr;
            return exit_code::ok;
        }

        if (cli.got_subcommand(simulate)) {
            const auto spec = load_simulation_spec(spec_path);
            const auto conversations = generate_synthetic_logs(spec, seed);
            auto file = open_out(out_path);
            write_export(file, conversations);
            return exit_code::ok;
        }

        if (cli.got_subcommand(report)) {
            auto conversations = read_export_file(in_path);
            const auto from = parse_optional_time(from_text, "--from");
            const auto to = parse_optional_time(to_text, "--to");
            std::erase_if(conversations, [&](const Conversation& c) {
                return (from && c.started_at < *from) || (to && c.started_at >= *to);
            });
            ReportOptions options;
            if (auto t = parse_optional_time(semester_text, "--semester-start")) options.semester_start = *t;
            if (tz_given) options.tz_offset_minutes = tz_offset;
            options.exclude_developers = !developers;
            const auto usage = compute_report(conversations, options);
            fs::create_directories(out_path);
            open_out(fs::path(out_path) / "report.json") << report_to_json(usage) << '\n';
            write_report_csvs(usage, out_path);
            return exit_code::ok;
        }

        if (cli.got_subcommand(sample)) {
            const auto conversations = read_export_file(in_path);
            std::vector<std::string> courses;
            if (!course.empty()) courses.push_back(course);
            else if (per_course) {
                for (const auto& c : conversations) {
                    if (std::find(courses.begin(), courses.end(), c.course_id) == courses.end()) courses.push_back(c.course_id);
                }
                std::sort(courses.begin(), courses.end());
            } else {
                courses.push_back({});
            }
            std::ofstream file;
            if (!out_path.empty()) file = open_out(out_path);
            std::ostream& dst = out_path.empty() ? out : file;
            for (const auto& which : courses) {
                const auto result = sample_for_annotation(conversations, n, seed, [&](const Conversation& c) {
                    if (!which.empty() && c.course_id != which) return false;
                    if (!developers && c.user_kind == UserKind::developer) return false;
                    return !with_follow_up || emitted_follow_up(c);
                });
                if (result.shortfall) {
                    err << "warning: shortfall course=" << (which.empty() ? "all" : which)
                        << " eligible=" << result.eligible << " requested=" << n << '\n';
                }
                for (const auto& id : result.ids) dst << id << '\n';
            }
            return exit_code::ok;
        }

        if (cli.got_subcommand(annotate)) {
            const auto imported = import_annotations_csv_file(in_path);
            const auto tables = annotation_tables_to_json(aggregate_annotations(imported.accepted));
            if (out_path.empty()) out << tables << '\n';
            else open_out(out_path) << tables << '\n';
            for (const auto& r : imported.rejected) err << "rejected: " << r << '\n';
            if (!imported.rejected.empty()) {
                err << "error: code=validation message=\"" << imported.rejected.size()
                    << " annotation rows rejected\"\n";
                return exit_code::validation;
            }
            return exit_code::ok;
        }

        if (cli.got_subcommand(exp)) {
            auto app = build_app(app_config());
            app.service->course_config(course);
            ExportFilter filter;
            filter.from = parse_optional_time(from_text, "--from");
            filter.to = parse_optional_time(to_text, "--to");
            filter.include_developers = developers;
            if (out_path.empty()) {
                app.service->export_conversations(course, filter, out);
            } else {
                auto file = open_out(out_path);
                app.service->export_conversations(course, filter, file);
            }
            return exit_code::ok;
        }
    } catch (const Error& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '"', '\'');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "error: code=" << to_string(e.code()) << " message=\"" << msg << "\"\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '"', '\'');
        err << "error: code=internal message=\"" << msg << "\"\n";
        return exit_code::internal;
    }
    return exit_code::usage;
}

} // namespace courseassist
