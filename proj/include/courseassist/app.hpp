#pragma once

#include "courseassist/analytics.hpp"
#include "courseassist/service.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace courseassist {

/// Operator config file for `serve`, `ingest` and `export`. Relative paths
/// are resolved against the config file's directory.
///
///   {
///     "db": "courseassist.db",
///     "salt": "per-deployment secret",
///     "embedding": {"provider": "hash", "dimension": 64},
///     "llm": {"provider": "scripted", "script": "mock.json"},
///     "gateway": {"max_retries": 2, "initial_backoff_ms": 200, "deadline_ms": 60000, "max_concurrent": 8},
///     "courses": ["courses/intro.json"],
///     "host": "127.0.0.1", "port": 8080,
///     "report": {"semester_start": "2024-01-22", "tz_offset_minutes": -300}
///   }
///
/// HTTP providers take {"provider": "http", "endpoint", "model", "api_key_env", "timeout_ms"}.
struct AppConfig {
    std::filesystem::path db = "courseassist.db";
    std::string salt = "courseassist";

    std::string embedding_provider = "hash";
    std::size_t embedding_dimension = HashEmbedder::kDefaultDimension;
    HttpEndpointConfig embedding_endpoint;

    std::string llm_provider = "scripted";
    std::optional<std::filesystem::path> llm_script;
    HttpEndpointConfig llm_endpoint;
    GatewayOptions gateway;

    std::vector<std::filesystem::path> courses;
    std::string host = "127.0.0.1";
    int port = 8080;
    ReportOptions report;
};

AppConfig load_app_config(const std::filesystem::path& path);

/// The wired object graph behind one service instance.
struct App {
    std::shared_ptr<Storage> storage;
    std::shared_ptr<KnowledgeStore> knowledge;
    std::shared_ptr<LlmGateway> gateway;
    std::unique_ptr<CourseAssistService> service;
};

/// Opens storage, restores persisted state, and registers the configured courses.
App build_app(const AppConfig& config);

/// CLI entry point; argv[0] is the program name. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int usage = 2;
inline constexpr int malformed_input = 3;
inline constexpr int inconsistent_spec = 4;
inline constexpr int io = 5;
inline constexpr int bind_failed = 6;
inline constexpr int validation = 7;
inline constexpr int provider = 8;
inline constexpr int storage = 9;
} // namespace exit_code

int exit_code_for(ErrorCode code);

} // namespace courseassist
