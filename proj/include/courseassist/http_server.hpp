#pragma once

#include "courseassist/analytics.hpp"
#include "courseassist/service.hpp"

#include <memory>
#include <string>

namespace courseassist {

/// Maps a library error code to the HTTP status the API returns for it.
int http_status_for(ErrorCode code);

struct HttpServerOptions {
    /// Defaults for GET /courses/{id}/analytics/{report} when the query
    /// string does not override them.
    ReportOptions report;
    std::size_t worker_threads = 8;
};

/// JSON API over CourseAssistService.
///
/// Identity comes from headers set by the authenticating front end:
/// X-User (account, required except for /shared/*), X-Role (student or
/// educator, default student), X-Developer (true marks a tester account).
class HttpServer {
public:
    explicit HttpServer(CourseAssistService& service, HttpServerOptions options = {});
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds without serving. Port 0 picks a free port. Returns the bound
    /// port, or throws io when the address is unavailable.
    int bind(const std::string& host, int port);
    /// Serves on the bound socket until stop(); blocks.
    void serve();
    /// bind() then serve() on a background thread.
    int start(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace courseassist
