#pragma once

#include "migmate/config.hpp"
#include "migmate/error.hpp"
#include "migmate/session.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace httplib {
class Server;
}

namespace migmate {

struct ServiceOptions {
    std::string host = "127.0.0.1";
    /// 0 picks a free port.
    int port = 8765;
    /// Layers applied to sessions started through POST /api/sessions; request options act as flags on top.
    config::Layer file_layer;
    config::Layer env_layer;
    config::Layer flag_layer;
};

/// HTTP/JSON API over the sessions of one workspace. Reads are answered from
/// the session directory; mutations on one session are serialized.
class ReviewService {
public:
    ReviewService(std::filesystem::path workspace, std::optional<std::filesystem::path> workdir,
                  ServiceOptions options);
    ~ReviewService();

    ReviewService(const ReviewService&) = delete;
    ReviewService& operator=(const ReviewService&) = delete;

    /// Throws PortInUse. Returns the bound port.
    int bind();
    /// Serves until stop(); requires bind().
    void serve();
    /// bind() + serve() on a background thread.
    int start();
    void stop();
    /// Waits for pipelines launched through the API.
    void join_pipelines();

    int port() const { return port_; }
    std::string url() const;

    const SessionStore& store() const { return store_; }

private:
    void routes();
    std::mutex& session_mutex(const std::string& id);

    std::filesystem::path workspace_;
    SessionStore store_;
    ServiceOptions options_;
    std::unique_ptr<httplib::Server> server_;
    int port_ = 0;
    std::thread listener_;

    std::mutex mutex_;
    std::map<std::string, std::unique_ptr<std::mutex>> session_mutexes_;
    std::mutex launch_mutex_;
    std::vector<std::thread> pipelines_;
};

/// HTTP status for an engine error.
int http_status_for(ErrorCode code);

/// Session summary shared by the API and the CLI.
nlohmann::json session_view(const SessionStore& store, const MigrationSession& session);
/// Pre/post test results with per-case anchors.
nlohmann::json tests_view(const SessionStore& store, const MigrationSession& session);

} // namespace migmate
