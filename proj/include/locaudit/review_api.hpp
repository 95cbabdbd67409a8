#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "locaudit/audit_store.hpp"

namespace locaudit {

// HTTP front of the audit store:
//   GET  /api/tasks?language=&state=   GET  /api/tasks/{id}?language=
//   POST /api/claims                   POST /api/tasks/{id}/review
//   POST /api/tasks/{id}/meta          GET  /api/export?language=
//   GET  /api/stats
// Bodies are JSON; export is JSON Lines. Optionally serves static UI assets.
class ReviewServer {
public:
    explicit ReviewServer(AuditStore& store, std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~ReviewServer();

    ReviewServer(const ReviewServer&) = delete;
    ReviewServer& operator=(const ReviewServer&) = delete;

    // Returns the bound port; port 0 picks a free one. Throws Error if busy.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void listen();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace locaudit
