#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "toolrl/orchestrator.hpp"
#include "toolrl/retail_store.hpp"
#include "toolrl/simulators.hpp"
#include "toolrl/toolkit.hpp"
#include "toolrl/trajectory.hpp"

// forward declarations keep httplib out of this header
namespace httplib {
class Server;
class Client;
}  // namespace httplib

namespace toolrl::service {

enum class WireCode { not_found, bad_request, tool_error, limit_exceeded, transport };

std::string to_string(WireCode code);
int http_status(WireCode code);

/// Error surfaced over the wire; every response carries the
/// machine-readable code plus a message.
class WireError : public std::runtime_error {
 public:
  WireError(WireCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  WireCode code() const { return code_; }

 private:
  WireCode code_;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  int max_turns = 30;
  int session_idle_timeout_sec = 3600;
  std::string trajectory_log_path;  // optional append-only record log
};

using UserFactory = std::function<std::unique_ptr<sim::UserSimulator>(const traj::TaskSpec&)>;

/// Session-scoped episode and tool endpoints plus trajectory persistence.
/// Sessions never share mutable state; requests to one session are
/// serialized by a per-session lock.
class SandboxService {
 public:
  SandboxService(std::map<std::string, retail::EntityStore> seeds, tools::ToolRegistry registry,
                 std::map<std::string, traj::TaskSpec> tasks, UserFactory user_factory,
                 ServiceConfig config = {});
  ~SandboxService();

  // Core API; HTTP handlers delegate here (wire/in-process equivalence).
  std::string create_episode(const std::string& task_id);
  nlohmann::json list_tools_descriptor() const;
  tools::ToolResult invoke_tool(const std::string& session_id, const std::string& name,
                                const nlohmann::json& arguments);
  std::string user_step(const std::string& session_id, const std::string& agent_message);
  retail::StateHash session_hash(const std::string& session_id);
  std::string persist(const traj::Trajectory& trajectory);
  traj::Trajectory fetch(const std::string& record_id) const;

  void mount(httplib::Server& server);

  /// Blocks serving HTTP until stop() is called. Returns false when the
  /// port cannot be bound.
  bool listen();
  void stop();
  const ServiceConfig& config() const { return config_; }

 private:
  struct Session {
    std::string session_id;
    std::string task_id;
    retail::EntityStore store;
    std::unique_ptr<sim::UserSimulator> user;
    std::vector<sim::Exchange> user_history;
    int step_counter = 0;
    std::chrono::steady_clock::time_point last_used;
    std::mutex lock;
  };

  std::shared_ptr<Session> checkout(const std::string& session_id);
  void sweep_expired();

  std::map<std::string, retail::EntityStore> seeds_;
  tools::ToolRegistry registry_;
  std::map<std::string, traj::TaskSpec> tasks_;
  UserFactory user_factory_;
  ServiceConfig config_;

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_session_ = 0;

  mutable std::mutex log_mutex_;
  std::vector<std::string> records_;

  std::unique_ptr<httplib::Server> server_;
};

/// Client-side episode session speaking the service's wire protocol.
/// HTTP failures surface as sim::TransportError so episodes abort with a
/// distinguishable status.
class HttpSession final : public orch::EnvironmentSession {
 public:
  /// Creates an episode for `task_id` on the service at base_url.
  HttpSession(const std::string& base_url, const std::string& task_id, int timeout_sec = 30);
  ~HttpSession() override;

  std::vector<tools::ToolSpec> list_tools() override;
  tools::ToolResult execute_tool(const tools::ToolCall& call) override;
  std::string user_step(const std::string& agent_message) override;

  const std::string& session_id() const { return session_id_; }
  retail::StateHash state_hash();

 private:
  nlohmann::json request(const std::string& method, const std::string& path,
                         const std::optional<nlohmann::json>& body);

  std::unique_ptr<httplib::Client> client_;
  std::string session_id_;
};

}  // namespace toolrl::service
