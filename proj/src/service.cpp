#include "toolrl/service.hpp"

#include <fstream>

#include <httplib.h>

namespace toolrl::service {

using nlohmann::json;

std::string to_string(WireCode code) {
  switch (code) {
    case WireCode::not_found: return "not_found";
    case WireCode::bad_request: return "bad_request";
    case WireCode::tool_error: return "tool_error";
    case WireCode::limit_exceeded: return "limit_exceeded";
    case WireCode::transport: return "transport";
  }
  return "transport";
}

int http_status(WireCode code) {
  switch (code) {
    case WireCode::not_found: return 404;
    case WireCode::bad_request: return 400;
    case WireCode::tool_error: return 422;
    case WireCode::limit_exceeded: return 429;
    case WireCode::transport: return 502;
  }
  return 500;
}

SandboxService::SandboxService(std::map<std::string, retail::EntityStore> seeds,
                               tools::ToolRegistry registry,
                               std::map<std::string, traj::TaskSpec> tasks,
                               UserFactory user_factory, ServiceConfig config)
    : seeds_(std::move(seeds)),
      registry_(std::move(registry)),
      tasks_(std::move(tasks)),
      user_factory_(std::move(user_factory)),
      config_(std::move(config)) {}

SandboxService::~SandboxService() { stop(); }

void SandboxService::sweep_expired() {
  // caller holds mutex_
  const auto now = std::chrono::steady_clock::now();
  const auto timeout = std::chrono::seconds(config_.session_idle_timeout_sec);
  for (auto it = sessions_.begin(); it != sessions_.end();)
    it = now - it->second->last_used > timeout ? sessions_.erase(it) : std::next(it);
}

std::string SandboxService::create_episode(const std::string& task_id) {
  auto task_it = tasks_.find(task_id);
  if (task_it == tasks_.end()) throw WireError(WireCode::not_found, "no task '" + task_id + "'");
  const traj::TaskSpec& task = task_it->second;
  auto seed_it = seeds_.find(task.seed_ref);
  if (seed_it == seeds_.end())
    throw WireError(WireCode::not_found, "no seed '" + task.seed_ref + "'");

  auto session = std::make_shared<Session>();
  session->task_id = task_id;
  session->store = seed_it->second.snapshot();
  session->user = user_factory_(task);
  session->last_used = std::chrono::steady_clock::now();

  std::lock_guard<std::mutex> guard(mutex_);
  sweep_expired();
  session->session_id = "s" + std::to_string(++next_session_);
  sessions_.emplace(session->session_id, session);
  return session->session_id;
}

std::shared_ptr<SandboxService::Session> SandboxService::checkout(const std::string& session_id) {
  std::lock_guard<std::mutex> guard(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end())
    throw WireError(WireCode::not_found, "no session '" + session_id + "'");
  const auto now = std::chrono::steady_clock::now();
  if (now - it->second->last_used > std::chrono::seconds(config_.session_idle_timeout_sec)) {
    sessions_.erase(it);
    throw WireError(WireCode::not_found, "session '" + session_id + "' expired");
  }
  it->second->last_used = now;
  return it->second;
}

json SandboxService::list_tools_descriptor() const {
  json tools_json = json::array();
  for (const auto& spec : registry_.list_tools()) tools_json.push_back(spec.descriptor());
  return {{"tools", tools_json}};
}

tools::ToolResult SandboxService::invoke_tool(const std::string& session_id,
                                              const std::string& name, const json& arguments) {
  auto session = checkout(session_id);
  std::lock_guard<std::mutex> guard(session->lock);
  tools::ToolCall call;
  call.name = name;
  call.arguments = arguments;
  return registry_.execute(session->store, call);
}

std::string SandboxService::user_step(const std::string& session_id,
                                      const std::string& agent_message) {
  auto session = checkout(session_id);
  std::lock_guard<std::mutex> guard(session->lock);
  // The opening request (empty agent message) does not consume a step, so
  // the wire limit matches the episode loop's turn bound exactly.
  if (!agent_message.empty()) {
    if (session->step_counter >= config_.max_turns)
      throw WireError(WireCode::limit_exceeded,
                      "session reached the maximum of " + std::to_string(config_.max_turns) +
                          " interaction steps");
    ++session->step_counter;
    session->user_history.push_back({"assistant", agent_message});
  }
  std::string reply = session->user->next_message(session->user_history);
  if (reply != sim::kStopToken) session->user_history.push_back({"user", reply});
  return reply;
}

retail::StateHash SandboxService::session_hash(const std::string& session_id) {
  auto session = checkout(session_id);
  std::lock_guard<std::mutex> guard(session->lock);
  return session->store.state_hash();
}

std::string SandboxService::persist(const traj::Trajectory& trajectory) {
  const std::string line = traj::serialize(trajectory);
  std::lock_guard<std::mutex> guard(log_mutex_);
  records_.push_back(line);
  if (!config_.trajectory_log_path.empty()) {
    std::ofstream out(config_.trajectory_log_path, std::ios::app);
    out << line << "\n";
  }
  return "r" + std::to_string(records_.size());
}

traj::Trajectory SandboxService::fetch(const std::string& record_id) const {
  if (record_id.empty() || record_id.front() != 'r')
    throw WireError(WireCode::not_found, "no record '" + record_id + "'");
  std::size_t index = 0;
  try {
    index = std::stoull(record_id.substr(1));
  } catch (const std::exception&) {
    throw WireError(WireCode::not_found, "no record '" + record_id + "'");
  }
  std::lock_guard<std::mutex> guard(log_mutex_);
  if (index == 0 || index > records_.size())
    throw WireError(WireCode::not_found, "no record '" + record_id + "'");
  return traj::deserialize(records_[index - 1], index);
}

namespace {

void write_error(httplib::Response& res, WireCode code, const std::string& message) {
  res.status = http_status(code);
  res.set_content(json({{"code", to_string(code)}, {"message", message}}).dump(),
                  "application/json");
}

void write_json(httplib::Response& res, const json& body) {
  res.status = 200;
  res.set_content(body.dump(), "application/json");
}

/// Runs a handler, translating thrown errors to wire responses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const WireError& e) {
    write_error(res, e.code(), e.what());
  } catch (const json::exception& e) {
    write_error(res, WireCode::bad_request, e.what());
  } catch (const std::exception& e) {
    write_error(res, WireCode::transport, e.what());
  }
}

}  // namespace

void SandboxService::mount(httplib::Server& server) {
  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    write_json(res, {{"status", "ok"}});
  });

  server.Get("/tools", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { write_json(res, list_tools_descriptor()); });
  });

  server.Post("/episodes", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      if (!body.contains("task_id") || !body["task_id"].is_string())
        throw WireError(WireCode::bad_request, "task_id: expected a string");
      write_json(res, {{"session_id", create_episode(body["task_id"].get<std::string>())}});
    });
  });

  server.Post(R"(/sessions/([^/]+)/tools/([^/]+))",
              [this](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const json arguments = req.body.empty() ? json::object() : json::parse(req.body);
                  const tools::ToolResult result =
                      invoke_tool(req.matches[1].str(), req.matches[2].str(), arguments);
                  // Failed calls still embed the full ToolResult so the
                  // episode can feed them back to the agent; the HTTP
                  // status carries the wire code.
                  json body = tools::tool_result_to_json(result);
                  if (result.ok) {
                    write_json(res, body);
                  } else {
                    WireCode code = WireCode::tool_error;
                    if (result.reason_code == "unknown_tool") code = WireCode::not_found;
                    if (result.reason_code == "schema_violation") code = WireCode::bad_request;
                    body["code"] = to_string(code);
                    body["message"] = result.error;
                    res.status = http_status(code);
                    res.set_content(body.dump(), "application/json");
                  }
                });
              });

  server.Post(R"(/sessions/([^/]+)/user)",
              [this](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const json body = req.body.empty() ? json::object() : json::parse(req.body);
                  const std::string reply =
                      user_step(req.matches[1].str(), body.value("agent_message", ""));
                  write_json(res, {{"reply", reply}});
                });
              });

  server.Get(R"(/sessions/([^/]+)/hash)",
             [this](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 write_json(res, {{"digest", session_hash(req.matches[1].str()).hex()}});
               });
             });

  server.Post("/trajectories", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      traj::Trajectory trajectory;
      try {
        trajectory = traj::trajectory_from_json(json::parse(req.body));
      } catch (const std::exception& e) {
        throw WireError(WireCode::bad_request, e.what());
      }
      write_json(res, {{"record_id", persist(trajectory)}});
    });
  });

  server.Get(R"(/trajectories/([^/]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 write_json(res, traj::trajectory_to_json(fetch(req.matches[1].str())));
               });
             });
}

bool SandboxService::listen() {
  server_ = std::make_unique<httplib::Server>();
  mount(*server_);
  return server_->listen(config_.host, config_.port);
}

void SandboxService::stop() {
  if (server_) server_->stop();
}

HttpSession::HttpSession(const std::string& base_url, const std::string& task_id,
                         int timeout_sec) {
  client_ = std::make_unique<httplib::Client>(base_url);
  client_->set_connection_timeout(timeout_sec);
  client_->set_read_timeout(timeout_sec);
  const json reply = request("POST", "/episodes", json{{"task_id", task_id}});
  session_id_ = reply.at("session_id").get<std::string>();
}

HttpSession::~HttpSession() = default;

json HttpSession::request(const std::string& method, const std::string& path,
                          const std::optional<json>& body) {
  httplib::Result res = method == "GET"
                            ? client_->Get(path)
                            : client_->Post(path, body ? body->dump() : std::string("{}"),
                                            "application/json");
  if (!res)
    throw sim::TransportError("sandbox service unreachable: " + httplib::to_string(res.error()));
  json parsed;
  try {
    parsed = json::parse(res->body);
  } catch (const json::exception&) {
    throw sim::TransportError("sandbox service returned a non-JSON body (HTTP " +
                              std::to_string(res->status) + ")");
  }
  if (res->status != 200) {
    const std::string code = parsed.value("code", "transport");
    const std::string message = parsed.value("message", "request failed");
    // Tool-level errors come back embedded in ToolResult, so any non-200
    // here is a wire/protocol failure for the episode.
    throw sim::TransportError("sandbox service error " + code + ": " + message);
  }
  return parsed;
}

std::vector<tools::ToolSpec> HttpSession::list_tools() {
  const json reply = request("GET", "/tools", std::nullopt);
  std::vector<tools::ToolSpec> out;
  for (const auto& d : reply.at("tools")) {
    tools::ToolSpec spec;
    spec.name = d.at("name").get<std::string>();
    spec.kind = d.at("kind").get<std::string>() == "write" ? tools::ToolKind::write
                                                           : tools::ToolKind::read;
    spec.description = d.value("description", "");
    for (const auto& p : d.value("parameters", json::array())) {
      tools::ParamSpec param;
      param.name = p.at("name").get<std::string>();
      const std::string type = p.value("type", "string");
      if (type == "list[string]")
        param.type = tools::ArgType::string_list;
      else if (type == "decimal")
        param.type = tools::ArgType::decimal;
      else if (type == "object")
        param.type = tools::ArgType::object;
      param.required = p.value("required", true);
      spec.params.push_back(std::move(param));
    }
    out.push_back(std::move(spec));
  }
  return out;
}

tools::ToolResult HttpSession::execute_tool(const tools::ToolCall& call) {
  // Tool failures (unknown tool, schema violation, domain error) arrive as
  // non-200 responses that still embed the ToolResult; they are episode
  // content, not transport failures.
  httplib::Result res = client_->Post("/sessions/" + session_id_ + "/tools/" + call.name,
                                      call.arguments.dump(), "application/json");
  if (!res)
    throw sim::TransportError("sandbox service unreachable: " + httplib::to_string(res.error()));
  json parsed;
  try {
    parsed = json::parse(res->body);
  } catch (const json::exception&) {
    throw sim::TransportError("sandbox service returned a non-JSON body (HTTP " +
                              std::to_string(res->status) + ")");
  }
  if (!parsed.contains("status")) {
    const std::string message = parsed.value("message", "request failed");
    throw sim::TransportError("sandbox service error " + parsed.value("code", "transport") + ": " +
                              message);
  }
  return tools::tool_result_from_json(parsed);
}

std::string HttpSession::user_step(const std::string& agent_message) {
  const json reply = request("POST", "/sessions/" + session_id_ + "/user",
                             json{{"agent_message", agent_message}});
  return reply.at("reply").get<std::string>();
}

retail::StateHash HttpSession::state_hash() {
  const json reply = request("GET", "/sessions/" + session_id_ + "/hash", std::nullopt);
  retail::StateHash hash;
  hash.digest = std::stoull(reply.at("digest").get<std::string>(), nullptr, 16);
  return hash;
}

}  // namespace toolrl::service
