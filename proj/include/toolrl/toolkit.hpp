#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "toolrl/retail_store.hpp"

namespace toolrl::tools {

enum class ToolKind { read, write };

std::string to_string(ToolKind kind);

enum class ArgType { string, string_list, decimal, object };

std::string to_string(ArgType type);

struct ParamSpec {
  std::string name;
  ArgType type = ArgType::string;
  bool required = true;
};

struct ToolSpec {
  std::string name;
  ToolKind kind = ToolKind::read;
  std::vector<ParamSpec> params;
  std::string description;
  std::vector<std::string> mutates;  // entity collections a write may touch

  /// Machine-readable descriptor published by the tool-listing endpoint.
  nlohmann::json descriptor() const;
};

struct ToolCall {
  std::string name;
  nlohmann::json arguments = nlohmann::json::object();

  friend bool operator==(const ToolCall& a, const ToolCall& b) {
    return a.name == b.name && a.arguments == b.arguments;
  }
};

ToolCall tool_call_from_json(const nlohmann::json& j);
nlohmann::json tool_call_to_json(const ToolCall& call);

struct ToolResult {
  bool ok = false;
  nlohmann::json payload;      // structured value on ok, absent otherwise
  std::string error;           // human-readable message on error
  std::string reason_code;     // machine-readable: unknown_tool, schema_violation, not_pending, ...
  bool mutated = false;

  static ToolResult success(nlohmann::json payload, bool mutated = false) {
    ToolResult r;
    r.ok = true;
    r.payload = std::move(payload);
    r.mutated = mutated;
    return r;
  }
  static ToolResult failure(std::string reason_code, std::string message) {
    ToolResult r;
    r.reason_code = std::move(reason_code);
    r.error = std::move(message);
    return r;
  }
};

nlohmann::json tool_result_to_json(const ToolResult& result);
ToolResult tool_result_from_json(const nlohmann::json& j);

/// Registry of tools over a retail store. Read tools are pure queries;
/// write tools run against a scratch copy of the store that is committed
/// only on success, so failed writes leave the state untouched.
class ToolRegistry {
 public:
  using Handler = std::function<ToolResult(retail::EntityStore&, const nlohmann::json&)>;

  void register_tool(ToolSpec spec, Handler handler);

  const ToolSpec* find(const std::string& name) const;
  bool is_write(const std::string& name) const;

  /// Stable (name-ordered) listing.
  std::vector<ToolSpec> list_tools() const;

  ToolResult execute(retail::EntityStore& store, const ToolCall& call) const;

 private:
  std::map<std::string, std::pair<ToolSpec, Handler>> tools_;
};

/// The retail tool roster: lookup and query tools plus the order-mutating
/// write operations (exchange, return, modify, cancel).
ToolRegistry make_retail_registry();

}  // namespace toolrl::tools
