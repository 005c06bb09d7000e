#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "toolrl/trajectory.hpp"
#include "toolrl/verifier.hpp"

namespace toolrl::sim {

/// Reserved user reply that terminates an episode.
inline constexpr const char* kStopToken = "##STOP##";

/// One entry of the conversation as seen by a simulator or policy.
/// Roles: "system", "user", "assistant", "tool".
struct Exchange {
  std::string role;
  std::string text;

  friend bool operator==(const Exchange& a, const Exchange& b) {
    return a.role == b.role && a.text == b.text;
  }
};

/// The human side of the conversation. `history` holds the user-visible
/// exchange so far ("assistant" entries are the agent's user-directed
/// messages, "user" entries this simulator's own replies).
class UserSimulator {
 public:
  virtual ~UserSimulator() = default;
  virtual std::string next_message(const std::vector<Exchange>& history) = 0;
};

struct ScriptEntry {
  std::string trigger;  // case-insensitive substring over the last agent message
  std::string reply;
};

/// Deterministic test double: replays a script of trigger/reply pairs.
/// Each entry fires at most once; consumption is replayed from the
/// history, so identical histories always produce identical replies.
/// When every entry has fired the user replies ##STOP##.
class ScriptedUser final : public UserSimulator {
 public:
  ScriptedUser(std::string instruction, std::vector<ScriptEntry> script, std::string fallback);

  std::string next_message(const std::vector<Exchange>& history) override;

  static ScriptedUser from_json(const nlohmann::json& j);

  const std::string& instruction() const { return instruction_; }

 private:
  std::optional<std::size_t> first_unconsumed_match(const std::string& agent_message,
                                                    const std::vector<bool>& consumed) const;

  std::string instruction_;
  std::vector<ScriptEntry> script_;
  std::string fallback_;
};

/// Transport-level failure (timeouts, HTTP errors after retries). Distinct
/// from task failure; episodes surface it as a distinguishable status.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChatClientConfig {
  std::string endpoint;       // e.g. http://127.0.0.1:9000/v1/chat/completions
  std::string model;
  double temperature = 0.7;
  std::string auth_env;       // name of the env var holding the API secret
  int timeout_sec = 60;
  int max_retries = 2;        // additional attempts after the first failure
  double rate_limit_per_sec = 0.0;  // token bucket; 0 disables
};

ChatClientConfig chat_config_from_json(const nlohmann::json& j);

/// Minimal chat-completions client. The secret is read from the
/// environment at request time and never stored or serialized. Safe for
/// concurrent use; copies share one rate-limit bucket.
class ChatClient {
 public:
  explicit ChatClient(ChatClientConfig config);

  const ChatClientConfig& config() const { return config_; }

  /// Sends a messages array, returns the first choice's content.
  /// Throws TransportError after exhausting retries.
  std::string complete(const nlohmann::json& messages) const;

 private:
  struct Bucket;
  void acquire_token() const;

  ChatClientConfig config_;
  std::shared_ptr<Bucket> bucket_;
};

/// Strips a leading <think> block and returns the trimmed remainder.
std::string strip_reasoning(const std::string& completion);

/// Chat-backed user simulator: role-plays the customer from the task
/// instruction, thinking before each reply. Propagates ##STOP## verbatim.
std::string llm_user_next(const ChatClient& client, const std::string& instruction,
                          const std::vector<Exchange>& history);

class LlmUser final : public UserSimulator {
 public:
  LlmUser(ChatClient client, std::string instruction)
      : client_(std::move(client)), instruction_(std::move(instruction)) {}

  std::string next_message(const std::vector<Exchange>& history) override {
    return llm_user_next(client_, instruction_, history);
  }

 private:
  ChatClient client_;
  std::string instruction_;
};

/// Judge output for one trajectory: a score in {-1, 0, 1} per turn, with
/// at most one -1 after validation.
struct TurnScores {
  std::vector<int> scores;
  std::vector<std::string> warnings;
};

/// Judge output that cannot be used even after repair (non-JSON, missing
/// keys, out-of-range values). Callers may retry once before falling back
/// to terminal-only scoring.
class AdjudicationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses and validates raw judge output: a single JSON object with keys
/// score_0..score_{T-1}. Duplicate -1 values are repaired by keeping the
/// earliest and clamping later ones to 0, with a warning per repair.
TurnScores parse_judge_scores(const std::string& raw, int turn_count);

/// Built-in judge prompt with {{POLICY}}, {{TASK_INSTRUCTION}},
/// {{GROUND_TRUTH}} and {{CONVERSATION}} placeholders.
const std::string& default_judge_prompt();

/// Fills the template; conversation turns are labeled [Turn N] from 0.
std::string render_judge_prompt(const std::string& prompt_template, const std::string& policy_doc,
                                const std::string& instruction, const verify::GroundTruth& truth,
                                const traj::Trajectory& trajectory);

/// One judge round trip. Throws AdjudicationError on unusable output and
/// TransportError on endpoint failure.
TurnScores adjudicate(const ChatClient& client, const std::string& prompt_template,
                      const traj::Trajectory& trajectory, const verify::GroundTruth& truth,
                      const std::string& policy_doc, const std::string& instruction = "");

/// adjudicate with the standard retry budget: one retry on unusable
/// output, then nullopt so the caller can fall back to terminal-only
/// scoring. Transport errors propagate.
std::optional<TurnScores> adjudicate_with_retry(const ChatClient& client,
                                                const std::string& prompt_template,
                                                const traj::Trajectory& trajectory,
                                                const verify::GroundTruth& truth,
                                                const std::string& policy_doc,
                                                const std::string& instruction = "");

/// A policy completion plus optional per-token data aligned to the
/// default tokenization of `text`.
struct Completion {
  std::string text;
  std::vector<double> logprobs;
  std::vector<double> entropies;
};

/// The trained model lives outside this artifact; the orchestrator only
/// needs completions over the interleaved history.
class PolicyClient {
 public:
  virtual ~PolicyClient() = default;
  virtual Completion complete(const std::vector<Exchange>& history) = 0;
};

/// Fixed sequence of agent outputs; records every history it is queried
/// with (tests assert on injected context). When the sequence is
/// exhausted it emits a bare reasoning block, which parses as Stop.
class ScriptedPolicy final : public PolicyClient {
 public:
  explicit ScriptedPolicy(std::vector<std::string> outputs) : outputs_(std::move(outputs)) {}

  Completion complete(const std::vector<Exchange>& history) override {
    seen_.push_back(history);
    if (next_ >= outputs_.size()) return {"<think>Nothing left to do.</think>", {}, {}};
    return {outputs_[next_++], {}, {}};
  }

  const std::vector<std::vector<Exchange>>& seen() const { return seen_; }

 private:
  std::vector<std::string> outputs_;
  std::size_t next_ = 0;
  std::vector<std::vector<Exchange>> seen_;
};

/// Chat-backed policy; the whole episode history is forwarded as-is.
class ChatPolicy final : public PolicyClient {
 public:
  ChatPolicy(ChatClient client, std::string system_prompt)
      : client_(std::move(client)), system_prompt_(std::move(system_prompt)) {}

  Completion complete(const std::vector<Exchange>& history) override;

 private:
  ChatClient client_;
  std::string system_prompt_;
};

}  // namespace toolrl::sim
