#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "toolrl/rewards.hpp"
#include "toolrl/tokenizer.hpp"
#include "toolrl/toolkit.hpp"

namespace toolrl::traj {

enum class Role { agent, environment };
enum class Modality { text, speech_placeholder };

std::string to_string(Modality modality);
Modality modality_from_string(const std::string& s);

/// One contiguous block of the interleaved token stream.
struct Segment {
  Role role = Role::environment;
  Modality modality = Modality::text;
  std::string text;
  std::string audio_ref;  // opaque reference for speech placeholders

  friend bool operator==(const Segment& a, const Segment& b) {
    return a.role == b.role && a.modality == b.modality && a.text == b.text &&
           a.audio_ref == b.audio_ref;
  }
};

struct UserMessage {
  std::string text;
  friend bool operator==(const UserMessage& a, const UserMessage& b) { return a.text == b.text; }
};

struct Stop {
  friend bool operator==(Stop, Stop) { return true; }
};

using Action = std::variant<tools::ToolCall, UserMessage, Stop>;

/// Execution outcome recorded for tool-call turns.
struct ToolOutcome {
  bool ok = false;
  bool mutated = false;
  std::string reason_code;

  friend bool operator==(const ToolOutcome& a, const ToolOutcome& b) {
    return a.ok == b.ok && a.mutated == b.mutated && a.reason_code == b.reason_code;
  }
};

/// One agent reasoning+action plus the environment's feedback.
/// `agent_text` is the raw sampled output the thought/action were parsed
/// from; it is the agent-side token segment.
struct Turn {
  int index = 0;  // 1-based, contiguous
  std::string thought;
  std::string agent_text;
  Action action = Stop{};
  std::optional<ToolOutcome> tool_outcome;
  Segment feedback;  // role == environment; empty for Stop actions

  friend bool operator==(const Turn& a, const Turn& b) {
    return a.index == b.index && a.thought == b.thought && a.agent_text == b.agent_text &&
           a.action == b.action && a.tool_outcome == b.tool_outcome && a.feedback == b.feedback;
  }
};

enum class DomainTag { retail_text, retail_speech, math };

std::string to_string(DomainTag tag);
DomainTag domain_tag_from_string(const std::string& s);

/// The unit of training/evaluation: instruction for the simulated user
/// plus the ground truth the verifier checks against.
struct TaskSpec {
  std::string task_id;
  std::string user_instruction;
  std::vector<tools::ToolCall> ground_truth_calls;  // write tools only (retail)
  std::string seed_ref;
  DomainTag domain_tag = DomainTag::retail_text;
  std::optional<std::int64_t> expected_answer;  // math tasks
  std::vector<std::string> expected_outputs;    // optional output-check strings
};

TaskSpec task_from_json(const nlohmann::json& j);
nlohmann::json task_to_json(const TaskSpec& task);

using LossMask = std::vector<std::uint8_t>;

/// Terminal verification verdict embedded in the record.
struct VerifyVerdict {
  int reward = 0;
  std::string mismatch;  // match | wrong_args | unnecessary_write | missing_write
  nlohmann::json details;

  friend bool operator==(const VerifyVerdict& a, const VerifyVerdict& b) {
    return a.reward == b.reward && a.mismatch == b.mismatch && a.details == b.details;
  }
};

struct Trajectory {
  std::string task_id;
  std::string seed_ref;
  std::vector<Turn> turns;
  std::optional<int> terminal_reward;
  std::optional<VerifyVerdict> verify_report;
  bool transport_error = false;
  std::optional<std::vector<int>> turn_scores;
  std::vector<std::string> score_warnings;
  std::optional<reward::RewardBreakdown> breakdown;
  /// Trainer-supplied per-token arrays ("logprobs", "values", "entropies",
  /// ...) aligned to the default-tokenizer token stream.
  std::map<std::string, std::vector<double>> token_fields;

  friend bool operator==(const Trajectory& a, const Trajectory& b) {
    return a.task_id == b.task_id && a.seed_ref == b.seed_ref && a.turns == b.turns &&
           a.terminal_reward == b.terminal_reward && a.verify_report == b.verify_report &&
           a.transport_error == b.transport_error && a.turn_scores == b.turn_scores &&
           a.score_warnings == b.score_warnings && a.breakdown == b.breakdown &&
           a.token_fields == b.token_fields;
  }
};

/// Segments in stream order x1, e1, x2, e2, ... (the trailing environment
/// segment is omitted for Stop actions, which carry no feedback).
std::vector<Segment> segments(const Trajectory& trajectory);

/// Raised by parse_react and deserialize; carries the offending span.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t begin, std::size_t end, std::string span)
      : std::runtime_error(what), begin_(begin), end_(end), span_(std::move(span)) {}
  std::size_t begin() const { return begin_; }
  std::size_t end() const { return end_; }
  const std::string& span() const { return span_; }

 private:
  std::size_t begin_ = 0;
  std::size_t end_ = 0;
  std::string span_;
};

struct ParsedAction {
  std::string thought;
  Action action;
};

/// Splits one agent output into its reasoning block and action.
///
/// Format: an optional leading `<think>...</think>` block holds the
/// thought. A `<tool_call>{"name": ..., "arguments": {...}}</tool_call>`
/// block yields a ToolCall; otherwise the remaining text addresses the
/// user. Empty remaining text means the agent stopped.
ParsedAction parse_react(const std::string& agent_text);

/// Token stream materialization: flat tokens, the agent mask, and the
/// index of each turn's final agent token.
struct TokenizedTrajectory {
  std::vector<std::string> token_stream;
  LossMask mask;
  std::vector<std::size_t> turn_last_agent;    // per turn; npos when the turn has no agent tokens
  std::vector<std::size_t> agent_tokens_per_turn;
  std::size_t agent_token_count = 0;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

TokenizedTrajectory tokenize_trajectory(const Trajectory& trajectory,
                                        const Tokenizer& tokenizer = default_tokenizer());

/// Mask bit 1 exactly on agent-role tokens.
LossMask build_loss_mask(const Trajectory& trajectory,
                         const Tokenizer& tokenizer = default_tokenizer());

struct TrajStats {
  int wait_count = 0;                   // standalone "wait" in agent thoughts
  std::size_t agent_tokens = 0;
  double avg_agent_tokens_per_turn = 0.0;
};

/// Throws std::invalid_argument on an empty trajectory (T >= 1 required).
TrajStats stats(const Trajectory& trajectory, const Tokenizer& tokenizer = default_tokenizer());

/// Case-insensitive standalone-word count ("wait" matches, "awaits" does
/// not; digits and underscores extend words).
int count_word_occurrences(const std::string& text, const std::string& word);

nlohmann::json trajectory_to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const nlohmann::json& j);

/// One JSON record per line; keys are stable and sorted, so equal
/// trajectories serialize to identical bytes.
std::string serialize(const Trajectory& trajectory);

/// Parses one record line. Errors mention the 1-based line number and the
/// byte offset where parsing failed.
Trajectory deserialize(const std::string& line, std::size_t line_number = 1);

std::vector<Trajectory> read_records(std::istream& in);
void write_records(std::ostream& out, const std::vector<Trajectory>& records);

}  // namespace toolrl::traj
