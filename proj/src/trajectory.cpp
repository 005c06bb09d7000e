#include "toolrl/trajectory.hpp"

#include <cctype>
#include <istream>
#include <ostream>

namespace toolrl::traj {

using nlohmann::json;

std::string to_string(Modality modality) {
  return modality == Modality::text ? "text" : "speech_placeholder";
}

Modality modality_from_string(const std::string& s) {
  if (s == "text") return Modality::text;
  if (s == "speech_placeholder") return Modality::speech_placeholder;
  throw std::invalid_argument("unknown modality: " + s);
}

std::string to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::retail_text: return "retail_text";
    case DomainTag::retail_speech: return "retail_speech";
    case DomainTag::math: return "math";
  }
  return "retail_text";
}

DomainTag domain_tag_from_string(const std::string& s) {
  if (s == "retail_text") return DomainTag::retail_text;
  if (s == "retail_speech") return DomainTag::retail_speech;
  if (s == "math") return DomainTag::math;
  throw std::invalid_argument("unknown domain tag: " + s);
}

TaskSpec task_from_json(const json& j) {
  TaskSpec task;
  task.task_id = j.at("task_id").get<std::string>();
  task.user_instruction = j.value("user_instruction", "");
  for (const auto& call : j.value("ground_truth_calls", json::array()))
    task.ground_truth_calls.push_back(tools::tool_call_from_json(call));
  task.seed_ref = j.value("seed_ref", "");
  task.domain_tag = domain_tag_from_string(j.value("domain_tag", "retail_text"));
  if (j.contains("expected_answer") && !j["expected_answer"].is_null())
    task.expected_answer = j["expected_answer"].get<std::int64_t>();
  for (const auto& s : j.value("expected_outputs", json::array()))
    task.expected_outputs.push_back(s.get<std::string>());
  return task;
}

json task_to_json(const TaskSpec& task) {
  json calls = json::array();
  for (const auto& call : task.ground_truth_calls) calls.push_back(tools::tool_call_to_json(call));
  json j = {{"task_id", task.task_id},
            {"user_instruction", task.user_instruction},
            {"ground_truth_calls", calls},
            {"seed_ref", task.seed_ref},
            {"domain_tag", to_string(task.domain_tag)}};
  if (task.expected_answer) j["expected_answer"] = *task.expected_answer;
  if (!task.expected_outputs.empty()) j["expected_outputs"] = task.expected_outputs;
  return j;
}

std::vector<Segment> segments(const Trajectory& trajectory) {
  std::vector<Segment> out;
  for (const auto& turn : trajectory.turns) {
    Segment agent;
    agent.role = Role::agent;
    agent.modality = Modality::text;
    agent.text = turn.agent_text;
    out.push_back(std::move(agent));
    if (!std::holds_alternative<Stop>(turn.action)) out.push_back(turn.feedback);
  }
  return out;
}

namespace {

constexpr const char* kThinkOpen = "<think>";
constexpr const char* kThinkClose = "</think>";
constexpr const char* kToolOpen = "<tool_call>";
constexpr const char* kToolClose = "</tool_call>";

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

ParsedAction parse_react(const std::string& agent_text) {
  if (trim(agent_text).empty())
    throw ParseError("empty agent output", 0, agent_text.size(), agent_text);

  std::string thought;
  std::string rest = agent_text;
  std::size_t rest_offset = 0;

  const std::size_t think_at = agent_text.find(kThinkOpen);
  if (think_at != std::string::npos) {
    const std::size_t close_at = agent_text.find(kThinkClose, think_at);
    if (close_at == std::string::npos)
      throw ParseError("unterminated <think> block", think_at, agent_text.size(),
                       agent_text.substr(think_at));
    thought = trim(agent_text.substr(think_at + std::string(kThinkOpen).size(),
                                     close_at - think_at - std::string(kThinkOpen).size()));
    rest_offset = close_at + std::string(kThinkClose).size();
    rest = agent_text.substr(rest_offset);
  }

  const std::size_t tool_at = rest.find(kToolOpen);
  if (tool_at != std::string::npos) {
    const std::size_t close_at = rest.find(kToolClose, tool_at);
    if (close_at == std::string::npos)
      throw ParseError("unterminated <tool_call> block", rest_offset + tool_at,
                       agent_text.size(), rest.substr(tool_at));
    if (rest.find(kToolOpen, close_at) != std::string::npos)
      throw ParseError("multiple <tool_call> blocks", rest_offset + rest.find(kToolOpen, close_at),
                       agent_text.size(), rest.substr(rest.find(kToolOpen, close_at)));
    const std::size_t body_at = tool_at + std::string(kToolOpen).size();
    const std::string body = rest.substr(body_at, close_at - body_at);
    json parsed;
    try {
      parsed = json::parse(body);
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed tool call JSON: ") + e.what(),
                       rest_offset + body_at, rest_offset + close_at, body);
    }
    if (!parsed.is_object() || !parsed.contains("name") || !parsed["name"].is_string())
      throw ParseError("tool call is missing a string 'name'", rest_offset + body_at,
                       rest_offset + close_at, body);
    if (parsed.contains("arguments") && !parsed["arguments"].is_object())
      throw ParseError("tool call 'arguments' must be an object", rest_offset + body_at,
                       rest_offset + close_at, body);
    tools::ToolCall call;
    call.name = parsed["name"].get<std::string>();
    call.arguments = parsed.value("arguments", json::object());
    return {thought, call};
  }

  const std::string message = trim(rest);
  if (message.empty()) return {thought, Stop{}};
  return {thought, UserMessage{message}};
}

TokenizedTrajectory tokenize_trajectory(const Trajectory& trajectory, const Tokenizer& tokenizer) {
  TokenizedTrajectory out;
  for (const auto& turn : trajectory.turns) {
    const auto agent_tokens = tokenizer.tokenize(turn.agent_text);
    out.agent_tokens_per_turn.push_back(agent_tokens.size());
    out.turn_last_agent.push_back(agent_tokens.empty()
                                      ? TokenizedTrajectory::npos
                                      : out.token_stream.size() + agent_tokens.size() - 1);
    for (const auto& t : agent_tokens) {
      out.token_stream.push_back(t);
      out.mask.push_back(1);
    }
    out.agent_token_count += agent_tokens.size();
    if (!std::holds_alternative<Stop>(turn.action)) {
      for (const auto& t : tokenizer.tokenize(turn.feedback.text)) {
        out.token_stream.push_back(t);
        out.mask.push_back(0);
      }
    }
  }
  return out;
}

LossMask build_loss_mask(const Trajectory& trajectory, const Tokenizer& tokenizer) {
  return tokenize_trajectory(trajectory, tokenizer).mask;
}

int count_word_occurrences(const std::string& text, const std::string& word) {
  const auto is_word_char = [](unsigned char c) { return std::isalnum(c) || c == '_'; };
  const auto lower = [](unsigned char c) { return static_cast<char>(std::tolower(c)); };
  int count = 0;
  const std::size_t n = text.size(), m = word.size();
  if (m == 0) return 0;
  for (std::size_t i = 0; i + m <= n; ++i) {
    bool match = true;
    for (std::size_t k = 0; k < m && match; ++k)
      match = lower(static_cast<unsigned char>(text[i + k])) ==
              lower(static_cast<unsigned char>(word[k]));
    if (!match) continue;
    const bool left_ok = i == 0 || !is_word_char(static_cast<unsigned char>(text[i - 1]));
    const bool right_ok = i + m == n || !is_word_char(static_cast<unsigned char>(text[i + m]));
    if (left_ok && right_ok) ++count;
  }
  return count;
}

TrajStats stats(const Trajectory& trajectory, const Tokenizer& tokenizer) {
  if (trajectory.turns.empty())
    throw std::invalid_argument("stats: trajectory must have at least one turn");
  TrajStats s;
  for (const auto& turn : trajectory.turns) {
    s.wait_count += count_word_occurrences(turn.thought, "wait");
    s.agent_tokens += tokenizer.count(turn.agent_text);
  }
  s.avg_agent_tokens_per_turn =
      static_cast<double>(s.agent_tokens) / static_cast<double>(trajectory.turns.size());
  return s;
}

namespace {

json action_to_json(const Action& action) {
  if (const auto* call = std::get_if<tools::ToolCall>(&action)) {
    json j = tools::tool_call_to_json(*call);
    j["type"] = "tool_call";
    return j;
  }
  if (const auto* msg = std::get_if<UserMessage>(&action))
    return {{"type", "user_message"}, {"text", msg->text}};
  return {{"type", "stop"}};
}

Action action_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "tool_call") return tools::tool_call_from_json(j);
  if (type == "user_message") return UserMessage{j.at("text").get<std::string>()};
  if (type == "stop") return Stop{};
  throw std::invalid_argument("unknown action type: " + type);
}

json segment_to_json(const Segment& segment) {
  json j = {{"modality", to_string(segment.modality)}, {"text", segment.text}};
  if (!segment.audio_ref.empty()) j["audio_ref"] = segment.audio_ref;
  return j;
}

Segment segment_from_json(const json& j, Role role) {
  Segment s;
  s.role = role;
  s.modality = modality_from_string(j.value("modality", "text"));
  s.text = j.value("text", "");
  s.audio_ref = j.value("audio_ref", "");
  return s;
}

json breakdown_to_json(const reward::RewardBreakdown& b) {
  json contributions = json::array();
  for (const auto& c : b.turn_contributions) contributions.push_back(c.str());
  return {{"terminal", b.terminal},
          {"turn_contributions", contributions},
          {"total", b.total.str()},
          {"category", reward::to_string(b.category)}};
}

reward::RewardBreakdown breakdown_from_json(const json& j) {
  reward::RewardBreakdown b;
  b.terminal = j.at("terminal").get<int>();
  for (const auto& c : j.at("turn_contributions"))
    b.turn_contributions.push_back(Rational::parse(c.get<std::string>()));
  b.total = Rational::parse(j.at("total").get<std::string>());
  b.category = reward::category_from_string(j.at("category").get<std::string>());
  return b;
}

}  // namespace

json trajectory_to_json(const Trajectory& trajectory) {
  json turns = json::array();
  for (const auto& turn : trajectory.turns) {
    json t = {{"index", turn.index},
              {"thought", turn.thought},
              {"agent_text", turn.agent_text},
              {"action", action_to_json(turn.action)}};
    if (turn.tool_outcome)
      t["tool_outcome"] = {{"ok", turn.tool_outcome->ok},
                           {"mutated", turn.tool_outcome->mutated},
                           {"reason_code", turn.tool_outcome->reason_code}};
    if (!std::holds_alternative<Stop>(turn.action)) t["feedback"] = segment_to_json(turn.feedback);
    turns.push_back(std::move(t));
  }
  json j = {{"task_id", trajectory.task_id}, {"turns", turns}};
  if (!trajectory.seed_ref.empty()) j["seed_ref"] = trajectory.seed_ref;
  if (trajectory.terminal_reward) j["terminal_reward"] = *trajectory.terminal_reward;
  if (trajectory.verify_report)
    j["verify_report"] = {{"reward", trajectory.verify_report->reward},
                          {"mismatch", trajectory.verify_report->mismatch},
                          {"details", trajectory.verify_report->details}};
  if (trajectory.transport_error) j["transport_error"] = true;
  if (trajectory.turn_scores) j["turn_scores"] = *trajectory.turn_scores;
  if (!trajectory.score_warnings.empty()) j["score_warnings"] = trajectory.score_warnings;
  if (trajectory.breakdown) j["breakdown"] = breakdown_to_json(*trajectory.breakdown);
  if (!trajectory.token_fields.empty()) j["token_fields"] = trajectory.token_fields;
  if (!trajectory.turns.empty()) {
    const TrajStats s = stats(trajectory);
    j["stats"] = {{"wait_count", s.wait_count}, {"agent_tokens", s.agent_tokens}};
  }
  return j;
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory trajectory;
  trajectory.task_id = j.at("task_id").get<std::string>();
  trajectory.seed_ref = j.value("seed_ref", "");
  int expected_index = 1;
  for (const auto& t : j.at("turns")) {
    Turn turn;
    turn.index = t.at("index").get<int>();
    if (turn.index != expected_index++)
      throw std::invalid_argument("turn indices must be contiguous from 1");
    turn.thought = t.value("thought", "");
    turn.agent_text = t.value("agent_text", "");
    turn.action = action_from_json(t.at("action"));
    if (t.contains("tool_outcome")) {
      ToolOutcome outcome;
      outcome.ok = t["tool_outcome"].at("ok").get<bool>();
      outcome.mutated = t["tool_outcome"].value("mutated", false);
      outcome.reason_code = t["tool_outcome"].value("reason_code", "");
      turn.tool_outcome = outcome;
    }
    if (std::holds_alternative<Stop>(turn.action)) {
      if (t.contains("feedback") && !t["feedback"].value("text", "").empty())
        throw std::invalid_argument("stop actions carry no feedback");
      turn.feedback = Segment{Role::environment, Modality::text, "", ""};
    } else {
      turn.feedback = segment_from_json(t.value("feedback", json::object()), Role::environment);
    }
    trajectory.turns.push_back(std::move(turn));
  }
  if (j.contains("terminal_reward") && !j["terminal_reward"].is_null())
    trajectory.terminal_reward = j["terminal_reward"].get<int>();
  if (j.contains("verify_report") && !j["verify_report"].is_null()) {
    VerifyVerdict verdict;
    verdict.reward = j["verify_report"].at("reward").get<int>();
    verdict.mismatch = j["verify_report"].value("mismatch", "match");
    verdict.details = j["verify_report"].value("details", json());
    trajectory.verify_report = verdict;
  }
  trajectory.transport_error = j.value("transport_error", false);
  if (j.contains("turn_scores") && !j["turn_scores"].is_null())
    trajectory.turn_scores = j["turn_scores"].get<std::vector<int>>();
  if (j.contains("score_warnings"))
    trajectory.score_warnings = j["score_warnings"].get<std::vector<std::string>>();
  if (j.contains("breakdown") && !j["breakdown"].is_null())
    trajectory.breakdown = breakdown_from_json(j["breakdown"]);
  if (j.contains("token_fields"))
    trajectory.token_fields =
        j["token_fields"].get<std::map<std::string, std::vector<double>>>();
  return trajectory;
}

std::string serialize(const Trajectory& trajectory) {
  return trajectory_to_json(trajectory).dump();
}

Trajectory deserialize(const std::string& line, std::size_t line_number) {
  json parsed;
  try {
    parsed = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_number) + ": malformed record at byte " +
                         std::to_string(e.byte) + ": " + e.what(),
                     e.byte > 0 ? e.byte - 1 : 0, line.size(), line);
  }
  try {
    return trajectory_from_json(parsed);
  } catch (const std::exception& e) {
    throw ParseError("line " + std::to_string(line_number) + ": invalid record: " + e.what(), 0,
                     line.size(), line);
  }
}

std::vector<Trajectory> read_records(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    out.push_back(deserialize(line, line_number));
  }
  return out;
}

void write_records(std::ostream& out, const std::vector<Trajectory>& records) {
  for (const auto& r : records) out << serialize(r) << "\n";
}

}  // namespace toolrl::traj
