#include "toolrl/simulators.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>

namespace toolrl::sim {

using nlohmann::json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return true;
  return lower(haystack).find(lower(needle)) != std::string::npos;
}

}  // namespace

ScriptedUser::ScriptedUser(std::string instruction, std::vector<ScriptEntry> script,
                           std::string fallback)
    : instruction_(std::move(instruction)),
      script_(std::move(script)),
      fallback_(std::move(fallback)) {}

ScriptedUser ScriptedUser::from_json(const json& j) {
  std::vector<ScriptEntry> script;
  for (const auto& e : j.value("script", json::array()))
    script.push_back({e.at("trigger").get<std::string>(), e.at("reply").get<std::string>()});
  return ScriptedUser(j.value("instruction", ""), std::move(script),
                      j.value("fallback", "Please go ahead."));
}

std::optional<std::size_t> ScriptedUser::first_unconsumed_match(
    const std::string& agent_message, const std::vector<bool>& consumed) const {
  for (std::size_t i = 0; i < script_.size(); ++i)
    if (!consumed[i] && contains_ci(agent_message, script_[i].trigger)) return i;
  return std::nullopt;
}

std::string ScriptedUser::next_message(const std::vector<Exchange>& history) {
  // Replay consumption from the history so the reply is a pure function
  // of it: each prior user reply consumed the entry that matched the
  // agent message current at that point ("" before the agent spoke).
  std::vector<bool> consumed(script_.size(), false);
  std::string last_agent;
  for (const auto& e : history) {
    if (e.role == "assistant") {
      last_agent = e.text;
    } else if (e.role == "user") {
      if (auto idx = first_unconsumed_match(last_agent, consumed)) consumed[*idx] = true;
    }
  }

  if (std::all_of(consumed.begin(), consumed.end(), [](bool c) { return c; }))
    return kStopToken;
  if (auto idx = first_unconsumed_match(last_agent, consumed)) return script_[*idx].reply;
  return fallback_;
}

ChatClientConfig chat_config_from_json(const json& j) {
  ChatClientConfig config;
  config.endpoint = j.at("endpoint").get<std::string>();
  config.model = j.value("model", "");
  config.temperature = j.value("temperature", 0.7);
  config.auth_env = j.value("auth_env", "");
  config.timeout_sec = j.value("timeout_sec", 60);
  config.max_retries = j.value("max_retries", 2);
  config.rate_limit_per_sec = j.value("rate_limit_per_sec", 0.0);
  return config;
}

struct ChatClient::Bucket {
  std::mutex lock;
  double tokens = 1.0;
  std::chrono::steady_clock::time_point last_refill = std::chrono::steady_clock::now();
};

ChatClient::ChatClient(ChatClientConfig config)
    : config_(std::move(config)), bucket_(std::make_shared<Bucket>()) {}

void ChatClient::acquire_token() const {
  const double rate = config_.rate_limit_per_sec;
  if (rate <= 0.0) return;
  for (;;) {
    double wait_seconds = 0.0;
    {
      std::lock_guard<std::mutex> guard(bucket_->lock);
      const auto now = std::chrono::steady_clock::now();
      const double elapsed = std::chrono::duration<double>(now - bucket_->last_refill).count();
      bucket_->tokens = std::min(1.0, bucket_->tokens + elapsed * rate);
      bucket_->last_refill = now;
      if (bucket_->tokens >= 1.0) {
        bucket_->tokens -= 1.0;
        return;
      }
      wait_seconds = (1.0 - bucket_->tokens) / rate;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_seconds));
  }
}

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host:port
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  const std::size_t path_start =
      url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string ChatClient::complete(const json& messages) const {
  acquire_token();
  const ParsedUrl url = split_url(config_.endpoint);
  httplib::Client client(url.base);
  client.set_connection_timeout(config_.timeout_sec);
  client.set_read_timeout(config_.timeout_sec);

  httplib::Headers headers;
  if (!config_.auth_env.empty()) {
    if (const char* secret = std::getenv(config_.auth_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + secret);
  }

  const json body = {
      {"model", config_.model}, {"messages", messages}, {"temperature", config_.temperature}};
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
    } else if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        last_error = std::string("unexpected response shape: ") + e.what();
      }
    }
    if (attempt < config_.max_retries)
      std::this_thread::sleep_for(std::chrono::milliseconds(25 * (attempt + 1)));
  }
  throw TransportError("chat endpoint " + config_.endpoint + ": " + last_error);
}

std::string strip_reasoning(const std::string& completion) {
  const std::size_t open = completion.find("<think>");
  if (open == std::string::npos) return trim(completion);
  const std::size_t close = completion.find("</think>", open);
  if (close == std::string::npos) return trim(completion.substr(0, open));
  return trim(completion.substr(0, open) + completion.substr(close + 8));
}

namespace {

constexpr const char* kUserSimSystemPrompt = R"(You are role-playing a customer talking to a support agent. Stay in character.

Your goal and the facts you know come from the task instruction below. Only reveal information when the agent asks for it or when it is needed to move the conversation forward. Do not invent details that the instruction does not give you.

Think inside a <think></think> block before every reply, then write only what the customer would say. When your request has been fully handled (or clearly cannot be), reply with exactly ##STOP## and nothing else.

Task instruction:
{{TASK_INSTRUCTION}})";

}  // namespace

std::string llm_user_next(const ChatClient& client, const std::string& instruction,
                          const std::vector<Exchange>& history) {
  std::string system = kUserSimSystemPrompt;
  const std::string placeholder = "{{TASK_INSTRUCTION}}";
  system.replace(system.find(placeholder), placeholder.size(), instruction);

  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", system}});
  // The simulator speaks as "assistant" in its own conversation, so agent
  // messages flip to "user" here.
  for (const auto& e : history) {
    if (e.role == "assistant")
      messages.push_back({{"role", "user"}, {"content", e.text}});
    else if (e.role == "user")
      messages.push_back({{"role", "assistant"}, {"content", e.text}});
  }
  if (messages.size() == 1)
    messages.push_back({{"role", "user"}, {"content", "Hello! How can I help you today?"}});

  std::string reply = strip_reasoning(client.complete(messages));
  if (trim(reply) == kStopToken) return kStopToken;
  return reply;
}

TurnScores parse_judge_scores(const std::string& raw, int turn_count) {
  const std::string body = strip_reasoning(raw);
  const std::size_t open = body.find('{');
  const std::size_t close = body.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw AdjudicationError("judge output contains no JSON object");
  json parsed;
  try {
    parsed = json::parse(body.substr(open, close - open + 1));
  } catch (const json::exception& e) {
    throw AdjudicationError(std::string("judge output is not valid JSON: ") + e.what());
  }
  if (!parsed.is_object()) throw AdjudicationError("judge output is not a JSON object");
  if (static_cast<int>(parsed.size()) != turn_count)
    throw AdjudicationError("judge returned " + std::to_string(parsed.size()) + " scores for " +
                            std::to_string(turn_count) + " turns");

  TurnScores result;
  for (int i = 0; i < turn_count; ++i) {
    const std::string key = "score_" + std::to_string(i);
    auto it = parsed.find(key);
    if (it == parsed.end()) throw AdjudicationError("judge output is missing " + key);
    if (!it->is_number_integer()) throw AdjudicationError(key + " is not an integer");
    const int value = it->get<int>();
    if (value < -1 || value > 1) throw AdjudicationError(key + ": value out of range");
    result.scores.push_back(value);
  }

  // Keep the earliest -1 (the primary deviation); clamp any later ones.
  bool seen_major = false;
  for (std::size_t i = 0; i < result.scores.size(); ++i) {
    if (result.scores[i] != -1) continue;
    if (!seen_major) {
      seen_major = true;
      continue;
    }
    result.scores[i] = 0;
    result.warnings.push_back("turn " + std::to_string(i + 1) +
                              ": duplicate -1 clamped to 0 (earliest deviation kept)");
  }
  return result;
}

const std::string& default_judge_prompt() {
  static const std::string prompt = R"(You are a task execution evaluation judge. Your core responsibility is to thoroughly and precisely evaluate multi-turn conversations between a user and an agent. You must carefully read each conversation to pinpoint where the agent's decisions lead to deviations from the ground-truth function-call trajectories.

Information provided for your evaluation:

1. Policy: the strict rules the agent must adhere to when making tool calls.
2. Task instruction: the specific instruction provided to the user. The user's requests and responses should always align with this instruction. The agent does not have access to it.
3. Ground-truth function call trajectories: the definitive standard for assessing the accuracy of the agent's tool calls.
   - The agent does not need to follow the exact order of this trajectory.
   - It is acceptable for the agent to call information-gathering functions (e.g., get_order_details) multiple times, but the agent's write operations (modifying, exchanging, returning, or canceling orders) need to match exactly with the ground-truth function calls.
4. Conversation trajectory: the detailed record of the multi-turn conversation between the user and the agent. Each agent reasoning and action within a turn is preceded by a label like [Turn N].

Evaluation process. Deviations from the ground truth typically arise due to:
- The agent failing to gather sufficient or correct information, either through function calls or by asking the user.
- Incorrect reasoning or understanding by the agent based on the results of tool execution.
- The agent not following policy, resulting in wrong execution of tools.

Pay exceptionally close attention to operations involving modifying, exchanging, returning, or canceling orders. The agent's calls for these functions must match exactly with the ground truth. Three kinds of error are possible with write operations:
(1) The agent calls the function with wrong arguments that do not match the ground truth.
(2) The agent calls an unnecessary write operation that should never be called.
(3) The agent did not call a write operation that is listed in the ground truth.

If any of the three cases above occurs, carefully read the conversation and identify the turns where the agent deviates from the ground truth. For each turn (identified by its [Turn N] tag), evaluate whether the agent's reasoning and action in that turn is the primary cause of a deviation. Assign one score per turn:
- If the turn is correct, assign a score of 1.
- If the turn is the primary reason for a deviation, assign a score of -1. This can be assigned to at most one turn, and only when a deviation is found.
- If the turn has issues (e.g., not following the policy or function call formats), assign a score of 0.

Response format: first conduct your evaluation inside a <think></think> block. After the thinking block, output only a single JSON object and nothing else, with one entry per turn from "score_0" up to "score_n":
{
    "score_0": <turn 0's score>,
    "score_1": <turn 1's score>,
    "score_n": <turn n's score>
}

Policy:
{{POLICY}}

Task instruction:
{{TASK_INSTRUCTION}}

Ground-truth function calls:
{{GROUND_TRUTH}}

Conversation trajectory:
{{CONVERSATION}})";
  return prompt;
}

namespace {

void replace_all(std::string& text, const std::string& placeholder, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(placeholder, pos)) != std::string::npos) {
    text.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
}

}  // namespace

std::string render_judge_prompt(const std::string& prompt_template, const std::string& policy_doc,
                                const std::string& instruction, const verify::GroundTruth& truth,
                                const traj::Trajectory& trajectory) {
  json truth_json = json::array();
  for (const auto& call : truth.calls) truth_json.push_back(tools::tool_call_to_json(call));

  std::string conversation;
  for (std::size_t i = 0; i < trajectory.turns.size(); ++i) {
    const auto& turn = trajectory.turns[i];
    conversation += "[Turn " + std::to_string(i) + "]\n";
    conversation += "Agent: " + turn.agent_text + "\n";
    if (!std::holds_alternative<traj::Stop>(turn.action))
      conversation += "Environment: " + turn.feedback.text + "\n";
    conversation += "\n";
  }

  std::string prompt = prompt_template;
  replace_all(prompt, "{{POLICY}}", policy_doc);
  replace_all(prompt, "{{TASK_INSTRUCTION}}", instruction);
  replace_all(prompt, "{{GROUND_TRUTH}}", truth_json.dump(2));
  replace_all(prompt, "{{CONVERSATION}}", conversation);
  return prompt;
}

TurnScores adjudicate(const ChatClient& client, const std::string& prompt_template,
                      const traj::Trajectory& trajectory, const verify::GroundTruth& truth,
                      const std::string& policy_doc, const std::string& instruction) {
  const std::string prompt =
      render_judge_prompt(prompt_template, policy_doc, instruction, truth, trajectory);
  json messages = json::array();
  messages.push_back({{"role", "user"}, {"content", prompt}});
  const std::string raw = client.complete(messages);
  return parse_judge_scores(raw, static_cast<int>(trajectory.turns.size()));
}

std::optional<TurnScores> adjudicate_with_retry(const ChatClient& client,
                                                const std::string& prompt_template,
                                                const traj::Trajectory& trajectory,
                                                const verify::GroundTruth& truth,
                                                const std::string& policy_doc,
                                                const std::string& instruction) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      return adjudicate(client, prompt_template, trajectory, truth, policy_doc, instruction);
    } catch (const AdjudicationError&) {
      // one retry, then terminal-only fallback
    }
  }
  return std::nullopt;
}

Completion ChatPolicy::complete(const std::vector<Exchange>& history) {
  json messages = json::array();
  if (!system_prompt_.empty()) messages.push_back({{"role", "system"}, {"content", system_prompt_}});
  for (const auto& e : history) messages.push_back({{"role", e.role}, {"content", e.text}});
  return {client_.complete(messages), {}, {}};
}

}  // namespace toolrl::sim
