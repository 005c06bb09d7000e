#include "toolrl/orchestrator.hpp"

#include <algorithm>
#include <stdexcept>

namespace toolrl::orch {

using nlohmann::json;

EpisodeConfig episode_config_from_json(const json& j) {
  EpisodeConfig config;
  config.max_turns = j.value("max_turns", 30);
  config.temperature = j.value("temperature", 0.7);
  config.top_p = j.value("top_p", 0.95);
  config.num_rollout = j.value("num_rollout", 4);
  config.intervention_enabled = j.value("intervention_enabled", false);
  config.intervention_limit = j.value("intervention_limit", 2);
  if (config.max_turns < 1) throw std::invalid_argument("max_turns must be >= 1");
  if (config.num_rollout < 1) throw std::invalid_argument("num_rollout must be >= 1");
  return config;
}

LocalSession::LocalSession(retail::EntityStore store, const tools::ToolRegistry& registry,
                           std::unique_ptr<sim::UserSimulator> user)
    : store_(std::move(store)), registry_(&registry), user_(std::move(user)) {}

tools::ToolResult LocalSession::execute_tool(const tools::ToolCall& call) {
  return registry_->execute(store_, call);
}

std::string LocalSession::user_step(const std::string& agent_message) {
  if (!agent_message.empty()) user_history_.push_back({"assistant", agent_message});
  std::string reply = user_->next_message(user_history_);
  if (reply != sim::kStopToken) user_history_.push_back({"user", reply});
  return reply;
}

InterventionDecision intervene(const tools::ToolCall& action, const verify::GroundTruth& truth,
                               bool is_write, int counter, int limit) {
  if (!is_write) return InterventionDecision::proceed;
  if (counter >= limit) return InterventionDecision::proceed;
  if (verify::call_matches_any(action, truth.calls)) return InterventionDecision::proceed;
  return InterventionDecision::retry;
}

namespace {

std::string last_user_directed_message(const traj::Trajectory& trajectory) {
  std::string last;
  for (const auto& turn : trajectory.turns)
    if (const auto* msg = std::get_if<traj::UserMessage>(&turn.action)) last = msg->text;
  return last;
}

}  // namespace

traj::Trajectory run_episode(const traj::TaskSpec& task, sim::PolicyClient& policy,
                             EnvironmentSession& env, const EpisodeConfig& config) {
  traj::Trajectory trajectory;
  trajectory.task_id = task.task_id;
  trajectory.seed_ref = task.seed_ref;
  const verify::GroundTruth truth{task.ground_truth_calls, task.expected_outputs};

  std::map<std::string, bool> write_kind;
  std::vector<sim::Exchange> history;
  bool stopped = false;

  try {
    for (const auto& spec : env.list_tools())
      write_kind[spec.name] = spec.kind == tools::ToolKind::write;

    // An immediate stop still leaves the agent one turn, so finalized
    // trajectories always have T >= 1.
    const std::string opening = env.user_step("");
    if (opening != sim::kStopToken) history.push_back({"user", opening});

    for (int t = 1; t <= config.max_turns && !stopped; ++t) {
      traj::Turn turn;
      turn.index = t;

      int interventions = 0;
      std::vector<sim::Exchange> step_context;  // policy-visible corrective context
      std::optional<traj::ParsedAction> parsed;
      std::string agent_text;
      std::string parse_failure;

      while (true) {
        std::vector<sim::Exchange> view = history;
        view.insert(view.end(), step_context.begin(), step_context.end());
        agent_text = policy.complete(view).text;
        try {
          parsed = traj::parse_react(agent_text);
        } catch (const traj::ParseError& e) {
          parsed.reset();
          parse_failure = e.what();
          break;
        }
        if (config.intervention_enabled) {
          if (const auto* call = std::get_if<tools::ToolCall>(&parsed->action)) {
            const auto kind = write_kind.find(call->name);
            const bool is_write = kind != write_kind.end() && kind->second;
            if (intervene(*call, truth, is_write, interventions, config.intervention_limit) ==
                InterventionDecision::retry) {
              ++interventions;
              // The pending turn is discarded; the corrective sentence is
              // appended to the step's reasoning context before re-querying.
              std::string context = parsed->thought;
              if (!context.empty()) context += "\n";
              context += kCorrectiveSentence;
              step_context.push_back({"assistant", context});
              continue;
            }
          }
        }
        break;
      }

      turn.agent_text = agent_text;
      if (!parsed) {
        // Malformed action: surfaced as an environment error message; the
        // user simulator is not advanced.
        turn.action = traj::UserMessage{agent_text};
        turn.feedback = {traj::Role::environment, traj::Modality::text,
                         "Your last action could not be parsed (" + parse_failure +
                             "). Reply with a <tool_call>{...}</tool_call> block or plain text "
                             "addressed to the user.",
                         ""};
        history.push_back({"assistant", agent_text});
        history.push_back({"tool", turn.feedback.text});
        trajectory.turns.push_back(std::move(turn));
        continue;
      }

      turn.thought = parsed->thought;
      turn.action = parsed->action;

      if (const auto* call = std::get_if<tools::ToolCall>(&parsed->action)) {
        const tools::ToolResult result = env.execute_tool(*call);
        turn.tool_outcome = traj::ToolOutcome{result.ok, result.mutated, result.reason_code};
        const std::string feedback_text = tools::tool_result_to_json(result).dump();
        turn.feedback = {traj::Role::environment, traj::Modality::text, feedback_text, ""};
        history.push_back({"assistant", agent_text});
        history.push_back({"tool", feedback_text});
      } else if (const auto* msg = std::get_if<traj::UserMessage>(&parsed->action)) {
        history.push_back({"assistant", agent_text});
        const std::string reply = env.user_step(msg->text);
        if (reply == sim::kStopToken) {
          turn.feedback = {traj::Role::environment, traj::Modality::text, sim::kStopToken, ""};
          stopped = true;
        } else {
          turn.feedback = {traj::Role::environment, traj::Modality::text, reply, ""};
          history.push_back({"user", reply});
        }
      } else {
        turn.feedback = {traj::Role::environment, traj::Modality::text, "", ""};
        stopped = true;
      }
      trajectory.turns.push_back(std::move(turn));
    }
  } catch (const sim::TransportError&) {
    trajectory.transport_error = true;
    return trajectory;
  }

  if (task.domain_tag == traj::DomainTag::math) {
    trajectory.terminal_reward =
        task.expected_answer
            ? verify::verify_math(last_user_directed_message(trajectory), *task.expected_answer)
            : 0;
  } else {
    std::vector<tools::ToolCall> writes;
    for (const auto& turn : trajectory.turns) {
      const auto* call = std::get_if<tools::ToolCall>(&turn.action);
      if (call == nullptr) continue;
      const auto kind = write_kind.find(call->name);
      if (kind == write_kind.end() || !kind->second) continue;
      if (turn.tool_outcome && turn.tool_outcome->ok && turn.tool_outcome->mutated)
        writes.push_back(*call);
    }
    const verify::VerifyReport report = verify::verify(writes, truth);
    trajectory.terminal_reward = report.reward;
    trajectory.verify_report =
        traj::VerifyVerdict{report.reward, verify::to_string(report.mismatch), report.details};
  }
  return trajectory;
}

adv::RolloutGroup run_group(const traj::TaskSpec& task, int n, const PolicyFactory& make_policy,
                            const SessionFactory& make_session, const EpisodeConfig& config,
                            RewardSource source) {
  if (n < 1) throw std::invalid_argument("run_group: n must be >= 1");
  adv::RolloutGroup group;
  for (int i = 0; i < n; ++i) {
    auto policy = make_policy();
    auto session = make_session();
    traj::Trajectory trajectory = run_episode(task, *policy, *session, config);
    const int terminal = trajectory.terminal_reward.value_or(0);
    double scalar = 0.0;
    if (source == RewardSource::breakdown_total)
      scalar = trajectory.breakdown ? trajectory.breakdown->total.to_double() : 10.0 * terminal;
    else
      scalar = terminal;
    group.trajectories.push_back(std::move(trajectory));
    group.scalar_rewards.push_back(scalar);
  }
  return group;
}

namespace {

/// Exact binomial coefficient; n is bounded by the rollout count so the
/// 64-bit guard is never hit in practice.
std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (n > 62) throw std::invalid_argument("binomial: n too large for exact arithmetic");
  unsigned __int128 result = 1;
  k = std::min(k, n - k);
  for (int i = 1; i <= k; ++i)
    result = result * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
  return static_cast<std::uint64_t>(result);
}

}  // namespace

Rational pass_hat_k_task(int n, int c, int k) {
  if (k < 1) throw std::invalid_argument("pass_hat_k: k must be >= 1");
  if (k > n) throw std::invalid_argument("pass_hat_k: k exceeds the number of outcomes");
  if (c < 0 || c > n) throw std::invalid_argument("pass_hat_k: invalid success count");
  return Rational(static_cast<std::int64_t>(binomial(c, k)),
                  static_cast<std::int64_t>(binomial(n, k)));
}

double pass_hat_k(const OutcomeMatrix& matrix, int k) {
  if (matrix.outcomes.empty()) throw std::invalid_argument("pass_hat_k: no tasks");
  double sum = 0.0;
  for (const auto& outcomes : matrix.outcomes) {
    const int n = static_cast<int>(outcomes.size());
    const int c = static_cast<int>(std::count(outcomes.begin(), outcomes.end(), 1));
    sum += pass_hat_k_task(n, c, k).to_double();
  }
  return sum / static_cast<double>(matrix.outcomes.size());
}

double pass_hat_k_batched(const OutcomeMatrix& matrix, int k) {
  if (matrix.outcomes.empty()) throw std::invalid_argument("pass_hat_k: no tasks");
  if (k < 1) throw std::invalid_argument("pass_hat_k: k must be >= 1");
  double sum = 0.0;
  for (const auto& outcomes : matrix.outcomes) {
    const int batches = static_cast<int>(outcomes.size()) / k;
    if (batches == 0) throw std::invalid_argument("pass_hat_k: k exceeds the number of outcomes");
    double task_sum = 0.0;
    for (int b = 0; b < batches; ++b) {
      int product = 1;
      for (int i = b * k; i < (b + 1) * k; ++i) product &= outcomes[static_cast<std::size_t>(i)];
      task_sum += product;
    }
    sum += task_sum / batches;
  }
  return sum / static_cast<double>(matrix.outcomes.size());
}

TaskMixer::TaskMixer(std::vector<std::string> cycle,
                     std::map<std::string, std::vector<traj::TaskSpec>> pools)
    : cycle_(std::move(cycle)), pools_(std::move(pools)) {
  if (cycle_.empty()) throw std::invalid_argument("TaskMixer: empty cycle");
  for (const auto& tag : cycle_) {
    auto it = pools_.find(tag);
    if (it == pools_.end() || it->second.empty())
      throw std::invalid_argument("TaskMixer: empty pool for tag '" + tag + "'");
    positions_[tag] = 0;
  }
}

const traj::TaskSpec& TaskMixer::next() {
  const std::string& tag = cycle_[cycle_pos_];
  cycle_pos_ = (cycle_pos_ + 1) % cycle_.size();
  const auto& pool = pools_[tag];
  std::size_t& pos = positions_[tag];
  const traj::TaskSpec& task = pool[pos];
  pos = (pos + 1) % pool.size();
  return task;
}

}  // namespace toolrl::orch
