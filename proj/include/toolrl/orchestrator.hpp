#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "toolrl/advantage.hpp"
#include "toolrl/rational.hpp"
#include "toolrl/simulators.hpp"
#include "toolrl/verifier.hpp"

namespace toolrl::orch {

/// Episode loop defaults (max_turns 30, sampling temperature 0.7,
/// top_p 0.95, 4 rollouts per task).
struct EpisodeConfig {
  int max_turns = 30;
  double temperature = 0.7;
  double top_p = 0.95;
  int num_rollout = 4;
  bool intervention_enabled = false;
  int intervention_limit = 2;  // per reasoning step
};

EpisodeConfig episode_config_from_json(const nlohmann::json& j);

/// Corrective sentence injected on a rollout intervention, byte-exact.
inline constexpr const char* kCorrectiveSentence =
    "Wait, my previous reasoning might be wrong, let me try again.";

/// The environment surface one episode talks to: tool execution plus the
/// simulated user. Implemented locally (in-process store + simulator) and
/// over the wire (sandbox service session); an episode drives exactly one
/// session, so implementations need not be thread-safe.
class EnvironmentSession {
 public:
  virtual ~EnvironmentSession() = default;
  virtual std::vector<tools::ToolSpec> list_tools() = 0;
  virtual tools::ToolResult execute_tool(const tools::ToolCall& call) = 0;
  /// Advances the user simulator; empty agent_message requests the
  /// opening user message. May return ##STOP##.
  virtual std::string user_step(const std::string& agent_message) = 0;
};

/// In-process session: snapshot-backed store, tool registry and a user
/// simulator with its own accumulated user-visible history.
class LocalSession final : public EnvironmentSession {
 public:
  LocalSession(retail::EntityStore store, const tools::ToolRegistry& registry,
               std::unique_ptr<sim::UserSimulator> user);

  std::vector<tools::ToolSpec> list_tools() override { return registry_->list_tools(); }
  tools::ToolResult execute_tool(const tools::ToolCall& call) override;
  std::string user_step(const std::string& agent_message) override;

  const retail::EntityStore& store() const { return store_; }

 private:
  retail::EntityStore store_;
  const tools::ToolRegistry* registry_;
  std::unique_ptr<sim::UserSimulator> user_;
  std::vector<sim::Exchange> user_history_;
};

enum class InterventionDecision { proceed, retry };

/// Write calls that are not members of the ground truth are retried, at
/// most `limit` times per reasoning step. Reads and user messages always
/// proceed.
InterventionDecision intervene(const tools::ToolCall& action, const verify::GroundTruth& truth,
                               bool is_write, int counter, int limit = 2);

/// Drives the alternating agent/environment loop until the user stops or
/// max_turns is reached, then attaches the rule-based terminal reward.
/// Transport failures mark the trajectory instead of propagating.
traj::Trajectory run_episode(const traj::TaskSpec& task, sim::PolicyClient& policy,
                             EnvironmentSession& env, const EpisodeConfig& config);

enum class RewardSource { terminal, breakdown_total };

using PolicyFactory = std::function<std::unique_ptr<sim::PolicyClient>()>;
using SessionFactory = std::function<std::unique_ptr<EnvironmentSession>()>;

/// n independent episodes from fresh sessions. Scalars are 10 * R(tau)
/// under RewardSource::terminal, or breakdown totals when present.
adv::RolloutGroup run_group(const traj::TaskSpec& task, int n, const PolicyFactory& make_policy,
                            const SessionFactory& make_session, const EpisodeConfig& config,
                            RewardSource source = RewardSource::terminal);

/// Per-task rollout outcomes (0/1 entries).
struct OutcomeMatrix {
  std::vector<std::vector<int>> outcomes;
};

/// Exact per-task term: C(c, k) / C(n, k) for n outcomes with c successes.
/// Equals the all-correct product when n == k.
Rational pass_hat_k_task(int n, int c, int k);

/// Mean over tasks of the unbiased all-correct statistic. Throws when any
/// task has fewer than k outcomes.
double pass_hat_k(const OutcomeMatrix& matrix, int k);

/// Batch variant for comparison runs: splits each task's outcomes into
/// floor(n/k) disjoint batches of k and averages their all-correct
/// products.
double pass_hat_k_batched(const OutcomeMatrix& matrix, int k);

/// Round-robin task mixing over a cycle of pool tags; within each pool,
/// sequential with wraparound.
class TaskMixer {
 public:
  TaskMixer(std::vector<std::string> cycle,
            std::map<std::string, std::vector<traj::TaskSpec>> pools);

  const traj::TaskSpec& next();

 private:
  std::vector<std::string> cycle_;
  std::map<std::string, std::vector<traj::TaskSpec>> pools_;
  std::map<std::string, std::size_t> positions_;
  std::size_t cycle_pos_ = 0;
};

}  // namespace toolrl::orch
