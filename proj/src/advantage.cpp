#include "toolrl/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace toolrl::adv {

AdvantageField gae(const TokenField& rewards, const TokenField& values, double gamma,
                   double lambda) {
  if (rewards.size() != values.size())
    throw std::invalid_argument("gae: reward/value length mismatch");
  const std::size_t n = rewards.size();
  AdvantageField advantages(n, 0.0);
  double next_value = 0.0;  // terminal bootstrap
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double delta = rewards[k] + gamma * next_value - values[k];
    running = delta + gamma * lambda * running;
    advantages[k] = running;
    next_value = values[k];
  }
  return advantages;
}

std::vector<double> grpo_advantages(const std::vector<double>& rewards) {
  const std::size_t g = rewards.size();
  if (g < 2) throw std::invalid_argument("grpo_advantages: group size must be >= 2");
  const bool all_equal =
      std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); });
  if (all_equal) return std::vector<double>(g, 0.0);
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / double(g);
  double variance = 0.0;
  for (const double r : rewards) variance += (r - mean) * (r - mean);
  variance /= double(g);
  const double stddev = std::sqrt(variance);
  std::vector<double> out(g);
  for (std::size_t i = 0; i < g; ++i) out[i] = (rewards[i] - mean) / stddev;
  return out;
}

std::vector<double> rloo_advantages(const std::vector<double>& rewards) {
  const std::size_t g = rewards.size();
  if (g < 2) throw std::invalid_argument("rloo_advantages: group size must be >= 2");
  const double sum = std::accumulate(rewards.begin(), rewards.end(), 0.0);
  std::vector<double> out(g);
  for (std::size_t i = 0; i < g; ++i) out[i] = rewards[i] - (sum - rewards[i]) / double(g - 1);
  return out;
}

std::string to_string(AssignMode mode) {
  return mode == AssignMode::per_turn ? "per_turn" : "trajectory_level";
}

AssignMode assign_mode_from_string(const std::string& s) {
  if (s == "per_turn") return AssignMode::per_turn;
  if (s == "trajectory_level") return AssignMode::trajectory_level;
  throw std::invalid_argument("unknown assignment mode: " + s);
}

TokenField assign_rewards(const traj::Trajectory& trajectory,
                          const reward::RewardBreakdown& breakdown,
                          const RolloutGroup* group_context, AssignMode mode,
                          const Tokenizer& tokenizer) {
  const traj::TokenizedTrajectory tokens = traj::tokenize_trajectory(trajectory, tokenizer);
  TokenField field(tokens.token_stream.size(), 0.0);

  if (mode == AssignMode::per_turn) {
    if (breakdown.turn_contributions.size() != trajectory.turns.size())
      throw std::invalid_argument("assign_rewards: contribution count != turn count");
    for (std::size_t i = 0; i < trajectory.turns.size(); ++i) {
      const std::size_t pos = tokens.turn_last_agent[i];
      if (pos == traj::TokenizedTrajectory::npos)
        throw std::invalid_argument("assign_rewards: turn " + std::to_string(i + 1) +
                                    " has no agent tokens");
      field[pos] += breakdown.turn_contributions[i].to_double();
    }
    // Terminal reward lands with the last action.
    field[tokens.turn_last_agent.back()] += 10.0 * breakdown.terminal;
    return field;
  }

  if (group_context == nullptr)
    throw std::invalid_argument("assign_rewards: trajectory_level needs a rollout group");
  const std::vector<double>& rewards = group_context->scalar_rewards;
  if (rewards.size() < 2)
    throw std::invalid_argument("assign_rewards: rollout group must have >= 2 rewards");
  const double own = breakdown.total.to_double();
  const bool all_equal =
      std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); });
  double normalized = 0.0;
  if (!all_equal) {
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / double(rewards.size());
    double variance = 0.0;
    for (const double r : rewards) variance += (r - mean) * (r - mean);
    variance /= double(rewards.size());
    normalized = (own - mean) / std::sqrt(variance);
  }
  for (std::size_t j = 0; j < field.size(); ++j)
    if (tokens.mask[j]) field[j] = normalized;
  return field;
}

double ppo_clip_loss(const TokenField& logp_new, const TokenField& logp_old,
                     const AdvantageField& advantages, const LossMask& mask, double epsilon) {
  const std::size_t n = mask.size();
  if (logp_new.size() != n || logp_old.size() != n || advantages.size() != n)
    throw std::invalid_argument("ppo_clip_loss: field/mask length mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!mask[j]) continue;
    const double ratio = std::exp(logp_new[j] - logp_old[j]);
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    sum += std::min(ratio * advantages[j], clipped * advantages[j]);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("ppo_clip_loss: empty mask");
  return -sum / static_cast<double>(count);
}

LossMask entropy_top_mask(const TokenField& entropies, const LossMask& mask, double fraction) {
  if (entropies.size() != mask.size())
    throw std::invalid_argument("entropy_top_mask: field/mask length mismatch");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("entropy_top_mask: fraction must be in (0, 1]");
  std::vector<std::size_t> agent_positions;
  for (std::size_t j = 0; j < mask.size(); ++j)
    if (mask[j]) agent_positions.push_back(j);
  if (agent_positions.empty()) throw std::invalid_argument("entropy_top_mask: empty agent mask");

  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(agent_positions.size())));
  // stable_sort on descending entropy keeps earlier positions on ties
  std::stable_sort(agent_positions.begin(), agent_positions.end(),
                   [&](std::size_t a, std::size_t b) { return entropies[a] > entropies[b]; });
  LossMask out(mask.size(), 0);
  for (std::size_t i = 0; i < keep && i < agent_positions.size(); ++i)
    out[agent_positions[i]] = 1;
  return out;
}

double kl_penalty(const TokenField& logp_new, const TokenField& logp_ref, const LossMask& mask) {
  const std::size_t n = mask.size();
  if (logp_new.size() != n || logp_ref.size() != n)
    throw std::invalid_argument("kl_penalty: field/mask length mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!mask[j]) continue;
    const double delta = logp_ref[j] - logp_new[j];
    sum += std::exp(delta) - delta - 1.0;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("kl_penalty: empty mask");
  return sum / static_cast<double>(count);
}

}  // namespace toolrl::adv
