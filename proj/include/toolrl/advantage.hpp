#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "toolrl/rewards.hpp"
#include "toolrl/trajectory.hpp"

namespace toolrl::adv {

/// Numeric sequence aligned to a trajectory's token stream.
using TokenField = std::vector<double>;
using AdvantageField = std::vector<double>;
using LossMask = traj::LossMask;

/// Optimization hyperparameters (defaults mirror the training setup:
/// clip 0.2, kl_coef 0.001, kl_loss_coef 0.003, gamma = lambda = 1).
struct ClipConfig {
  double epsilon = 0.2;
  double kl_coef = 0.001;
  double kl_loss_coef = 0.003;
  double gamma = 1.0;
  double lambda = 1.0;
};

/// Generalized advantage estimation by backward recursion over the field:
/// delta_j = r_j + gamma * v_{j+1} - v_j with a zero terminal bootstrap,
/// A_j = delta_j + gamma * lambda * A_{j+1}. rewards[j] is the reward
/// granted at position j (the transition out of j).
AdvantageField gae(const TokenField& rewards, const TokenField& values, double gamma,
                   double lambda);

/// Group-standardized advantages (R_n - mean) / std with population std.
/// All-equal rewards yield all-zero advantages; otherwise the division is
/// exact so the outputs have sample mean 0 and std 1. Requires G >= 2.
std::vector<double> grpo_advantages(const std::vector<double>& rewards);

/// Leave-one-out baseline: A_n = R_n - mean of the other rewards.
/// Requires G >= 2; outputs always sum to zero.
std::vector<double> rloo_advantages(const std::vector<double>& rewards);

struct RolloutGroup {
  std::vector<traj::Trajectory> trajectories;
  std::vector<double> scalar_rewards;  // one per trajectory: R(tau) or breakdown totals
};

enum class AssignMode { per_turn, trajectory_level };

std::string to_string(AssignMode mode);
AssignMode assign_mode_from_string(const std::string& s);

/// Spreads a reward breakdown over the token stream.
///
/// per_turn: contribution_i lands on the final agent token of turn i and
/// the 10x terminal reward on the final agent token of the last turn, so
/// GAE sees completion as an end-of-episode event. trajectory_level:
/// the group-standardized total is written at every agent token.
TokenField assign_rewards(const traj::Trajectory& trajectory,
                          const reward::RewardBreakdown& breakdown,
                          const RolloutGroup* group_context, AssignMode mode,
                          const Tokenizer& tokenizer = default_tokenizer());

/// Clipped surrogate loss, negated for minimization:
///   -(1/|mask|) * sum_masked min(r*A, clip(r, 1-eps, 1+eps)*A)
/// with r = exp(logp_new - logp_old). Masked-out positions never
/// contribute. Batch losses average per-trajectory values.
double ppo_clip_loss(const TokenField& logp_new, const TokenField& logp_old,
                     const AdvantageField& advantages, const LossMask& mask, double epsilon);

/// Restricts the mask to the ceil(fraction * agent_count) highest-entropy
/// agent tokens; ties keep the earliest position.
LossMask entropy_top_mask(const TokenField& entropies, const LossMask& mask,
                          double fraction = 0.2);

/// Masked mean of the nonnegative estimator exp(d) - d - 1 with
/// d = logp_ref - logp_new.
double kl_penalty(const TokenField& logp_new, const TokenField& logp_ref, const LossMask& mask);

}  // namespace toolrl::adv
