#include "toolrl/rewards.hpp"

#include <algorithm>
#include <stdexcept>

namespace toolrl::reward {

std::string to_string(Category category) {
  switch (category) {
    case Category::Perfect: return "Perfect";
    case Category::Good: return "Good";
    case Category::GoodAttempt: return "GoodAttempt";
    case Category::Failed: return "Failed";
  }
  return "Failed";
}

Category category_from_string(const std::string& s) {
  if (s == "Perfect") return Category::Perfect;
  if (s == "Good") return Category::Good;
  if (s == "GoodAttempt") return Category::GoodAttempt;
  if (s == "Failed") return Category::Failed;
  throw std::invalid_argument("unknown category: " + s);
}

Category categorize(const RewardBreakdown& breakdown, const CombineConfig& config) {
  const Rational major(-config.major_penalty);
  const bool has_major =
      std::any_of(breakdown.turn_contributions.begin(), breakdown.turn_contributions.end(),
                  [&](const Rational& c) { return c == major; });
  if (breakdown.terminal == 1) {
    const Rational perfect(config.terminal_scale + config.positive_scale_numerator);
    return breakdown.total == perfect ? Category::Perfect : Category::Good;
  }
  return has_major ? Category::Failed : Category::GoodAttempt;
}

RewardBreakdown combine(const std::vector<int>& scores, int terminal, int turn_count,
                        const CombineConfig& config) {
  if (turn_count < 1) throw std::invalid_argument("combine: turn count must be >= 1");
  if (static_cast<int>(scores.size()) != turn_count)
    throw std::invalid_argument("combine: score count does not match turn count");
  if (terminal != 0 && terminal != 1)
    throw std::invalid_argument("combine: terminal reward must be 0 or 1");
  int majors = 0;
  for (const int s : scores) {
    if (s < -1 || s > 1) throw std::invalid_argument("combine: score out of range");
    if (s == -1) ++majors;
  }
  if (majors > 1) throw std::invalid_argument("combine: more than one -1 score");
  // A -1 marks the turn that caused a deviation from the ground-truth
  // calls, so it cannot coexist with terminal success; upstream scoring
  // clamps such judge output before calling combine.
  if (majors == 1 && terminal == 1)
    throw std::invalid_argument("combine: -1 score with terminal success");

  RewardBreakdown breakdown;
  breakdown.terminal = terminal;
  breakdown.total = Rational(config.terminal_scale * terminal);
  for (const int s : scores) {
    const Rational contribution = s == -1
                                      ? Rational(-config.major_penalty)
                                      : Rational(config.positive_scale_numerator * s, turn_count);
    breakdown.turn_contributions.push_back(contribution);
    breakdown.total += contribution;
  }
  breakdown.category = categorize(breakdown, config);
  return breakdown;
}

}  // namespace toolrl::reward
