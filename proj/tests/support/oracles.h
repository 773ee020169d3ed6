#pragma once

// Independent reference implementations used by the unit tests and the
// acceptance binary. None of these call into the code they check.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arena/agents.h"
#include "arena/harness.h"
#include "arena/visual_allusions.h"

namespace oracle {

// ---- Visual Allusions ----

// Straight transcription of the rule text: storyteller and correct guessers get
// 3 when some but not all voters find the card, everyone but the storyteller
// gets 2 otherwise, and every card owner gets 1 per vote on their card.
std::map<int, int> va_points(int storyteller, int storyteller_card, const std::map<int, int>& played,
                             const std::map<int, int>& votes);

// Rounds recorded by hand: `correct[g]` says whether guesser g found the
// storyteller's card. Seats 0..n-1, storyteller card 100 + storyteller.
arena::va::RoundRecord va_round(int storyteller, int n, const std::vector<bool>& correct);

// Spark from its defining formulas, computed directly from the round list.
std::optional<double> spark(std::span<const arena::va::RoundRecord> rounds, int i, int j, int n);

// ---- Attuned ----

int ring(double delta);
// {sender team, opponent team} points from the system-prompt table.
std::array<int, 2> attuned_points(int target, int sender_guess, int opponent_guess);
// Probability over 101 uniform targets that the sender team scores 2+ when
// both team guesses are fixed.
double mindread_probability(int sender_guess, int opponent_guess);

// ---- Statistics: permutation / enumeration p-values ----

// Two-sided exact permutation p of |U - n1 n2 / 2| over all relabelings.
double mann_whitney_permutation_p(std::span<const double> a, std::span<const double> b);
// Exact conditional p: sum of hypergeometric probabilities of tables with a
// Pearson statistic at least the observed one. With mid set, tables tied with
// the observed statistic count at half weight (Lancaster's mid-p), which is
// what a continuous approximation estimates.
double chi2_permutation_p(const std::array<std::array<long long, 2>, 2>& table, bool mid = false);
// Exact sign-flip p of |mean difference|.
double paired_sign_flip_p(std::span<const double> a, std::span<const double> b);
// The same p estimated from `draws` random sign patterns.
double paired_sign_flip_p_sampled(std::span<const double> a, std::span<const double> b, int draws,
                                  std::uint64_t seed);
// Textbook Pearson statistic.
double pearson_statistic(const std::array<std::array<long long, 2>, 2>& table);

// ---- Matchmaking ----

struct ScheduleAudit {
  bool all_argmin = true;
  std::string first_violation;
  std::vector<int> game_counts;
};
// Replays the schedule against a fresh co-play matrix and checks each pick
// is an argmin of the documented criterion over the remaining pool.
ScheduleAudit audit_schedule(int pool_size, const std::vector<std::vector<int>>& schedule);

// ---- Scripted agents ----

arena::AgentSpec scripted(const std::string& id, const std::string& policy,
                          std::map<std::string, std::string> params = {});

// An agent whose replies come from a lambda.
class CallbackAgent final : public arena::Agent {
 public:
  CallbackAgent(arena::AgentSpec spec, std::function<arena::ParsedOutput(const arena::Observation&)> fn)
      : spec_(std::move(spec)), fn_(std::move(fn)) {}
  const arena::AgentSpec& spec() const override { return spec_; }
  arena::AgentReply act(const arena::Observation& o) override { return {fn_(o), ""}; }

 private:
  arena::AgentSpec spec_;
  std::function<arena::ParsedOutput(const arena::Observation&)> fn_;
};

std::vector<arena::va::RoundRecord> va_rounds(const arena::harness::Transcript& t);

}  // namespace oracle
