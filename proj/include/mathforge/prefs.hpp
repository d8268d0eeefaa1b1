#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mathforge/verify.hpp"

namespace mathforge::prefs {

enum class PairSource { SftSampled, ActorSampled, External };
std::string to_string(PairSource s);
PairSource parse_pair_source(const std::string& s);

struct PairProvenance {
  std::string item_id;
  verify::Verdict chosen_verdict;
  verify::Verdict rejected_verdict;
  PairSource source = PairSource::SftSampled;
};

struct PreferencePair {
  std::string prompt;
  verify::ReasoningPath chosen;
  verify::ReasoningPath rejected;
  PairProvenance provenance;
};

inline constexpr int kDefaultPairCap = 8;
inline constexpr double kDefaultBeta = 0.1;

/// Good x bad cross product in (good index, bad index) order, truncated to
/// `cap`. Candidates whose texts coincide are never paired.
std::vector<PreferencePair> build_preference_pairs(const verify::MathItem& item,
                                                   const std::vector<verify::CheckedPath>& candidates,
                                                   int cap = kDefaultPairCap,
                                                   const verify::FilterPolicy& policy = {},
                                                   PairSource source = PairSource::SftSampled);

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// -log(sigmoid(x)) without overflow for large |x|.
double neg_log_sigmoid(double x);

/// -log sigmoid(score_chosen - score_rejected).
double rm_ranking_loss(double score_chosen, double score_rejected);

/// Fraction of pairs ranked correctly; ties earn half credit.
double rm_accuracy(const std::vector<std::pair<double, double>>& scored_pairs);

struct DpoInputs {
  double policy_logp_w = 0;
  double policy_logp_l = 0;
  double ref_logp_w = 0;
  double ref_logp_l = 0;
  double beta = kDefaultBeta;
};

double dpo_loss(const DpoInputs& in);

}  // namespace mathforge::prefs
