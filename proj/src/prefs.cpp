#include "mathforge/prefs.hpp"

#include <cmath>

namespace mathforge::prefs {

std::string to_string(PairSource s) {
  switch (s) {
    case PairSource::SftSampled: return "sft-sampled";
    case PairSource::ActorSampled: return "actor-sampled";
    case PairSource::External: return "external";
  }
  return "?";
}

PairSource parse_pair_source(const std::string& s) {
  if (s == "sft-sampled") return PairSource::SftSampled;
  if (s == "actor-sampled") return PairSource::ActorSampled;
  if (s == "external") return PairSource::External;
  throw std::invalid_argument("unknown pair source '" + s + "'");
}

std::vector<PreferencePair> build_preference_pairs(const verify::MathItem& item,
                                                   const std::vector<verify::CheckedPath>& candidates, int cap,
                                                   const verify::FilterPolicy& policy, PairSource source) {
  if (cap < 1) throw std::invalid_argument("pair cap must be >= 1");
  std::vector<const verify::CheckedPath*> good;
  std::vector<const verify::CheckedPath*> bad;
  for (const verify::CheckedPath& c : candidates) {
    (verify::passes(item, c.second, policy) ? good : bad).push_back(&c);
  }
  std::vector<PreferencePair> out;
  for (const verify::CheckedPath* g : good) {
    for (const verify::CheckedPath* b : bad) {
      if (static_cast<int>(out.size()) >= cap) return out;
      if (g->first.text == b->first.text) continue;
      out.push_back({item.question, g->first, b->first, {item.id, g->second, b->second, source}});
    }
  }
  return out;
}

double neg_log_sigmoid(double x) { return std::log1p(std::exp(-std::fabs(x))) + std::max(-x, 0.0); }

double rm_ranking_loss(double score_chosen, double score_rejected) {
  return neg_log_sigmoid(score_chosen - score_rejected);
}

double rm_accuracy(const std::vector<std::pair<double, double>>& scored_pairs) {
  if (scored_pairs.empty()) throw EmptyInput("rm_accuracy: no pairs");
  double credit = 0;
  for (const auto& [chosen, rejected] : scored_pairs) {
    if (chosen > rejected) {
      credit += 1;
    } else if (chosen == rejected) {
      credit += 0.5;
    }
  }
  return credit / static_cast<double>(scored_pairs.size());
}

double dpo_loss(const DpoInputs& in) {
  if (!(in.beta > 0) || !std::isfinite(in.beta)) throw std::invalid_argument("dpo_loss: beta must be finite and > 0");
  for (double v : {in.policy_logp_w, in.policy_logp_l, in.ref_logp_w, in.ref_logp_l}) {
    if (!std::isfinite(v)) throw std::invalid_argument("dpo_loss: log-probabilities must be finite");
  }
  const double margin = (in.policy_logp_w - in.ref_logp_w) - (in.policy_logp_l - in.ref_logp_l);
  return neg_log_sigmoid(in.beta * margin);
}

}  // namespace mathforge::prefs
