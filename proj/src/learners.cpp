#include "lfm/learners.hpp"

#include <algorithm>
#include <cmath>

#include "lfm/decoder.hpp"

namespace lfm {

std::string_view to_string(LearnerKind kind) {
  return kind == LearnerKind::Perceptron ? "perceptron" : "mira";
}

LearnerKind parse_learner(std::string_view name) {
  if (name == "perceptron" || name == "perc") return LearnerKind::Perceptron;
  if (name == "mira") return LearnerKind::Mira;
  throw Error("unknown learner: " + std::string(name));
}

void LearnerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (!(mira_cap > 0.0)) throw Error("MIRA cap C must be positive");
  if (!(l2 >= 0.0)) throw Error("L2 strength must be non-negative");
}

UpdateTerm compute_update_term(const EncodedSequence& x, const WeightStore& w,
                               const FeatureAlphabet& alphabet) {
  if (x.gold.size() != x.size()) throw Error("update needs a gold-labeled sequence");
  UpdateTerm t;
  t.predicted = viterbi(x, w, alphabet).labels;
  t.loss = hamming_loss(x.gold, t.predicted);
  if (t.loss == 0) return t;
  const FeatureVec gold = extract_features(x, x.gold, alphabet);
  const FeatureVec pred = extract_features(x, t.predicted, alphabet);
  t.margin = score(w, gold) - score(w, pred);
  t.delta = gold - pred;
  return t;
}

UpdateTerm compute_update_term(const Sequence& x, const WeightStore& w,
                               const FeatureAlphabet& alphabet) {
  if (!x.has_gold()) throw Error("update needs a gold-labeled sequence");
  return compute_update_term(alphabet.encode(x), w, alphabet);
}

double mira_step(const UpdateTerm& t, double cap) {
  const double norm = t.delta.squared_norm();
  if (norm < kMinDeltaNorm) return 0.0;
  const double tau = (static_cast<double>(t.loss) - t.margin) / norm;
  return std::min(cap, std::max(0.0, tau));
}

void perceptron_apply(WeightStore& w, const UpdateTerm& t, double learning_rate, std::uint64_t step) {
  if (t.delta.empty()) return;
  w.add_scaled(t.delta, learning_rate, step);
}

void mira_apply(WeightStore& w, const UpdateTerm& t, double cap, std::uint64_t step) {
  const double tau = mira_step(t, cap);
  if (tau > 0.0) w.add_scaled(t.delta, tau, step);
}

void apply_update(WeightStore& w, const UpdateTerm& t, const LearnerConfig& cfg, std::uint64_t step) {
  switch (cfg.kind) {
    case LearnerKind::Perceptron:
      perceptron_apply(w, t, cfg.learning_rate, step);
      break;
    case LearnerKind::Mira:
      mira_apply(w, t, cfg.mira_cap, step);
      break;
  }
}

void l2_decay(WeightStore& w, double lambda, std::size_t n) {
  if (lambda == 0.0) return;
  if (n == 0) throw Error("l2_decay: dataset size must be positive");
  const double factor = 1.0 - lambda / static_cast<double>(n);
  if (!(factor > 0.0)) throw Error("regularization too strong for dataset size");
  w.scale_all(std::min(factor, 1.0));
}

std::vector<double> finalize_average(const WeightStore& w, std::size_t n, std::size_t epochs) {
  std::vector<double> v = w.accumulated();
  const double denom = static_cast<double>(n) * static_cast<double>(epochs);
  if (w.update_count() == 0 || denom == 0.0) return std::vector<double>(v.size(), 0.0);
  for (double& x : v) x /= denom;
  return v;
}

}  // namespace lfm
