// Per-sample large-margin updates and parameter averaging.

#ifndef LFM_LEARNERS_HPP
#define LFM_LEARNERS_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lfm/model.hpp"

namespace lfm {

enum class LearnerKind { Perceptron, Mira };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner(std::string_view name);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::Perceptron;
  double learning_rate = 1.0;  // perceptron step scale
  double mira_cap = 0.1;       // aggressiveness bound C
  double l2 = 0.0;             // lambda, applied as epoch-boundary decay

  void validate() const;
};

// The update term for one sample: delta = f(x,y) - f(x,z).
struct UpdateTerm {
  FeatureVec delta;
  std::size_t loss = 0;
  double margin = 0.0;  // s(x,y) - s(x,z) at read time
  LabelSeq predicted;
};

// Decodes x under the current (possibly moving) weights and builds the
// update term against its gold labels.
UpdateTerm compute_update_term(const EncodedSequence& x, const WeightStore& w,
                               const FeatureAlphabet& alphabet);
UpdateTerm compute_update_term(const Sequence& x, const WeightStore& w,
                               const FeatureAlphabet& alphabet);

inline constexpr double kMinDeltaNorm = 1e-12;

// tau = min(C, max(0, (loss - margin) / |delta|^2)); 0 for an empty delta.
double mira_step(const UpdateTerm& t, double cap);

void perceptron_apply(WeightStore& w, const UpdateTerm& t, double learning_rate, std::uint64_t step);
void mira_apply(WeightStore& w, const UpdateTerm& t, double cap, std::uint64_t step);

// Single-writer overloads stamped with the store's current count.
inline void perceptron_apply(WeightStore& w, const UpdateTerm& t, double learning_rate) {
  perceptron_apply(w, t, learning_rate, w.update_count());
}
inline void mira_apply(WeightStore& w, const UpdateTerm& t, double cap) {
  mira_apply(w, t, cap, w.update_count());
}

void apply_update(WeightStore& w, const UpdateTerm& t, const LearnerConfig& cfg, std::uint64_t step);

// w *= (1 - lambda/N). Needs exclusive access to w.
void l2_decay(WeightStore& w, double lambda, std::size_t n);

// w* = v / (N*T). Zero vector before any update.
std::vector<double> finalize_average(const WeightStore& w, std::size_t n, std::size_t epochs);

}  // namespace lfm

#endif  // LFM_LEARNERS_HPP
