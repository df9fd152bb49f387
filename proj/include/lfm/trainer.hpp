// Lock-free parallel online training: per-epoch shuffle, static split into
// K shards, K workers sharing one WeightStore, epoch barrier, averaging.

#ifndef LFM_TRAINER_HPP
#define LFM_TRAINER_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lfm/eval.hpp"
#include "lfm/learners.hpp"
#include "lfm/model.hpp"

namespace lfm {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t threads = 1;
  LearnerConfig learner;
  std::uint64_t seed = 1;
  bool shuffle = true;
  Metric dev_metric = Metric::Auto;

  void validate(std::size_t n) const;
};

struct EpochStats {
  double seconds = 0.0;  // worker region only
  std::size_t violations = 0;
  std::size_t non_violations = 0;
  std::size_t correct = 0;
  std::optional<double> dev_metric;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t updates = 0;  // violations + non_violations
  std::size_t violations = 0;
  std::size_t non_violations = 0;
  std::size_t correct = 0;
  std::uint64_t update_count = 0;
  Metric dev_metric = Metric::Accuracy;
};

struct TrainResult {
  std::vector<double> weights;  // averaged w*
  TrainReport report;
};

std::vector<std::size_t> shuffle_epoch(std::size_t n, std::size_t epoch, std::uint64_t seed);

// Contiguous partition into k shards whose sizes differ by at most one,
// larger shards first.
std::vector<std::vector<std::size_t>> split_shards(std::span<const std::size_t> order, std::size_t k);

// `alphabet` must have been built from `data`.
TrainResult train(const FeatureAlphabet& alphabet, std::span<const Sequence> data,
                  std::span<const Sequence> dev, const TrainConfig& cfg);

// Training core over pre-encoded data, exposing the final store.
TrainResult train_encoded(const FeatureAlphabet& alphabet, std::span<const EncodedSequence> data,
                          std::span<const Sequence> dev, const TrainConfig& cfg,
                          WeightStore* final_store = nullptr);

}  // namespace lfm

#endif  // LFM_TRAINER_HPP
