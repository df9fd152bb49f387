#include "lfm/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

#include "lfm/decoder.hpp"

namespace lfm {

void TrainConfig::validate(std::size_t n) const {
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (threads < 1) throw Error("threads must be at least 1");
  if (threads > n)
    throw Error("threads (" + std::to_string(threads) + ") exceed the number of training sequences (" +
                std::to_string(n) + ")");
  learner.validate();
}

std::vector<std::size_t> shuffle_epoch(std::size_t n, std::size_t epoch, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::vector<std::vector<std::size_t>> split_shards(std::span<const std::size_t> order, std::size_t k) {
  if (k == 0) throw Error("cannot split into zero shards");
  if (k > order.size())
    throw Error("cannot split " + std::to_string(order.size()) + " samples into " +
                std::to_string(k) + " shards");
  std::vector<std::vector<std::size_t>> shards(k);
  const std::size_t base = order.size() / k;
  const std::size_t extra = order.size() % k;
  std::size_t pos = 0;
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t len = base + (s < extra ? 1 : 0);
    shards[s].assign(order.begin() + pos, order.begin() + pos + len);
    pos += len;
  }
  return shards;
}

namespace {

struct WorkerTally {
  std::size_t violations = 0;
  std::size_t non_violations = 0;
  std::size_t correct = 0;
};

void run_shard(std::span<const std::size_t> shard, std::span<const EncodedSequence> data,
               const FeatureAlphabet& alphabet, const LearnerConfig& learner, WeightStore& store,
               WorkerTally& tally) {
  for (std::size_t idx : shard) {
    const UpdateTerm term = compute_update_term(data[idx], store, alphabet);
    const std::uint64_t step = store.next_step();
    if (term.loss == 0) {
      ++tally.correct;
      continue;
    }
    // A stale read can produce z != y with s(z) < s(y); still applied.
    if (term.margin <= 0.0)
      ++tally.violations;
    else
      ++tally.non_violations;
    apply_update(store, term, learner, step);
  }
}

double dev_score(const FeatureAlphabet& alphabet, const WeightStore& store,
                 std::span<const Sequence> dev, Metric metric) {
  const std::vector<double> avg = store.averaged();
  const DenseWeights w(avg);
  std::vector<LabelSeq> pred;
  pred.reserve(dev.size());
  for (const auto& x : dev) pred.push_back(viterbi(x, w, alphabet).labels);
  return evaluate(metric, dev, pred, alphabet.labels());
}

}  // namespace

TrainResult train_encoded(const FeatureAlphabet& alphabet, std::span<const EncodedSequence> data,
                          std::span<const Sequence> dev, const TrainConfig& cfg,
                          WeightStore* final_store) {
  if (data.empty()) throw Error("no training data");
  cfg.validate(data.size());
  for (const auto& x : data)
    if (x.gold.size() != x.size() || x.size() == 0)
      throw Error("training sequence without gold labels");

  const std::size_t n = data.size();
  const std::size_t alphabet_size = alphabet.size();
  WeightStore store(alphabet_size);
  TrainResult result;
  result.report.dev_metric = resolve_metric(cfg.dev_metric, alphabet.labels());

  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = cfg.shuffle ? shuffle_epoch(n, epoch, cfg.seed) : identity;
    const auto shards = split_shards(order, cfg.threads);
    std::vector<WorkerTally> tallies(cfg.threads);
    std::vector<std::exception_ptr> errors(cfg.threads);

    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.threads == 1) {
      run_shard(shards[0], data, alphabet, cfg.learner, store, tallies[0]);
    } else {
      std::vector<std::jthread> workers;
      workers.reserve(cfg.threads);
      for (std::size_t k = 0; k < cfg.threads; ++k) {
        workers.emplace_back([&, k] {
          try {
            run_shard(shards[k], data, alphabet, cfg.learner, store, tallies[k]);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        });
      }
    }  // barrier: jthreads join here
    const auto t1 = std::chrono::steady_clock::now();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);

    EpochStats stats;
    stats.seconds = std::chrono::duration<double>(t1 - t0).count();
    for (const auto& t : tallies) {
      stats.violations += t.violations;
      stats.non_violations += t.non_violations;
      stats.correct += t.correct;
    }
    l2_decay(store, cfg.learner.l2, n);
    if (!dev.empty()) stats.dev_metric = dev_score(alphabet, store, dev, result.report.dev_metric);

    result.report.violations += stats.violations;
    result.report.non_violations += stats.non_violations;
    result.report.correct += stats.correct;
    result.report.epochs.push_back(stats);
  }

  if (alphabet.size() != alphabet_size) throw Error("feature alphabet changed during training");
  result.report.updates = result.report.violations + result.report.non_violations;
  result.report.update_count = store.update_count();
  result.weights = finalize_average(store, n, cfg.epochs);
  if (final_store) *final_store = store;
  return result;
}

TrainResult train(const FeatureAlphabet& alphabet, std::span<const Sequence> data,
                  std::span<const Sequence> dev, const TrainConfig& cfg) {
  if (data.empty()) throw Error("no training data");
  std::vector<EncodedSequence> encoded;
  encoded.reserve(data.size());
  for (const auto& x : data) {
    validate(x, alphabet.labels());
    if (!x.has_gold()) throw Error("training sequence without gold labels");
    encoded.push_back(alphabet.encode(x));
  }
  return train_encoded(alphabet, encoded, dev, cfg);
}

}  // namespace lfm
