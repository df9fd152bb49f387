// Thread-scaling benchmark: training wall time and dev metric per
// (learner, thread count), with speedups relative to one thread.

#ifndef LFM_BENCH_HPP
#define LFM_BENCH_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lfm/trainer.hpp"

namespace lfm {

struct HardwareInfo {
  unsigned logical = 0;    // std::thread::hardware_concurrency
  unsigned available = 0;  // CPUs in this process's affinity mask
  unsigned physical = 0;   // distinct cores among the available CPUs
};

HardwareInfo detect_hardware();

// Peak resident set size of this process, in KiB.
long peak_rss_kib();

struct BenchPlan {
  std::vector<std::size_t> threads = {1, 4, 10};
  std::size_t repetitions = 3;
  std::vector<LearnerKind> learners = {LearnerKind::Perceptron, LearnerKind::Mira};
  std::string task = "synthetic";
  TrainConfig base;  // threads and learner.kind are overridden per point

  void validate() const;
};

struct BenchRow {
  std::string task;
  LearnerKind learner = LearnerKind::Perceptron;
  std::size_t threads = 1;
  double median_epoch_seconds = 0.0;
  double speedup = 1.0;
  double dev_metric = 0.0;
};

double median(std::vector<double> values);

// Repetition r uses seed base.seed + r. Each row's dev metric is the
// median over repetitions of the final-epoch dev metric.
std::vector<BenchRow> run_bench(const BenchPlan& plan, const FeatureAlphabet& alphabet,
                                std::span<const EncodedSequence> train, std::span<const Sequence> dev,
                                std::ostream* log = nullptr);

inline constexpr const char* kBenchHeader =
    "task,learner,threads,median_epoch_seconds,speedup,dev_metric";

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows, const HardwareInfo& hw);

}  // namespace lfm

#endif  // LFM_BENCH_HPP
