#include "lfm/bench.hpp"

#include <sched.h>
#include <sys/resource.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <thread>

namespace lfm {

HardwareInfo detect_hardware() {
  HardwareInfo hw;
  hw.logical = std::thread::hardware_concurrency();
  cpu_set_t mask;
  CPU_ZERO(&mask);
  std::set<std::pair<long, long>> cores;
  if (sched_getaffinity(0, sizeof(mask), &mask) == 0) {
    hw.available = static_cast<unsigned>(CPU_COUNT(&mask));
    for (int cpu = 0; cpu < CPU_SETSIZE; ++cpu) {
      if (!CPU_ISSET(cpu, &mask)) continue;
      const std::filesystem::path topo =
          "/sys/devices/system/cpu/cpu" + std::to_string(cpu) + "/topology";
      long package = -1, core = cpu;
      std::ifstream(topo / "physical_package_id") >> package;
      std::ifstream(topo / "core_id") >> core;
      cores.emplace(package, core);
    }
  } else {
    hw.available = hw.logical;
  }
  hw.physical = cores.empty() ? hw.available : static_cast<unsigned>(cores.size());
  return hw;
}

long peak_rss_kib() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

void BenchPlan::validate() const {
  if (threads.empty()) throw Error("bench: no thread counts");
  if (!std::is_sorted(threads.begin(), threads.end()) ||
      std::adjacent_find(threads.begin(), threads.end()) != threads.end())
    throw Error("bench: thread counts must be strictly ascending");
  if (threads.front() < 1) throw Error("bench: thread counts must be positive");
  if (repetitions < 1) throw Error("bench: repetitions must be >= 1");
  if (learners.empty()) throw Error("bench: no learners");
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<BenchRow> run_bench(const BenchPlan& plan, const FeatureAlphabet& alphabet,
                                std::span<const EncodedSequence> train, std::span<const Sequence> dev,
                                std::ostream* log) {
  plan.validate();
  std::vector<BenchRow> rows;
  for (LearnerKind kind : plan.learners) {
    double baseline = 0.0;
    for (std::size_t k : plan.threads) {
      std::vector<double> epoch_times, metrics;
      for (std::size_t r = 0; r < plan.repetitions; ++r) {
        TrainConfig cfg = plan.base;
        cfg.threads = k;
        cfg.learner.kind = kind;
        cfg.seed = plan.base.seed + r;
        const auto result = train_encoded(alphabet, train, dev, cfg);
        for (const auto& e : result.report.epochs) epoch_times.push_back(e.seconds);
        if (!result.report.epochs.empty() && result.report.epochs.back().dev_metric)
          metrics.push_back(*result.report.epochs.back().dev_metric);
        if (log)
          *log << "bench " << to_string(kind) << " threads=" << k << " rep=" << r
               << " epoch_median=" << median(epoch_times) << "s\n";
      }
      BenchRow row;
      row.task = plan.task;
      row.learner = kind;
      row.threads = k;
      row.median_epoch_seconds = median(epoch_times);
      row.dev_metric = metrics.empty() ? 0.0 : median(metrics);
      // Relative to the smallest thread count, which is 1 in any sane plan.
      if (k == plan.threads.front()) baseline = row.median_epoch_seconds;
      row.speedup = k == plan.threads.front() ? 1.0 : baseline / row.median_epoch_seconds;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows, const HardwareInfo& hw) {
  out << "# hardware_threads=" << hw.logical << " available_cpus=" << hw.available
      << " physical_cores=" << hw.physical << '\n';
  out << kBenchHeader << '\n';
  for (const auto& r : rows) {
    out << r.task << ',' << to_string(r.learner) << ',' << r.threads << ',' << std::setprecision(6)
        << r.median_epoch_seconds << ',' << std::setprecision(4) << r.speedup << ','
        << std::setprecision(6) << r.dev_metric << '\n';
  }
}

}  // namespace lfm
