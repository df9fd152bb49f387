// Acceptance suite: one PASS/FAIL line per criterion. A criterion whose
// hardware precondition is unmet prints PRECONDITION-UNMET with the
// measurement; it is not counted as a pass and does not fail the run.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lfm/bench.hpp"
#include "lfm/data.hpp"
#include "lfm/decoder.hpp"
#include "lfm/learners.hpp"
#include "lfm/model_io.hpp"
#include "lfm/trainer.hpp"
#include "test_util.hpp"

using namespace lfm;
using namespace lfm::testing;

namespace {

// Pinned tolerances and limits.
constexpr int kOracleInstances = 1000;
constexpr double kOracleSeconds = 10.0;
constexpr int kMiraTerms = 200;
constexpr double kMiraGrid = 1e-4;
constexpr double kMiraTauTol = 1e-3;
constexpr double kMiraMarginTol = 1e-9;
constexpr double kMiraSeconds = 5.0;
constexpr double kAverageTol = 1e-10;
constexpr std::size_t kAverageUpdates = 200;
constexpr std::size_t kConvergeEpochs = 20;
constexpr double kConvergeAccuracy = 0.99;
constexpr double kConvergeSeconds = 60.0;
constexpr double kParityPoints = 0.5;
constexpr std::size_t kParityEpochs = 10;
constexpr double kParitySeconds = 600.0;
constexpr double kSpeedupMin = 2.5;
constexpr unsigned kSpeedupCores = 4;
constexpr double kSpeedEpochSeconds = 2.0;
constexpr double kMemoryRatio = 1.2;

enum class Status { Pass, Fail, Unmet };

struct Outcome {
  Status status;
  std::string detail;
};

int failures = 0;
int unmet = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {Status::Fail, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "PRECONDITION-UNMET";
  if (o.status == Status::Fail) ++failures;
  if (o.status == Status::Unmet) ++unmet;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", secs);
  std::cout << tag << "  " << name << ": " << o.detail << " [" << buf << "]" << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

std::vector<EncodedSequence> encode_all(const FeatureAlphabet& a, std::span<const Sequence> xs) {
  std::vector<EncodedSequence> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(a.encode(x));
  return out;
}

// 1 ---------------------------------------------------------------------
Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> nl(1, 4), len(1, 6);
  int score_mismatch = 0, label_mismatch = 0, unique = 0;
  for (int trial = 0; trial < kOracleInstances; ++trial) {
    const std::size_t L = nl(rng);
    const auto corpus = random_corpus(rng, 8, 6, L);
    const auto alpha = build_alphabet(corpus, TemplateSet::standard(), make_labels(L));
    const auto x = random_sequence(rng, len(rng), L);
    const auto w = dyadic_weights(rng, alpha.size());
    const DenseWeights dw(w);
    const auto v = viterbi(x, dw, alpha);
    const auto b = brute_force_best(x, dw, alpha);
    if (v.score != b.score) ++score_mismatch;
    // Uniqueness: count labelings attaining the best score.
    std::size_t optima = 0;
    LabelSeq z(x.size(), 0);
    for (bool more = true; more;) {
      if (score(dw, extract_features(x, z, alpha)) == b.score) ++optima;
      more = false;
      for (std::size_t p = z.size(); p-- > 0;) {
        if (++z[p] < L) {
          more = true;
          break;
        }
        z[p] = 0;
      }
    }
    if (optima == 1) {
      ++unique;
      if (v.labels != b.labels) ++label_mismatch;
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = score_mismatch == 0 && label_mismatch == 0 && secs < kOracleSeconds;
  return {ok ? Status::Pass : Status::Fail,
          std::to_string(kOracleInstances) + " instances, score mismatches " + std::to_string(score_mismatch) +
              ", label mismatches " + std::to_string(label_mismatch) + " of " + std::to_string(unique) +
              " unique optima, " + fmt(secs, 2) + "s (limit " + fmt(kOracleSeconds, 0) + "s)"};
}

// 2 ---------------------------------------------------------------------
double grid_tau(double loss, double margin, double norm, double cap) {
  const auto steps = static_cast<long>(std::ceil(cap / kMiraGrid));
  for (long k = 0; k <= steps; ++k) {
    const double tau = std::min(cap, k * kMiraGrid);
    if (margin + tau * norm >= loss) return tau;
  }
  return cap;
}

Outcome mira_closed_form() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(202);
  const auto corpus = random_corpus(rng, 40, 8, 4);
  const auto alpha = build_alphabet(corpus, TemplateSet::standard(), make_labels(4));
  std::uniform_int_distribution<std::size_t> pick(0, corpus.size() - 1);
  std::uniform_real_distribution<double> cap_dist(0.05, 2.0);
  double worst_tau = 0.0, worst_margin = 0.0;
  int terms = 0;
  while (terms < kMiraTerms) {
    auto store = store_from(uniform_weights(rng, alpha.size()));
    const auto& x = corpus[pick(rng)];
    const auto t = compute_update_term(x, store, alpha);
    if (t.loss == 0) continue;
    ++terms;
    const double norm = t.delta.squared_norm();
    const double cap = cap_dist(rng);
    worst_tau = std::max(worst_tau, std::abs(mira_step(t, cap) - grid_tau(t.loss, t.margin, norm, cap)));
    const double uncapped = std::numeric_limits<double>::max();
    mira_apply(store, t, uncapped);
    const double after =
        score(store, extract_features(x, x.gold, alpha)) - score(store, extract_features(x, t.predicted, alpha));
    worst_margin = std::max(worst_margin, std::abs(after - static_cast<double>(t.loss)));
  }
  const double secs = seconds_since(t0);
  const bool ok = worst_tau <= kMiraTauTol && worst_margin <= kMiraMarginTol && secs < kMiraSeconds;
  std::ostringstream d;
  d << terms << " terms, max |tau - grid| " << worst_tau << " (tol " << kMiraTauTol << "), max |margin - loss| "
    << worst_margin << " (tol " << kMiraMarginTol << "), " << fmt(secs, 2) << "s (limit " << kMiraSeconds << "s)";
  return {ok ? Status::Pass : Status::Fail, d.str()};
}

// 3 ---------------------------------------------------------------------
Outcome averaging_exactness() {
  std::mt19937_64 rng(303);
  const auto corpus = random_corpus(rng, kAverageUpdates, 6, 3);
  const auto alpha = build_alphabet(corpus, TemplateSet::standard(), make_labels(3));
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.learner.learning_rate = 0.5;
  cfg.seed = 3;
  const auto result = train(alpha, corpus, {}, cfg);

  std::vector<double> w(alpha.size(), 0.0), v(alpha.size(), 0.0);
  for (std::size_t idx : shuffle_epoch(corpus.size(), 0, cfg.seed)) {
    const auto& x = corpus[idx];
    const auto z = viterbi(x, DenseWeights(w), alpha).labels;
    if (z != x.gold) {
      const auto delta = extract_features(x, x.gold, alpha) - extract_features(x, z, alpha);
      for (const auto& e : delta.entries()) w[e.index] += cfg.learner.learning_rate * e.value;
    }
    for (std::size_t j = 0; j < w.size(); ++j) v[j] += w[j];
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j)
    worst = std::max(worst, std::abs(result.weights[j] - v[j] / static_cast<double>(kAverageUpdates)));
  std::ostringstream d;
  d << result.report.update_count << " update steps (" << result.report.updates
    << " non-zero), max |lazy - naive| " << worst << " (tol " << kAverageTol << ")";
  const bool ok = worst <= kAverageTol && result.report.update_count == kAverageUpdates;
  return {ok ? Status::Pass : Status::Fail, d.str()};
}

// 4 ---------------------------------------------------------------------
Outcome perceptron_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto synth = generate_synthetic(SynthSpec{});
  const auto alpha = build_alphabet(synth.train, TemplateSet::standard(), synth.labels);
  TrainConfig cfg;
  cfg.epochs = kConvergeEpochs;
  cfg.threads = 1;
  cfg.learner.learning_rate = 1.0;
  cfg.learner.l2 = 0.0;
  const auto r = train(alpha, synth.train, {}, cfg);
  std::size_t first_clean = 0;
  for (std::size_t e = 0; e < r.report.epochs.size() && !first_clean; ++e)
    if (r.report.epochs[e].violations == 0) first_clean = e + 1;
  const double acc = token_accuracy(synth.train, Model{alpha, r.weights}.tag(synth.train));
  const double secs = seconds_since(t0);
  const bool ok = first_clean > 0 && acc >= kConvergeAccuracy && secs < kConvergeSeconds;
  return {ok ? Status::Pass : Status::Fail,
          "first zero-violation epoch " + (first_clean ? std::to_string(first_clean) : std::string("none")) +
              " (limit " + std::to_string(kConvergeEpochs) + "), train accuracy " + fmt(acc) + " (min " +
              fmt(kConvergeAccuracy, 2) + "), " + fmt(secs, 2) + "s (limit " + fmt(kConvergeSeconds, 0) + "s)"};
}

// 5 ---------------------------------------------------------------------
struct ParityResult {
  bool ok = true;
  std::string detail;
};

ParityResult parity_on(const SynthSpec& spec) {
  const auto synth = generate_synthetic(spec);
  const auto alpha = build_alphabet(synth.train, TemplateSet::standard(), synth.labels);
  const auto enc = encode_all(alpha, synth.train);
  ParityResult out;
  std::ostringstream d;
  for (auto kind : {LearnerKind::Perceptron, LearnerKind::Mira}) {
    double base = 0.0;
    d << to_string(kind) << " [";
    for (std::size_t k : {1, 4, 10}) {
      std::vector<double> runs;
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        TrainConfig cfg;
        cfg.epochs = kParityEpochs;
        cfg.threads = k;
        cfg.seed = seed;
        cfg.learner.kind = kind;
        cfg.learner.learning_rate = 0.02;
        cfg.learner.l2 = 1.0;
        cfg.learner.mira_cap = 0.1;
        cfg.dev_metric = Metric::Accuracy;
        const auto r = train_encoded(alpha, enc, synth.dev, cfg);
        runs.push_back(*r.report.epochs.back().dev_metric);
      }
      const double m = 100.0 * median(runs);
      if (k == 1) base = m;
      else if (std::abs(m - base) > kParityPoints) out.ok = false;
      d << "K=" << k << ' ' << fmt(m, 2) << (k == 10 ? "" : ", ");
    }
    d << "] ";
  }
  d << "(max spread " << kParityPoints << " points)";
  out.detail = d.str();
  return out;
}

Outcome accuracy_parity() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = parity_on(SynthSpec{});
  const double secs = seconds_since(t0);
  const bool ok = r.ok && secs < kParitySeconds;
  return {ok ? Status::Pass : Status::Fail,
          "dev accuracy median of 3: " + r.detail + ", " + fmt(secs, 1) + "s (limit " + fmt(kParitySeconds, 0) + "s)"};
}

Outcome supplementary_parity() {
  SynthSpec spec;
  spec.transition_concentration = 1.0;
  spec.emission_concentration = 0.05;
  const auto r = parity_on(spec);
  return {r.ok ? Status::Pass : Status::Fail, "harder corpus (transition 1.0, emission 0.05): " + r.detail};
}

// 6, 7 ------------------------------------------------------------------
// Sized so one single-threaded perceptron epoch takes at least
// kSpeedEpochSeconds; doubled until it does.
SynthSpec speed_spec(std::size_t size) {
  SynthSpec spec;
  spec.labels = 40;
  spec.vocab = 300;
  spec.transition_concentration = 0.1;
  spec.emission_concentration = 0.05;
  spec.min_length = 10;
  spec.max_length = 40;
  spec.size = size;
  spec.seed = 7;
  return spec;
}

std::size_t speed_size = 0;

struct SpeedCorpus {
  SynthCorpus synth;
  FeatureAlphabet alphabet;
  std::vector<EncodedSequence> encoded;
  double probe_seconds;
};

SpeedCorpus build_speed_corpus() {
  for (std::size_t size = 40000;; size *= 2) {
    auto synth = generate_synthetic(speed_spec(size));
    auto alpha = build_alphabet(synth.train, TemplateSet::standard(), synth.labels);
    auto enc = encode_all(alpha, synth.train);
    TrainConfig cfg;
    cfg.epochs = 1;
    const auto r = train_encoded(alpha, enc, {}, cfg);
    const double secs = r.report.epochs[0].seconds;
    if (secs >= kSpeedEpochSeconds || size >= 640000) {
      speed_size = size;
      return {std::move(synth), std::move(alpha), std::move(enc), secs};
    }
  }
}

Outcome speedup() {
  const auto hw = detect_hardware();
  const auto corpus = build_speed_corpus();
  BenchPlan plan;
  plan.threads = {1, 4};
  if (hw.logical >= 10) plan.threads.push_back(10);
  plan.repetitions = 3;
  plan.base.epochs = 2;
  plan.base.learner.learning_rate = 0.02;
  plan.base.learner.l2 = 1.0;
  const auto rows = run_bench(plan, corpus.alphabet, corpus.encoded, {}, nullptr);

  bool ok = true;
  std::ostringstream d;
  d << "hardware threads " << hw.logical << ", available " << hw.available << ", physical cores " << hw.physical
    << "; corpus " << corpus.synth.train.size() << " sentences, 1-thread epoch " << fmt(corpus.probe_seconds, 2)
    << "s; ";
  for (auto kind : plan.learners) {
    double s4 = 0.0, s10 = 0.0, t1 = 0.0;
    for (const auto& r : rows) {
      if (r.learner != kind) continue;
      if (r.threads == 1) t1 = r.median_epoch_seconds;
      if (r.threads == 4) s4 = r.speedup;
      if (r.threads == 10) s10 = r.speedup;
    }
    d << to_string(kind) << " t1 " << fmt(t1, 2) << "s speedup@4 " << fmt(s4, 2) << "x";
    if (s4 < kSpeedupMin) ok = false;
    if (hw.logical >= 10) {
      d << " speedup@10 " << fmt(s10, 2) << "x";
      if (s10 <= s4) ok = false;
    }
    d << "; ";
  }
  if (corpus.probe_seconds < kSpeedEpochSeconds) ok = false;
  d << "(min " << kSpeedupMin << "x at 4 threads)";
  if (std::min(hw.physical, hw.available) < kSpeedupCores)
    return {Status::Unmet, "needs >= " + std::to_string(kSpeedupCores) + " physical cores; " + d.str()};
  return {ok ? Status::Pass : Status::Fail, d.str()};
}

// Peak RSS of one CLI training run, in KiB, via wait4.
long cli_peak_rss(std::size_t threads) {
  const auto spec = speed_spec(speed_size ? speed_size : 40000);
  std::vector<std::string> args = {LFM_CLI_PATH,
                                   "train",
                                   "--synth",
                                   "default",
                                   "--synth-labels",
                                   std::to_string(spec.labels),
                                   "--synth-vocab",
                                   std::to_string(spec.vocab),
                                   "--synth-transition",
                                   "0.1",
                                   "--synth-emission",
                                   "0.05",
                                   "--synth-min-length",
                                   std::to_string(spec.min_length),
                                   "--synth-max-length",
                                   std::to_string(spec.max_length),
                                   "--synth-size",
                                   std::to_string(spec.size),
                                   "--synth-seed",
                                   std::to_string(spec.seed),
                                   "--epochs",
                                   "1",
                                   "--threads",
                                   std::to_string(threads)};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  const pid_t pid = ::fork();
  if (pid < 0) throw Error("fork failed");
  if (pid == 0) {
    if (!std::freopen("/dev/null", "w", stdout)) ::_exit(126);
    ::execv(argv[0], argv.data());
    ::_exit(127);
  }
  int status = 0;
  rusage usage{};
  if (::wait4(pid, &status, 0, &usage) < 0) throw Error("wait4 failed");
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw Error("training run with " + std::to_string(threads) + " threads failed");
  return usage.ru_maxrss;
}

Outcome memory() {
  const long one = cli_peak_rss(1);
  const long ten = cli_peak_rss(10);
  const double ratio = static_cast<double>(ten) / static_cast<double>(one);
  return {ratio <= kMemoryRatio ? Status::Pass : Status::Fail,
          "peak RSS K=1 " + std::to_string(one) + " KiB, K=10 " + std::to_string(ten) + " KiB, ratio " + fmt(ratio, 3) +
              " (max " + fmt(kMemoryRatio, 1) + ")"};
}

// 8 ---------------------------------------------------------------------
Outcome determinism() {
  const auto synth = generate_synthetic(SynthSpec{});
  const auto alpha = build_alphabet(synth.train, TemplateSet::standard(), synth.labels);
  std::string bytes[2];
  for (auto kind : {LearnerKind::Perceptron, LearnerKind::Mira}) {
    for (auto& b : bytes) {
      TrainConfig cfg;
      cfg.epochs = 5;
      cfg.seed = 7;
      cfg.learner.kind = kind;
      cfg.learner.learning_rate = 0.02;
      cfg.learner.l2 = 1.0;
      b = serialize_model(Model{alpha, train(alpha, synth.train, synth.dev, cfg).weights});
    }
    if (bytes[0] != bytes[1])
      return {Status::Fail, std::string(to_string(kind)) + " K=1 model files differ"};
  }
  return {Status::Pass, "two K=1 runs per learner serialize to identical " + std::to_string(bytes[0].size()) +
                            "-byte model files"};
}

// 9 ---------------------------------------------------------------------
Outcome conservation() {
  SynthSpec spec;
  spec.transition_concentration = 1.0;
  spec.emission_concentration = 0.05;
  const auto synth = generate_synthetic(spec);
  const auto alpha = build_alphabet(synth.train, TemplateSet::standard(), synth.labels);
  const auto enc = encode_all(alpha, synth.train);
  int runs = 0;
  for (auto kind : {LearnerKind::Perceptron, LearnerKind::Mira}) {
    for (std::size_t k : {1, 2, 3, 4, 8, 10, 16}) {
      for (std::size_t epochs : {1, 3}) {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.threads = k;
        cfg.learner.kind = kind;
        const auto r = train_encoded(alpha, enc, {}, cfg);
        ++runs;
        if (r.report.update_count != enc.size() * epochs)
          return {Status::Fail, std::string(to_string(kind)) + " K=" + std::to_string(k) + " T=" +
                                    std::to_string(epochs) + ": update_count " + std::to_string(r.report.update_count) +
                                    " != " + std::to_string(enc.size() * epochs)};
      }
    }
  }
  return {Status::Pass, "update_count == N*T in all " + std::to_string(runs) + " runs (K in 1..16, T in {1,3})"};
}

}  // namespace

int main() {
  std::cout << "lfm acceptance suite" << std::endl;
  report("1 oracle equivalence", oracle_equivalence);
  report("2 MIRA closed form", mira_closed_form);
  report("3 averaging exactness", averaging_exactness);
  report("4 perceptron convergence", perceptron_convergence);
  report("5 accuracy parity", accuracy_parity);
  report("5+ accuracy parity, supplementary", supplementary_parity);
  report("6 speedup", speedup);
  report("7 memory", memory);
  report("8 determinism", determinism);
  report("9 update-count conservation", conservation);
  std::cout << "summary: " << failures << " failed, " << unmet << " precondition unmet" << std::endl;
  return failures == 0 ? 0 : 1;
}
