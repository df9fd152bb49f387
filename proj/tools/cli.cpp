#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <climits>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "lfm/bench.hpp"
#include "lfm/data.hpp"
#include "lfm/eval.hpp"
#include "lfm/model_io.hpp"
#include "lfm/trainer.hpp"

namespace lfm::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void Settings::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError(path + ":" + std::to_string(lineno) + ": empty key");
    set_config(key, trim(line.substr(eq + 1)));
  }
}

void Settings::set_config(const std::string& key, const std::string& value) { config_[key] = value; }
void Settings::set_flag(const std::string& key, const std::string& value) { flags_[key] = value; }

void Settings::check_keys(const std::set<std::string>& known) const {
  for (const auto& [key, value] : config_)
    if (!known.contains(key)) throw UsageError("unknown config key: " + key);
}

std::optional<std::string> Settings::raw(const std::string& key) const {
  if (auto it = flags_.find(key); it != flags_.end()) return it->second;
  if (key == "threads") {
    if (const char* env = std::getenv("LFM_THREADS"); env && *env) return std::string(env);
  }
  if (auto it = config_.find(key); it != config_.end()) return it->second;
  return std::nullopt;
}

std::string Settings::text(const std::string& key, const std::string& fallback) const {
  return raw(key).value_or(fallback);
}

long long Settings::integer(const std::string& key, long long fallback, long long min) const {
  const auto v = raw(key);
  if (!v) return fallback;
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size() || v->empty())
    throw UsageError("invalid integer for '" + key + "': '" + *v + "'");
  if (out < min)
    throw UsageError("'" + key + "' must be at least " + std::to_string(min) + ", got " + *v);
  return out;
}

double Settings::real(const std::string& key, double fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size() || v->empty())
    throw UsageError("invalid number for '" + key + "': '" + *v + "'");
  return out;
}

bool Settings::boolean(const std::string& key, bool fallback) const {
  const auto v = raw(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes" || *v == "on") return true;
  if (*v == "0" || *v == "false" || *v == "no" || *v == "off") return false;
  throw UsageError("invalid boolean for '" + key + "': '" + *v + "'");
}

namespace {

// Flag storage for one subcommand. Each flag doubles as a config key.
struct Flags {
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  std::vector<std::pair<std::string, CLI::Option*>> negations;  // --no-X sets X=false
  std::string config_path;
  CLI::Option* config = nullptr;

  explicit Flags(CLI::App* app) {
    config = app->add_option("--config", config_path, "flat key=value file; keys are the long flag names");
  }

  CLI::Option* add(CLI::App* app, const std::string& key, const std::string& help,
                   const std::string& names = "") {
    auto* opt = app->add_option(names.empty() ? "--" + key : names, values[key], help);
    options.emplace_back(key, opt);
    return opt;
  }
  void add_negation(CLI::App* app, const std::string& key, const std::string& help) {
    negations.emplace_back(key, app->add_flag("--no-" + key, help));
  }

  std::set<std::string> keys() const {
    std::set<std::string> k;
    for (const auto& [key, opt] : options) k.insert(key);
    for (const auto& [key, opt] : negations) k.insert(key);
    return k;
  }

  Settings resolve() const {
    Settings s;
    if (config->count()) {
      s.load_file(config_path);
      s.check_keys(keys());
    }
    for (const auto& [key, opt] : options)
      if (opt->count()) s.set_flag(key, values.at(key));
    for (const auto& [key, opt] : negations)
      if (opt->count()) s.set_flag(key, "false");
    return s;
  }
};

void add_synth_flags(CLI::App* app, Flags& f) {
  f.add(app, "synth", "use the synthetic HMM corpus ('default')");
  f.add(app, "synth-labels", "synthetic label count");
  f.add(app, "synth-vocab", "synthetic vocabulary size");
  f.add(app, "synth-transition", "transition Dirichlet concentration");
  f.add(app, "synth-emission", "emission Dirichlet concentration");
  f.add(app, "synth-min-length", "minimum sentence length");
  f.add(app, "synth-max-length", "maximum sentence length");
  f.add(app, "synth-size", "total sentences before the 80/10/10 split");
  f.add(app, "synth-seed", "generator seed");
}

void add_column_flags(CLI::App* app, Flags& f) {
  f.add(app, "word-col", "word column (0-based; negative counts from the end)");
  f.add(app, "pos-col", "POS column, if any");
  f.add(app, "label-col", "label column (default -1, the last)");
}

void add_train_flags(CLI::App* app, Flags& f) {
  f.add(app, "learner", "perceptron | mira");
  f.add(app, "epochs", "training passes T");
  f.add(app, "seed", "shuffle seed");
  f.add(app, "lr", "perceptron learning rate (default 0.02)");
  f.add(app, "mira-cap", "MIRA aggressiveness cap C (default 0.1)", "-C,--mira-cap");
  f.add(app, "l2", "L2 strength lambda, decayed per epoch as 1 - lambda/N (default 1)");
  f.add_negation(app, "shuffle", "process samples in file order");
  f.add(app, "templates", "standard | unigram | spec like 'w=-1,0,1;bigram;affix;pos'");
  f.add(app, "metric", "auto | accuracy | f1");
}

SynthSpec synth_spec(const Settings& s) {
  SynthSpec spec;
  spec.labels = static_cast<std::size_t>(s.integer("synth-labels", spec.labels, 1));
  spec.vocab = static_cast<std::size_t>(s.integer("synth-vocab", spec.vocab, 1));
  spec.transition_concentration = s.real("synth-transition", spec.transition_concentration);
  spec.emission_concentration = s.real("synth-emission", spec.emission_concentration);
  spec.min_length = static_cast<std::size_t>(s.integer("synth-min-length", spec.min_length, 1));
  spec.max_length = static_cast<std::size_t>(s.integer("synth-max-length", spec.max_length, 1));
  spec.size = static_cast<std::size_t>(s.integer("synth-size", spec.size, 1));
  spec.seed = static_cast<std::uint64_t>(s.integer("synth-seed", static_cast<long long>(spec.seed), 0));
  try {
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return spec;
}

ConllColumnSpec column_spec(const Settings& s) {
  ConllColumnSpec spec;
  spec.word = static_cast<int>(s.integer("word-col", spec.word, INT_MIN));
  if (s.raw("pos-col")) spec.pos = static_cast<int>(s.integer("pos-col", 0, INT_MIN));
  spec.label = static_cast<int>(s.integer("label-col", spec.label, INT_MIN));
  try {
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return spec;
}

TemplateSet templates(const Settings& s) {
  const auto name = s.text("templates", "standard");
  if (name == "standard") return TemplateSet::standard();
  if (name == "unigram") return TemplateSet::unigram();
  try {
    return TemplateSet::parse(name);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

TrainConfig train_config(const Settings& s) {
  TrainConfig cfg;
  cfg.epochs = static_cast<std::size_t>(s.integer("epochs", 10, 1));
  cfg.threads = static_cast<std::size_t>(s.integer("threads", 1, 1));
  cfg.seed = static_cast<std::uint64_t>(s.integer("seed", 1, 0));
  cfg.shuffle = s.boolean("shuffle", true);
  cfg.learner.learning_rate = s.real("lr", 0.02);
  cfg.learner.mira_cap = s.real("mira-cap", 0.1);
  cfg.learner.l2 = s.real("l2", 1.0);
  try {
    cfg.learner.kind = parse_learner(s.text("learner", "perceptron"));
    cfg.dev_metric = parse_metric(s.text("metric", "auto"));
    cfg.learner.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

struct Data {
  std::vector<Sequence> train;
  std::vector<Sequence> dev;
  LabelSet labels;
  std::string task;
};

Data load_data(const Settings& s) {
  const auto train_path = s.raw("train");
  const auto synth = s.raw("synth");
  if (train_path && synth) throw UsageError("--train and --synth are mutually exclusive");
  if (synth) {
    if (*synth != "default") throw UsageError("--synth takes 'default' (tune it with --synth-* flags)");
    if (s.raw("dev")) throw UsageError("--dev cannot be combined with --synth");
    auto corpus = generate_synthetic(synth_spec(s));
    return {std::move(corpus.train), std::move(corpus.dev), std::move(corpus.labels), "synthetic"};
  }
  if (!train_path) throw UsageError("no training data: pass --train FILE or --synth default");
  const auto cols = column_spec(s);
  auto train = read_conll(*train_path, cols);
  Data d{std::move(train.sentences), {}, std::move(train.labels), fs::path(*train_path).stem().string()};
  if (const auto dev_path = s.raw("dev")) d.dev = read_conll(*dev_path, cols, &d.labels).sentences;
  return d;
}

void check_threads(const TrainConfig& cfg, std::size_t n) {
  try {
    cfg.validate(n);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

int cmd_train(const Flags& flags) {
  const auto s = flags.resolve();
  const auto cfg = train_config(s);
  const auto tmpl = templates(s);
  const auto data = load_data(s);
  check_threads(cfg, data.train.size());

  const auto alphabet = build_alphabet(data.train, tmpl, data.labels);
  const auto result = train(alphabet, data.train, data.dev, cfg);
  const Model model{alphabet, result.weights};
  const double train_acc = token_accuracy(data.train, model.tag(data.train));

  if (const auto path = s.raw("model")) save_model(*path, model);
  if (const auto path = s.raw("report")) {
    std::ofstream out(*path);
    if (!out) throw Error("cannot write report: " + *path);
    out << "epoch,seconds,violations,non_violations,correct,dev_metric\n";
    for (std::size_t e = 0; e < result.report.epochs.size(); ++e) {
      const auto& st = result.report.epochs[e];
      out << e + 1 << ',' << st.seconds << ',' << st.violations << ',' << st.non_violations << ','
          << st.correct << ',' << (st.dev_metric ? fixed6(*st.dev_metric) : "") << '\n';
    }
    if (!out) throw Error("cannot write report: " + *path);
  }

  double seconds = 0.0;
  for (const auto& st : result.report.epochs) seconds += st.seconds;
  const auto& r = result.report;
  std::cout << "task=" << data.task << '\n'
            << "learner=" << to_string(cfg.learner.kind) << '\n'
            << "threads=" << cfg.threads << '\n'
            << "epochs=" << cfg.epochs << '\n'
            << "sentences=" << data.train.size() << '\n'
            << "features=" << alphabet.size() << '\n'
            << "updates=" << r.updates << '\n'
            << "violations=" << r.violations << '\n'
            << "final_epoch_violations=" << r.epochs.back().violations << '\n'
            << "update_count=" << r.update_count << '\n'
            << "train_accuracy=" << fixed6(train_acc) << '\n';
  if (r.epochs.back().dev_metric)
    std::cout << "dev_" << to_string(r.dev_metric) << '=' << fixed6(*r.epochs.back().dev_metric) << '\n';
  std::cout << "train_seconds=" << seconds << '\n' << "peak_rss_kib=" << peak_rss_kib() << '\n';
  return kExitOk;
}

// Expresses `pred` in `gold`'s label set, extending it with labels only
// the predictions use.
std::vector<LabelSeq> align_predictions(const Corpus& gold, const Corpus& pred, LabelSet& labels) {
  if (gold.sentences.size() != pred.sentences.size())
    throw Error("gold has " + std::to_string(gold.sentences.size()) + " sentences, predictions have " +
                std::to_string(pred.sentences.size()));
  auto names = gold.labels.names();
  for (const auto& n : pred.labels.names())
    if (!gold.labels.find(n)) names.push_back(n);
  labels = LabelSet(names);
  std::vector<LabelSeq> out;
  for (std::size_t i = 0; i < gold.sentences.size(); ++i) {
    const auto& g = gold.sentences[i];
    const auto& p = pred.sentences[i];
    if (g.size() != p.size())
      throw Error("sentence " + std::to_string(i + 1) + ": length mismatch between gold and predictions");
    LabelSeq seq;
    for (std::size_t t = 0; t < p.size(); ++t) {
      if (g.tokens[t].word != p.tokens[t].word)
        throw Error("sentence " + std::to_string(i + 1) + " token " + std::to_string(t + 1) +
                    ": word mismatch '" + g.tokens[t].word + "' vs '" + p.tokens[t].word + "'");
      seq.push_back(*labels.find(pred.labels.name(p.gold[t])));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

int cmd_eval(const Flags& flags, bool csv) {
  const auto s = flags.resolve();
  const auto cols = column_spec(s);
  const auto model_path = s.raw("model");
  const auto data_path = s.raw("data");
  const auto gold_path = s.raw("gold");
  const auto pred_path = s.raw("pred");

  std::vector<Sequence> gold;
  std::vector<LabelSeq> pred;
  LabelSet labels({"_"});
  if (model_path) {
    if (!data_path) throw UsageError("--model needs --data");
    if (gold_path || pred_path) throw UsageError("use either --model/--data or --gold/--pred");
    const auto model = load_model(*model_path);
    labels = model.alphabet.labels();
    gold = read_conll(*data_path, cols, &labels).sentences;
    pred = model.tag(gold);
    if (const auto out = s.raw("out")) {
      auto tagged = gold;
      for (std::size_t i = 0; i < tagged.size(); ++i) tagged[i].gold = pred[i];
      write_conll(fs::path(*out), tagged, labels);
    }
  } else if (gold_path && pred_path) {
    if (data_path) throw UsageError("--data needs --model");
    const auto g = read_conll(*gold_path, cols);
    const auto p = read_conll(*pred_path, cols);
    pred = align_predictions(g, p, labels);
    gold = g.sentences;
  } else {
    throw UsageError("eval needs --model with --data, or --gold with --pred");
  }

  std::size_t tokens = 0;
  for (const auto& x : gold) tokens += x.size();
  const double acc = token_accuracy(gold, pred);
  std::optional<SpanScores> spans;
  if (is_bio_shaped(labels)) spans = span_f1(gold, pred, labels);

  if (csv) {
    std::cout << "sentences,tokens,accuracy,precision,recall,f1\n"
              << gold.size() << ',' << tokens << ',' << fixed6(acc) << ',';
    if (spans) std::cout << fixed6(spans->precision) << ',' << fixed6(spans->recall) << ',' << fixed6(spans->f1);
    else std::cout << ",,";
    std::cout << '\n';
  } else {
    std::cout << "sentences=" << gold.size() << '\n'
              << "tokens=" << tokens << '\n'
              << "accuracy=" << fixed6(acc) << '\n';
    if (spans)
      std::cout << "precision=" << fixed6(spans->precision) << '\n'
                << "recall=" << fixed6(spans->recall) << '\n'
                << "f1=" << fixed6(spans->f1) << '\n';
  }
  return kExitOk;
}

int cmd_bench(const Flags& flags) {
  const auto s = flags.resolve();
  BenchPlan plan;
  plan.base = train_config(s);
  if (!s.raw("epochs")) plan.base.epochs = 3;
  plan.repetitions = static_cast<std::size_t>(s.integer("reps", 3, 1));
  if (const auto list = s.raw("threads-list")) {
    plan.threads.clear();
    for (const auto& t : split_list(*list)) {
      Settings one;
      one.set_flag("threads-list", t);
      plan.threads.push_back(static_cast<std::size_t>(one.integer("threads-list", 0, 1)));
    }
  }
  if (const auto list = s.raw("learners")) {
    plan.learners.clear();
    try {
      for (const auto& l : split_list(*list)) plan.learners.push_back(parse_learner(l));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  try {
    plan.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto tmpl = templates(s);
  auto data = load_data(s);
  plan.task = s.text("task", data.task);
  const auto hw = detect_hardware();
  if (plan.threads.back() > hw.logical)
    std::cerr << "warning: " << plan.threads.back() << " threads requested, hardware has " << hw.logical
              << '\n';
  plan.base.threads = plan.threads.back();
  check_threads(plan.base, data.train.size());

  const auto alphabet = build_alphabet(data.train, tmpl, data.labels);
  std::vector<EncodedSequence> encoded;
  encoded.reserve(data.train.size());
  for (const auto& x : data.train) encoded.push_back(alphabet.encode(x));
  const auto rows = run_bench(plan, alphabet, encoded, data.dev, &std::cerr);

  if (const auto path = s.raw("out")) {
    std::ofstream out(*path);
    if (!out) throw Error("cannot write bench output: " + *path);
    write_bench_csv(out, rows, hw);
    if (!out) throw Error("cannot write bench output: " + *path);
  } else {
    write_bench_csv(std::cout, rows, hw);
  }
  return kExitOk;
}

int cmd_gen(const Flags& flags) {
  const auto s = flags.resolve();
  const auto spec = synth_spec(s);
  const auto dir = s.raw("out");
  if (!dir) throw UsageError("gen needs --out DIR");
  const auto corpus = generate_synthetic(spec);
  fs::create_directories(*dir);
  const fs::path base(*dir);
  write_conll(base / "train.conll", corpus.train, corpus.labels);
  write_conll(base / "dev.conll", corpus.dev, corpus.labels);
  write_conll(base / "test.conll", corpus.test, corpus.labels);
  {
    std::ofstream m(base / "manifest.txt");
    m << spec.to_manifest();
    m << "train_sentences=" << corpus.train.size() << '\n'
      << "dev_sentences=" << corpus.dev.size() << '\n'
      << "test_sentences=" << corpus.test.size() << '\n';
    if (!m) throw Error("cannot write " + (base / "manifest.txt").string());
  }
  std::cout << "train=" << corpus.train.size() << " dev=" << corpus.dev.size()
            << " test=" << corpus.test.size() << " -> " << base.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"lfm: lock-free parallel structured perceptron and MIRA sequence labeling"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a model");
  Flags train_flags(train);
  add_synth_flags(train, train_flags);
  add_column_flags(train, train_flags);
  add_train_flags(train, train_flags);
  train_flags.add(train, "train", "training CoNLL file");
  train_flags.add(train, "dev", "development CoNLL file");
  train_flags.add(train, "threads", "worker threads K (env LFM_THREADS when the flag is absent)", "-j,--threads");
  train_flags.add(train, "model", "write the model here");
  train_flags.add(train, "report", "write the per-epoch CSV report here");

  auto* eval = app.add_subcommand("eval", "evaluate a model or a prediction file");
  Flags eval_flags(eval);
  add_column_flags(eval, eval_flags);
  eval_flags.add(eval, "model", "model file");
  eval_flags.add(eval, "data", "labelled CoNLL file to tag with --model");
  eval_flags.add(eval, "gold", "gold CoNLL file");
  eval_flags.add(eval, "pred", "predicted CoNLL file, aligned with --gold");
  eval_flags.add(eval, "out", "write --model predictions here");
  bool csv = false;
  eval->add_flag("--csv", csv, "machine-readable output");

  auto* bench = app.add_subcommand("bench", "thread-scaling benchmark");
  Flags bench_flags(bench);
  add_synth_flags(bench, bench_flags);
  add_column_flags(bench, bench_flags);
  add_train_flags(bench, bench_flags);
  bench_flags.add(bench, "train", "training CoNLL file");
  bench_flags.add(bench, "dev", "development CoNLL file");
  bench_flags.add(bench, "threads-list", "comma-separated ascending thread counts (default 1,4,10)");
  bench_flags.add(bench, "reps", "repetitions per point (default 3)");
  bench_flags.add(bench, "learners", "comma-separated learners (default perceptron,mira)");
  bench_flags.add(bench, "task", "task id for the CSV");
  bench_flags.add(bench, "out", "CSV output path (default stdout)");

  auto* gen = app.add_subcommand("gen", "write a synthetic corpus");
  Flags gen_flags(gen);
  add_synth_flags(gen, gen_flags);
  gen_flags.add(gen, "out", "output directory");

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cmd_train(train_flags);
    if (eval->parsed()) return cmd_eval(eval_flags, csv);
    if (bench->parsed()) return cmd_bench(bench_flags);
    if (gen->parsed()) return cmd_gen(gen_flags);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace lfm::cli
