#include "lfm/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <unordered_map>

namespace lfm {

void ConllColumnSpec::validate() const {
  if (word == label) throw Error("word and label columns must differ");
  if (pos && (*pos == word || *pos == label)) throw Error("POS column must differ from word/label");
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> cols;
  std::istringstream in(line);
  std::string c;
  while (in >> c) cols.push_back(c);
  return cols;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::size_t resolve(int col, std::size_t width) {
  long c = col < 0 ? static_cast<long>(width) + col : col;
  return static_cast<std::size_t>(c);
}

}  // namespace

Corpus parse_conll(std::istream& in, const ConllColumnSpec& spec, const LabelSet* fixed,
                   const std::string& source) {
  spec.validate();
  std::vector<std::string> inferred;
  std::unordered_map<std::string, LabelId> inferred_index;

  struct RawSentence {
    Sequence seq;
    std::vector<std::string> tags;
  };
  std::vector<RawSentence> raw;
  RawSentence cur;
  std::size_t width = 0;

  auto flush = [&] {
    if (!cur.seq.tokens.empty()) raw.push_back(std::move(cur));
    cur = RawSentence{};
    width = 0;
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      flush();
      continue;
    }
    if (!spec.comment_prefix.empty() && line.starts_with(spec.comment_prefix)) continue;
    auto cols = split_ws(line);
    const auto where = source + ":" + std::to_string(lineno);
    if (width == 0) {
      width = cols.size();
    } else if (cols.size() != width) {
      throw Error(where + ": ragged row (" + std::to_string(cols.size()) + " columns, expected " +
                  std::to_string(width) + ")");
    }
    auto col = [&](int c) -> const std::string& {
      const std::size_t idx = resolve(c, cols.size());
      if (idx >= cols.size()) throw Error(where + ": missing column " + std::to_string(c));
      return cols[idx];
    };
    if (resolve(spec.word, cols.size()) == resolve(spec.label, cols.size()))
      throw Error(where + ": word and label columns coincide");
    Token tok{col(spec.word), std::nullopt};
    if (spec.pos) tok.pos = col(*spec.pos);
    cur.seq.tokens.push_back(std::move(tok));
    const std::string& tag = col(spec.label);
    if (fixed) {
      auto id = fixed->find(tag);
      if (!id) throw Error(where + ": unknown label '" + tag + "'");
      cur.seq.gold.push_back(*id);
    } else {
      auto [it, added] = inferred_index.emplace(tag, static_cast<LabelId>(inferred.size()));
      if (added) inferred.push_back(tag);
      cur.seq.gold.push_back(it->second);
    }
  }
  flush();

  Corpus out;
  out.labels = fixed ? *fixed : (inferred.empty() ? LabelSet{} : LabelSet(inferred));
  out.sentences.reserve(raw.size());
  for (auto& r : raw) out.sentences.push_back(std::move(r.seq));
  return out;
}

Corpus read_conll(const std::filesystem::path& path, const ConllColumnSpec& spec,
                  const LabelSet* fixed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return parse_conll(in, spec, fixed, path.string());
}

void write_conll(std::ostream& out, std::span<const Sequence> sentences, const LabelSet& labels) {
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.tokens[i].word;
      if (s.tokens[i].pos) out << ' ' << *s.tokens[i].pos;
      out << ' ' << labels.name(s.has_gold() ? s.gold[i] : 0) << '\n';
    }
    out << '\n';
  }
}

void write_conll(const std::filesystem::path& path, std::span<const Sequence> sentences,
                 const LabelSet& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_conll(out, sentences, labels);
  if (!out) throw Error("write failed: " + path.string());
}

ConllColumnSpec written_columns(std::span<const Sequence> sentences) {
  ConllColumnSpec spec;
  const bool has_pos = !sentences.empty() && !sentences.front().tokens.empty() &&
                       sentences.front().tokens.front().pos.has_value();
  spec.word = 0;
  if (has_pos) spec.pos = 1;
  spec.label = -1;
  return spec;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

void SynthSpec::validate() const {
  if (labels < 1 || vocab < 1 || size < 1) throw Error("synthetic spec counts must be >= 1");
  if (min_length < 1 || max_length < min_length) throw Error("invalid sequence length range");
  if (!(transition_concentration > 0.0) || !(emission_concentration > 0.0))
    throw Error("concentrations must be positive");
}

std::string SynthSpec::to_manifest() const {
  std::ostringstream out;
  out.precision(17);
  out << "labels=" << labels << '\n'
      << "vocab=" << vocab << '\n'
      << "transition_concentration=" << transition_concentration << '\n'
      << "emission_concentration=" << emission_concentration << '\n'
      << "min_length=" << min_length << '\n'
      << "max_length=" << max_length << '\n'
      << "size=" << size << '\n'
      << "seed=" << seed << '\n';
  return out.str();
}

namespace {

// Symmetric Dirichlet draw. Gamma(a) = Gamma(a+1) * U^(1/a), normalized in
// log space so tiny concentrations do not underflow to an all-zero row.
std::vector<double> dirichlet(std::size_t k, double alpha, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha + 1.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> logs(k);
  for (auto& l : logs) {
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    l = std::log(gamma(rng)) + std::log(u) / alpha;
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  std::vector<double> p(k);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += p[i] = std::exp(logs[i] - top);
  for (auto& x : p) x /= sum;
  return p;
}

std::size_t draw(const std::vector<double>& p, std::mt19937_64& rng) {
  std::discrete_distribution<std::size_t> d(p.begin(), p.end());
  return d(rng);
}

}  // namespace

SynthCorpus generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SynthCorpus out;

  std::vector<std::string> names;
  for (std::size_t i = 0; i < spec.labels; ++i) names.push_back("T" + std::to_string(i));
  out.labels = LabelSet(names);
  for (std::size_t v = 0; v < spec.vocab; ++v) out.vocabulary.push_back("w" + std::to_string(v));

  Hmm& hmm = out.hmm;
  hmm.initial = dirichlet(spec.labels, spec.transition_concentration, rng);
  for (std::size_t y = 0; y < spec.labels; ++y)
    hmm.transition.push_back(dirichlet(spec.labels, spec.transition_concentration, rng));
  for (std::size_t y = 0; y < spec.labels; ++y)
    hmm.emission.push_back(dirichlet(spec.vocab, spec.emission_concentration, rng));

  std::vector<std::discrete_distribution<std::size_t>> trans, emit;
  for (std::size_t y = 0; y < spec.labels; ++y) {
    trans.emplace_back(hmm.transition[y].begin(), hmm.transition[y].end());
    emit.emplace_back(hmm.emission[y].begin(), hmm.emission[y].end());
  }
  std::uniform_int_distribution<std::size_t> length(spec.min_length, spec.max_length);

  std::vector<Sequence> all;
  all.reserve(spec.size);
  for (std::size_t s = 0; s < spec.size; ++s) {
    Sequence seq;
    const std::size_t n = length(rng);
    std::size_t y = draw(hmm.initial, rng);
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) y = trans[y](rng);
      seq.tokens.push_back(Token{out.vocabulary[emit[y](rng)], std::nullopt});
      seq.gold.push_back(static_cast<LabelId>(y));
    }
    all.push_back(std::move(seq));
  }

  const std::size_t n_train = spec.size * 8 / 10;
  const std::size_t n_dev = spec.size / 10;
  out.train.assign(all.begin(), all.begin() + n_train);
  out.dev.assign(all.begin() + n_train, all.begin() + n_train + n_dev);
  out.test.assign(all.begin() + n_train + n_dev, all.end());
  return out;
}

}  // namespace lfm
