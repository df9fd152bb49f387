#include "lfm/model.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <set>
#include <sstream>

namespace lfm {

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw Error("label set is empty");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], static_cast<LabelId>(i)).second)
      throw Error("duplicate label: " + labels_[i]);
  }
}

std::optional<LabelId> LabelSet::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void validate(const Sequence& x, const LabelSet& labels) {
  if (x.tokens.empty()) throw Error("empty sequence");
  if (!x.has_gold()) return;
  if (x.gold.size() != x.tokens.size())
    throw Error("gold label count " + std::to_string(x.gold.size()) + " != token count " +
                std::to_string(x.tokens.size()));
  for (LabelId y : x.gold)
    if (y >= labels.size()) throw Error("label index out of range: " + std::to_string(y));
}

// ---------------------------------------------------------------------------
// FeatureVec

FeatureVec FeatureVec::from_unsorted(std::vector<FeatureEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const FeatureEntry& a, const FeatureEntry& b) { return a.index < b.index; });
  FeatureVec out;
  out.entries_.reserve(entries.size());
  for (const auto& e : entries) {
    if (!out.entries_.empty() && out.entries_.back().index == e.index)
      out.entries_.back().value += e.value;
    else
      out.entries_.push_back(e);
  }
  std::erase_if(out.entries_, [](const FeatureEntry& e) { return e.value == 0.0; });
  return out;
}

FeatureVec FeatureVec::from_canonical(std::vector<FeatureEntry> entries) {
  FeatureVec out;
  out.entries_ = std::move(entries);
  if (!out.is_canonical()) throw Error("feature vector is not canonical");
  return out;
}

double FeatureVec::squared_norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * e.value;
  return s;
}

bool FeatureVec::is_canonical() const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].value == 0.0) return false;
    if (i > 0 && entries_[i - 1].index >= entries_[i].index) return false;
  }
  return true;
}

namespace {

template <class Op>
FeatureVec merge(const FeatureVec& a, const FeatureVec& b, Op op) {
  std::vector<FeatureEntry> out;
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  out.reserve(ea.size() + eb.size());
  std::size_t i = 0, j = 0;
  while (i < ea.size() || j < eb.size()) {
    FeatureEntry e;
    if (j == eb.size() || (i < ea.size() && ea[i].index < eb[j].index)) {
      e = {ea[i].index, op(ea[i].value, 0.0)};
      ++i;
    } else if (i == ea.size() || eb[j].index < ea[i].index) {
      e = {eb[j].index, op(0.0, eb[j].value)};
      ++j;
    } else {
      e = {ea[i].index, op(ea[i].value, eb[j].value)};
      ++i;
      ++j;
    }
    if (e.value != 0.0) out.push_back(e);
  }
  return FeatureVec::from_canonical(std::move(out));
}

}  // namespace

FeatureVec operator-(const FeatureVec& a, const FeatureVec& b) {
  return merge(a, b, [](double x, double y) { return x - y; });
}

FeatureVec operator+(const FeatureVec& a, const FeatureVec& b) {
  return merge(a, b, [](double x, double y) { return x + y; });
}

// ---------------------------------------------------------------------------
// Templates

TemplateSet TemplateSet::standard() {
  TemplateSet t;
  t.word_offsets = {-2, -1, 0, 1, 2};
  t.word_bigrams = true;
  t.affixes = true;
  t.pos = true;
  return t;
}

TemplateSet TemplateSet::unigram() {
  TemplateSet t;
  t.word_offsets = {0};
  return t;
}

std::string TemplateSet::to_string() const {
  std::ostringstream out;
  out << "w=";
  for (std::size_t i = 0; i < word_offsets.size(); ++i) out << (i ? "," : "") << word_offsets[i];
  if (word_bigrams) out << ";bigram";
  if (affixes) out << ";affix";
  if (pos) out << ";pos";
  return out.str();
}

TemplateSet TemplateSet::parse(std::string_view text) {
  TemplateSet t;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t stop = text.find(';', start);
    if (stop == std::string_view::npos) stop = text.size();
    std::string_view part = text.substr(start, stop - start);
    if (part.starts_with("w=")) {
      std::string_view list = part.substr(2);
      std::size_t p = 0;
      while (p < list.size()) {
        std::size_t q = list.find(',', p);
        if (q == std::string_view::npos) q = list.size();
        int v = 0;
        auto [ptr, ec] = std::from_chars(list.data() + p, list.data() + q, v);
        if (ec != std::errc() || ptr != list.data() + q)
          throw Error("bad template offset list: " + std::string(text));
        t.word_offsets.push_back(v);
        p = q + 1;
      }
    } else if (part == "bigram") {
      t.word_bigrams = true;
    } else if (part == "affix") {
      t.affixes = true;
    } else if (part == "pos") {
      t.pos = true;
    } else if (!part.empty()) {
      throw Error("unknown template: " + std::string(part));
    }
    start = stop + 1;
  }
  return t;
}

namespace {

const std::string kBos = "<s>";
const std::string kEos = "</s>";

const std::string& word_at(const Sequence& x, long i) {
  if (i < 0) return kBos;
  if (i >= static_cast<long>(x.size())) return kEos;
  return x.tokens[i].word;
}

const std::string* pos_at(const Sequence& x, long i) {
  if (i < 0) return &kBos;
  if (i >= static_cast<long>(x.size())) return &kEos;
  const auto& p = x.tokens[i].pos;
  return p ? &*p : nullptr;
}

}  // namespace

std::vector<std::vector<std::string>> observation_strings(const Sequence& x,
                                                          const TemplateSet& templates) {
  std::vector<std::vector<std::string>> out(x.size());
  for (long i = 0; i < static_cast<long>(x.size()); ++i) {
    auto& attrs = out[i];
    for (int off : templates.word_offsets)
      attrs.push_back("w[" + std::to_string(off) + "]=" + word_at(x, i + off));
    if (templates.word_bigrams) {
      attrs.push_back("w[-1,0]=" + word_at(x, i - 1) + "/" + word_at(x, i));
      attrs.push_back("w[0,1]=" + word_at(x, i) + "/" + word_at(x, i + 1));
    }
    if (templates.affixes) {
      const std::string& w = x.tokens[i].word;
      attrs.push_back("pre3=" + w.substr(0, 3));
      attrs.push_back("suf3=" + (w.size() > 3 ? w.substr(w.size() - 3) : w));
    }
    if (templates.pos) {
      const std::string* cur = pos_at(x, i);
      const std::string* prev = pos_at(x, i - 1);
      if (cur) attrs.push_back("p[0]=" + *cur);
      if (cur && prev) attrs.push_back("p[-1,0]=" + *prev + "/" + *cur);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// FeatureAlphabet

FeatureAlphabet::FeatureAlphabet(TemplateSet templates, LabelSet labels,
                                 std::vector<std::string> attributes)
    : templates_(std::move(templates)), labels_(std::move(labels)), attrs_(std::move(attributes)) {
  if (labels_.size() == 0) throw Error("label set is empty");
  attr_index_.reserve(attrs_.size());
  for (std::size_t i = 0; i < attrs_.size(); ++i) {
    if (!attr_index_.emplace(attrs_[i], static_cast<std::uint32_t>(i)).second)
      throw Error("duplicate attribute: " + attrs_[i]);
  }
  if (size() > std::numeric_limits<FeatureId>::max()) throw Error("feature space too large");
}

std::optional<std::uint32_t> FeatureAlphabet::find_attribute(std::string_view attr) const {
  auto it = attr_index_.find(std::string(attr));
  if (it == attr_index_.end()) return std::nullopt;
  return it->second;
}

namespace {
constexpr std::string_view kTagSep = "&tag=";
constexpr std::string_view kPrevTag = "tag[-1]=";
}  // namespace

std::string FeatureAlphabet::name(FeatureId index) const {
  const std::size_t L = labels_.size();
  if (index < emission_size())
    return attrs_[index / L] + std::string(kTagSep) + labels_.name(index % L);
  std::size_t rel = index - emission_size();
  if (rel < L) return std::string(kPrevTag) + kBos + std::string(kTagSep) + labels_.name(rel);
  rel -= L;
  if (rel < L * L)
    return std::string(kPrevTag) + labels_.name(rel / L) + std::string(kTagSep) +
           labels_.name(rel % L);
  rel -= L * L;
  if (rel < L) return std::string(kPrevTag) + labels_.name(rel) + std::string(kTagSep) + kEos;
  throw Error("feature index out of range: " + std::to_string(index));
}

std::optional<FeatureId> FeatureAlphabet::find(std::string_view feature) const {
  std::size_t sep = feature.rfind(kTagSep);
  if (sep == std::string_view::npos) return std::nullopt;
  std::string_view head = feature.substr(0, sep);
  std::string_view tag = feature.substr(sep + kTagSep.size());
  if (head.starts_with(kPrevTag)) {
    std::string_view prev = head.substr(kPrevTag.size());
    if (prev == kBos) {
      if (auto y = labels_.find(tag)) return start(*y);
      return std::nullopt;
    }
    auto p = labels_.find(prev);
    if (!p) return std::nullopt;
    if (tag == kEos) return end(*p);
    if (auto y = labels_.find(tag)) return transition(*p, *y);
    return std::nullopt;
  }
  auto a = find_attribute(head);
  auto y = labels_.find(tag);
  if (!a || !y) return std::nullopt;
  return emission(*a, *y);
}

EncodedSequence FeatureAlphabet::encode(const Sequence& x) const {
  if (x.tokens.empty()) throw Error("empty sequence");
  EncodedSequence out;
  out.offsets.reserve(x.size() + 1);
  out.offsets.push_back(0);
  for (const auto& attrs : observation_strings(x, templates_)) {
    for (const auto& a : attrs)
      if (auto id = find_attribute(a)) out.attrs.push_back(*id);
    out.offsets.push_back(static_cast<std::uint32_t>(out.attrs.size()));
  }
  out.gold = x.gold;
  return out;
}

FeatureAlphabet build_alphabet(std::span<const Sequence> dataset, const TemplateSet& templates,
                               const LabelSet& labels) {
  if (dataset.empty()) throw Error("no training data");
  if (templates.empty()) throw Error("no feature templates");
  std::set<std::string> attrs;
  for (const auto& x : dataset) {
    validate(x, labels);
    if (!x.has_gold()) throw Error("training sequence without gold labels");
    for (auto& position : observation_strings(x, templates))
      for (auto& a : position) attrs.insert(std::move(a));
  }
  return FeatureAlphabet(templates, labels, std::vector<std::string>(attrs.begin(), attrs.end()));
}

// ---------------------------------------------------------------------------
// Feature extraction

FeatureVec extract_features(const EncodedSequence& x, std::span<const LabelId> y,
                            const FeatureAlphabet& alphabet) {
  const std::size_t n = x.size();
  if (y.size() != n)
    throw Error("label sequence length " + std::to_string(y.size()) + " != sequence length " +
                std::to_string(n));
  if (n == 0) throw Error("empty sequence");
  std::vector<FeatureEntry> entries;
  entries.reserve(x.attrs.size() + n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] >= alphabet.num_labels()) throw Error("label index out of range");
    for (std::uint32_t a : x.at(i)) entries.push_back({alphabet.emission(a, y[i]), 1.0});
    entries.push_back({i == 0 ? alphabet.start(y[0]) : alphabet.transition(y[i - 1], y[i]), 1.0});
  }
  entries.push_back({alphabet.end(y[n - 1]), 1.0});
  return FeatureVec::from_unsorted(std::move(entries));
}

FeatureVec extract_features(const Sequence& x, std::span<const LabelId> y,
                            const FeatureAlphabet& alphabet) {
  if (y.size() != x.size())
    throw Error("label sequence length " + std::to_string(y.size()) + " != sequence length " +
                std::to_string(x.size()));
  return extract_features(alphabet.encode(x), y, alphabet);
}

// ---------------------------------------------------------------------------
// WeightStore

WeightStore::WeightStore(std::size_t dim) : w_(dim, 0.0), avg_(dim, 0.0), stamp_(dim, 0) {}

WeightStore::WeightStore(const WeightStore& other)
    : w_(other.w_), avg_(other.avg_), stamp_(other.stamp_), count_(other.update_count()) {}

WeightStore& WeightStore::operator=(const WeightStore& other) {
  if (this != &other) {
    w_ = other.w_;
    avg_ = other.avg_;
    stamp_ = other.stamp_;
    count_.store(other.update_count(), std::memory_order_relaxed);
  }
  return *this;
}

void WeightStore::settle(std::size_t i, std::uint64_t step) {
  std::uint64_t prev = std::atomic_ref<std::uint64_t>(stamp_[i]).exchange(step, std::memory_order_relaxed);
  // Another thread may already have stamped a later step; its settle covered this span.
  if (step > prev) {
    double held = get(i);
    std::atomic_ref<double>(avg_[i]).fetch_add(held * static_cast<double>(step - prev),
                                              std::memory_order_relaxed);
  } else if (prev > step) {
    std::atomic_ref<std::uint64_t>(stamp_[i]).store(prev, std::memory_order_relaxed);
  }
}

void WeightStore::add_scaled(const FeatureVec& fv, double scale, std::uint64_t step) {
  if (scale == 0.0) return;
  for (const auto& e : fv.entries()) {
    if (e.index >= w_.size())
      throw Error("feature index " + std::to_string(e.index) + " outside weight vector of size " +
                  std::to_string(w_.size()));
    settle(e.index, step);
    std::atomic_ref<double>(w_[e.index]).fetch_add(scale * e.value, std::memory_order_relaxed);
  }
}

void WeightStore::scale_all(double factor) {
  const std::uint64_t now = update_count();
  for (std::size_t i = 0; i < w_.size(); ++i) {
    if (stamp_[i] < now) {
      avg_[i] += w_[i] * static_cast<double>(now - stamp_[i]);
      stamp_[i] = now;
    }
    w_[i] *= factor;
  }
}

std::vector<double> WeightStore::accumulated() const {
  const std::uint64_t now = update_count();
  std::vector<double> v(avg_);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (stamp_[i] < now) v[i] += w_[i] * static_cast<double>(now - stamp_[i]);
  return v;
}

std::vector<double> WeightStore::averaged() const {
  std::vector<double> v = accumulated();
  const std::uint64_t now = update_count();
  if (now == 0) return std::vector<double>(v.size(), 0.0);
  for (double& x : v) x /= static_cast<double>(now);
  return v;
}

double score(const WeightStore& w, const FeatureVec& fv) {
  double s = 0.0;
  for (const auto& e : fv.entries()) {
    if (e.index >= w.size()) throw Error("feature index out of bounds of weight vector");
    s += e.value * w.get(e.index);
  }
  return s;
}

double score(const DenseWeights& w, const FeatureVec& fv) {
  double s = 0.0;
  for (const auto& e : fv.entries()) {
    if (e.index >= w.size()) throw Error("feature index out of bounds of weight vector");
    s += e.value * w.get(e.index);
  }
  return s;
}

}  // namespace lfm
