// Core model types: sequences, label inventory, sparse feature vectors,
// the frozen feature alphabet and the shared weight store.

#ifndef LFM_MODEL_HPP
#define LFM_MODEL_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lfm {

using LabelId = std::uint32_t;
using FeatureId = std::uint32_t;
using LabelSeq = std::vector<LabelId>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Token {
  std::string word;
  std::optional<std::string> pos;

  bool operator==(const Token&) const = default;
};

// A sentence. `gold` is either empty (unlabeled) or has one label per token.
struct Sequence {
  std::vector<Token> tokens;
  LabelSeq gold;

  std::size_t size() const { return tokens.size(); }
  bool has_gold() const { return !gold.empty(); }
  bool operator==(const Sequence&) const = default;
};

class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& name(LabelId id) const { return labels_.at(id); }
  std::optional<LabelId> find(std::string_view label) const;
  const std::vector<std::string>& names() const { return labels_; }

  bool operator==(const LabelSet& o) const { return labels_ == o.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, LabelId> index_;
};

// Checks length, gold-length and label-range invariants.
void validate(const Sequence& x, const LabelSet& labels);

struct FeatureEntry {
  FeatureId index;
  double value;

  bool operator==(const FeatureEntry&) const = default;
};

// Sparse vector in canonical form: strictly increasing indices, no zeros.
class FeatureVec {
 public:
  FeatureVec() = default;

  // Sorts, merges duplicates and drops zeros.
  static FeatureVec from_unsorted(std::vector<FeatureEntry> entries);
  // Takes entries that are already canonical.
  static FeatureVec from_canonical(std::vector<FeatureEntry> entries);

  const std::vector<FeatureEntry>& entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double squared_norm() const;
  bool is_canonical() const;

  friend FeatureVec operator-(const FeatureVec& a, const FeatureVec& b);
  friend FeatureVec operator+(const FeatureVec& a, const FeatureVec& b);
  bool operator==(const FeatureVec&) const = default;

 private:
  std::vector<FeatureEntry> entries_;
};

// Observation templates. Transition and boundary features are always on.
struct TemplateSet {
  std::vector<int> word_offsets;
  bool word_bigrams = false;  // (-1,0) and (0,+1)
  bool affixes = false;       // 3-char prefix and suffix of current word
  bool pos = false;           // POS at 0 and POS bigram (-1,0), when tokens carry POS

  static TemplateSet standard();
  static TemplateSet unigram();

  std::string to_string() const;
  static TemplateSet parse(std::string_view text);

  bool empty() const { return word_offsets.empty() && !word_bigrams && !affixes && !pos; }
  bool operator==(const TemplateSet&) const = default;
};

// Observation predicates firing at each position of x, as strings.
std::vector<std::vector<std::string>> observation_strings(const Sequence& x,
                                                          const TemplateSet& templates);

// Per-position attribute ids (CSR layout); attributes unknown to the
// alphabet are already dropped.
struct EncodedSequence {
  std::vector<std::uint32_t> offsets;  // size() + 1 entries
  std::vector<std::uint32_t> attrs;
  LabelSeq gold;

  std::size_t size() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const std::uint32_t> at(std::size_t pos) const {
    return {attrs.data() + offsets[pos], attrs.data() + offsets[pos + 1]};
  }
};

// Frozen map from feature strings to dense indices.
//
// Layout: emission features occupy [0, A*L) with index attr*L + label;
// the transition block follows with start[L], trans[L*L] (prev*L + cur)
// and end[L].
class FeatureAlphabet {
 public:
  FeatureAlphabet() = default;
  FeatureAlphabet(TemplateSet templates, LabelSet labels, std::vector<std::string> attributes);

  std::size_t size() const { return emission_size() + num_labels() * (num_labels() + 2); }
  std::size_t num_labels() const { return labels_.size(); }
  std::size_t num_attributes() const { return attrs_.size(); }
  std::size_t emission_size() const { return attrs_.size() * labels_.size(); }

  const LabelSet& labels() const { return labels_; }
  const TemplateSet& templates() const { return templates_; }
  const std::vector<std::string>& attributes() const { return attrs_; }

  std::optional<std::uint32_t> find_attribute(std::string_view attr) const;

  FeatureId emission(std::uint32_t attr, LabelId y) const {
    return static_cast<FeatureId>(attr * labels_.size() + y);
  }
  FeatureId start(LabelId y) const { return static_cast<FeatureId>(emission_size() + y); }
  FeatureId transition(LabelId prev, LabelId cur) const {
    return static_cast<FeatureId>(emission_size() + labels_.size() * (1 + prev) + cur);
  }
  FeatureId end(LabelId y) const {
    return static_cast<FeatureId>(emission_size() + labels_.size() * (1 + labels_.size()) + y);
  }

  std::string name(FeatureId index) const;
  std::optional<FeatureId> find(std::string_view feature) const;

  EncodedSequence encode(const Sequence& x) const;

  bool operator==(const FeatureAlphabet& o) const {
    return templates_ == o.templates_ && labels_ == o.labels_ && attrs_ == o.attrs_;
  }

 private:
  TemplateSet templates_;
  LabelSet labels_;
  std::vector<std::string> attrs_;
  std::unordered_map<std::string, std::uint32_t> attr_index_;
};

FeatureAlphabet build_alphabet(std::span<const Sequence> dataset, const TemplateSet& templates,
                               const LabelSet& labels);

FeatureVec extract_features(const EncodedSequence& x, std::span<const LabelId> y,
                            const FeatureAlphabet& alphabet);
FeatureVec extract_features(const Sequence& x, std::span<const LabelId> y,
                            const FeatureAlphabet& alphabet);

// Read-only view over a finished dense weight vector.
class DenseWeights {
 public:
  explicit DenseWeights(std::span<const double> w) : w_(w) {}
  double get(std::size_t i) const { return w_[i]; }
  std::size_t size() const { return w_.size(); }

 private:
  std::span<const double> w_;
};

// Shared weights plus lazy averaging state. Concurrent get/add_scaled are
// allowed (per-cell relaxed atomics); scale_all, averaged and assignment
// require that no other thread is writing.
class WeightStore {
 public:
  explicit WeightStore(std::size_t dim);
  WeightStore(const WeightStore& other);
  WeightStore& operator=(const WeightStore& other);

  std::size_t size() const { return w_.size(); }

  double get(std::size_t i) const {
    return std::atomic_ref<double>(const_cast<double&>(w_[i])).load(std::memory_order_relaxed);
  }

  // Adds scale*fv to w as part of iterate step+1; cells are settled into
  // the average up to `step` before they change.
  void add_scaled(const FeatureVec& fv, double scale, std::uint64_t step);
  // Single-writer convenience: stamps with the current update count.
  void add_scaled(const FeatureVec& fv, double scale) { add_scaled(fv, scale, update_count()); }

  // Claims the next step index. Every processed sample claims exactly one.
  std::uint64_t next_step() { return count_.fetch_add(1, std::memory_order_relaxed); }
  std::uint64_t update_count() const { return count_.load(std::memory_order_relaxed); }

  // Settles every cell to the current count, then multiplies w by factor.
  void scale_all(double factor);

  // Sum of all post-update iterates so far (v), settled on a copy.
  std::vector<double> accumulated() const;
  // v divided by the current update count; zeros if nothing happened yet.
  std::vector<double> averaged() const;

  std::span<const double> current() const { return w_; }

 private:
  void settle(std::size_t i, std::uint64_t step);

  std::vector<double> w_;
  std::vector<double> avg_;
  std::vector<std::uint64_t> stamp_;
  std::atomic<std::uint64_t> count_{0};
};

// Dot product; throws when an index is outside the weight vector.
double score(const WeightStore& w, const FeatureVec& fv);
double score(const DenseWeights& w, const FeatureVec& fv);

}  // namespace lfm

#endif  // LFM_MODEL_HPP
