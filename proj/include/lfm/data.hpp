// CoNLL-style column files and the synthetic HMM corpus generator.

#ifndef LFM_DATA_HPP
#define LFM_DATA_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfm/model.hpp"

namespace lfm {

// Column indices are zero-based; a negative index counts from the end of
// the row (-1 = last column).
struct ConllColumnSpec {
  int word = 0;
  std::optional<int> pos;
  int label = -1;
  std::string comment_prefix = "#";

  void validate() const;
};

struct Corpus {
  std::vector<Sequence> sentences;
  LabelSet labels;
};

// Reads sentences separated by blank lines. With `fixed` the label set is
// given and unknown labels are errors; otherwise it is inferred in order
// of first appearance.
Corpus parse_conll(std::istream& in, const ConllColumnSpec& spec, const LabelSet* fixed = nullptr,
                   const std::string& source = "<stream>");
Corpus read_conll(const std::filesystem::path& path, const ConllColumnSpec& spec,
                  const LabelSet* fixed = nullptr);

// Writes `word [pos] label` rows. Labels come from `labels`; sentences
// without gold are written with the first label.
void write_conll(std::ostream& out, std::span<const Sequence> sentences, const LabelSet& labels);
void write_conll(const std::filesystem::path& path, std::span<const Sequence> sentences,
                 const LabelSet& labels);

// Column spec matching what write_conll emits for this corpus.
ConllColumnSpec written_columns(std::span<const Sequence> sentences);

struct SynthSpec {
  std::size_t labels = 5;
  std::size_t vocab = 200;
  double transition_concentration = 0.01;
  double emission_concentration = 0.01;
  std::size_t min_length = 8;
  std::size_t max_length = 20;
  std::size_t size = 2000;  // total sentences before the 80/10/10 split
  std::uint64_t seed = 7;

  void validate() const;
  std::string to_manifest() const;
};

struct Hmm {
  std::vector<double> initial;                  // [L]
  std::vector<std::vector<double>> transition;  // [L][L]
  std::vector<std::vector<double>> emission;    // [L][V]
};

struct SynthCorpus {
  std::vector<Sequence> train;
  std::vector<Sequence> dev;
  std::vector<Sequence> test;
  LabelSet labels;
  std::vector<std::string> vocabulary;
  Hmm hmm;
};

SynthCorpus generate_synthetic(const SynthSpec& spec);

}  // namespace lfm

#endif  // LFM_DATA_HPP
