// Exact first-order Viterbi decoding, an exhaustive oracle, and Hamming loss.

#ifndef LFM_DECODER_HPP
#define LFM_DECODER_HPP

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "lfm/model.hpp"

namespace lfm {

struct DecodeResult {
  LabelSeq labels;
  double score = 0.0;
};

// Weights must expose `double get(std::size_t) const`. Reads go cell by
// cell without a snapshot, so under concurrent writers the result is the
// argmax of whatever mixture of states was observed.
template <class Weights>
DecodeResult viterbi(const EncodedSequence& x, const Weights& w, const FeatureAlphabet& alphabet) {
  const std::size_t n = x.size();
  const std::size_t L = alphabet.num_labels();
  if (n == 0) throw Error("cannot decode an empty sequence");

  std::vector<double> emit(n * L, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = &emit[i * L];
    for (std::uint32_t a : x.at(i)) {
      const std::size_t base = alphabet.emission(a, 0);
      for (std::size_t y = 0; y < L; ++y) row[y] += w.get(base + y);
    }
  }

  std::vector<double> trans(L * L);
  for (std::size_t p = 0; p < L; ++p)
    for (std::size_t y = 0; y < L; ++y)
      trans[p * L + y] = w.get(alphabet.transition(static_cast<LabelId>(p), static_cast<LabelId>(y)));

  std::vector<double> delta(n * L);
  std::vector<LabelId> back(n * L, 0);
  for (std::size_t y = 0; y < L; ++y)
    delta[y] = w.get(alphabet.start(static_cast<LabelId>(y))) + emit[y];

  for (std::size_t i = 1; i < n; ++i) {
    const double* prev = &delta[(i - 1) * L];
    double* cur = &delta[i * L];
    LabelId* bp = &back[i * L];
    for (std::size_t y = 0; y < L; ++y) {
      double best = prev[0] + trans[y];
      LabelId arg = 0;
      for (std::size_t p = 1; p < L; ++p) {
        const double s = prev[p] + trans[p * L + y];
        if (s > best) {
          best = s;
          arg = static_cast<LabelId>(p);
        }
      }
      cur[y] = best + emit[i * L + y];
      bp[y] = arg;
    }
  }

  const double* last = &delta[(n - 1) * L];
  double best = last[0] + w.get(alphabet.end(0));
  LabelId arg = 0;
  for (std::size_t y = 1; y < L; ++y) {
    const double s = last[y] + w.get(alphabet.end(static_cast<LabelId>(y)));
    if (s > best) {
      best = s;
      arg = static_cast<LabelId>(y);
    }
  }

  DecodeResult out;
  out.labels.resize(n);
  out.score = best;
  out.labels[n - 1] = arg;
  for (std::size_t i = n - 1; i > 0; --i) out.labels[i - 1] = back[i * L + out.labels[i]];
  return out;
}

template <class Weights>
DecodeResult viterbi(const Sequence& x, const Weights& w, const FeatureAlphabet& alphabet) {
  if (x.tokens.empty()) throw Error("cannot decode an empty sequence");
  return viterbi(alphabet.encode(x), w, alphabet);
}

inline constexpr double kOracleLimit = 1e6;

// Scores every labeling in lexicographic order via extract_features and
// keeps the first maximum. Test oracle; single-threaded.
template <class Weights>
DecodeResult brute_force_best(const EncodedSequence& x, const Weights& w,
                              const FeatureAlphabet& alphabet) {
  const std::size_t n = x.size();
  const std::size_t L = alphabet.num_labels();
  if (n == 0) throw Error("cannot decode an empty sequence");
  if (std::pow(static_cast<double>(L), static_cast<double>(n)) > kOracleLimit)
    throw Error("instance too large for oracle");

  LabelSeq z(n, 0);
  DecodeResult best;
  best.score = -std::numeric_limits<double>::infinity();
  while (true) {
    const FeatureVec fv = extract_features(x, z, alphabet);
    double s = 0.0;
    for (const auto& e : fv.entries()) s += e.value * w.get(e.index);
    if (s > best.score) {
      best.score = s;
      best.labels = z;
    }
    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      if (++z[pos] < L) break;
      z[pos] = 0;
      if (pos == 0) return best;
    }
  }
}

template <class Weights>
DecodeResult brute_force_best(const Sequence& x, const Weights& w, const FeatureAlphabet& alphabet) {
  return brute_force_best(alphabet.encode(x), w, alphabet);
}

std::size_t hamming_loss(std::span<const LabelId> y, std::span<const LabelId> z);

}  // namespace lfm

#endif  // LFM_DECODER_HPP
