// Token accuracy and BIO span precision/recall/F1.

#ifndef LFM_EVAL_HPP
#define LFM_EVAL_HPP

#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "lfm/model.hpp"

namespace lfm {

enum class Metric { Auto, Accuracy, SpanF1 };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view name);

double token_accuracy(std::span<const Sequence> gold, std::span<const LabelSeq> predicted);

struct SpanScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold_spans = 0;
  std::size_t predicted_spans = 0;
  std::size_t matched = 0;
};

struct Span {
  std::size_t begin;
  std::size_t end;  // inclusive
  std::string type;

  auto operator<=>(const Span&) const = default;
};

// True when every label is O, B, I, B-X or I-X and at least one is B/I.
bool is_bio_shaped(const LabelSet& labels);

// BIO segmentation; an I-X that does not continue an open X span starts one.
std::vector<Span> bio_spans(std::span<const LabelId> tags, const LabelSet& labels);

SpanScores span_f1(std::span<const Sequence> gold, std::span<const LabelSeq> predicted,
                   const LabelSet& labels);

// Accuracy, or span F1 for BIO label sets when `metric` is Auto.
Metric resolve_metric(Metric metric, const LabelSet& labels);
double evaluate(Metric metric, std::span<const Sequence> gold, std::span<const LabelSeq> predicted,
                const LabelSet& labels);

}  // namespace lfm

#endif  // LFM_EVAL_HPP
