#include "lfm/eval.hpp"

#include <algorithm>
#include <optional>

namespace lfm {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Auto:
      return "auto";
    case Metric::Accuracy:
      return "accuracy";
    case Metric::SpanF1:
      return "f1";
  }
  return "auto";
}

Metric parse_metric(std::string_view name) {
  if (name == "auto") return Metric::Auto;
  if (name == "accuracy" || name == "acc") return Metric::Accuracy;
  if (name == "f1" || name == "span-f1") return Metric::SpanF1;
  throw Error("unknown metric: " + std::string(name));
}

namespace {

void check_aligned(std::span<const Sequence> gold, std::span<const LabelSeq> predicted) {
  if (gold.size() != predicted.size())
    throw Error("prediction count " + std::to_string(predicted.size()) + " != sentence count " +
                std::to_string(gold.size()));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].gold.size() != gold[i].size())
      throw Error("sentence " + std::to_string(i) + " has no gold labels");
    if (predicted[i].size() != gold[i].size())
      throw Error("sentence " + std::to_string(i) + ": predicted length " +
                  std::to_string(predicted[i].size()) + " != " + std::to_string(gold[i].size()));
  }
}

struct TagShape {
  char prefix;  // 'B', 'I' or 'O'
  std::string type;
};

std::optional<TagShape> shape_of(std::string_view tag) {
  if (tag == "O") return TagShape{'O', ""};
  if (tag == "B" || tag == "I") return TagShape{tag[0], ""};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-')
    return TagShape{tag[0], std::string(tag.substr(2))};
  return std::nullopt;
}

}  // namespace

double token_accuracy(std::span<const Sequence> gold, std::span<const LabelSeq> predicted) {
  check_aligned(gold, predicted);
  std::size_t total = 0, right = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t j = 0; j < gold[i].size(); ++j) right += gold[i].gold[j] == predicted[i][j];
    total += gold[i].size();
  }
  if (total == 0) throw Error("token_accuracy: no tokens");
  return static_cast<double>(right) / static_cast<double>(total);
}

bool is_bio_shaped(const LabelSet& labels) {
  bool any_span = false;
  for (const auto& name : labels.names()) {
    auto s = shape_of(name);
    if (!s) return false;
    any_span |= s->prefix != 'O';
  }
  return any_span;
}

std::vector<Span> bio_spans(std::span<const LabelId> tags, const LabelSet& labels) {
  std::vector<Span> spans;
  std::optional<Span> open;
  auto close = [&] {
    if (open) spans.push_back(*open);
    open.reset();
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& name = labels.name(tags[i]);
    auto s = shape_of(name);
    if (!s) throw Error("unknown tag shape: " + name);
    if (s->prefix == 'O') {
      close();
    } else if (s->prefix == 'B' || !open || open->type != s->type) {
      close();
      open = Span{i, i, s->type};
    } else {
      open->end = i;
    }
  }
  close();
  return spans;
}

SpanScores span_f1(std::span<const Sequence> gold, std::span<const LabelSeq> predicted,
                   const LabelSet& labels) {
  check_aligned(gold, predicted);
  SpanScores out;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto g = bio_spans(gold[i].gold, labels);
    auto p = bio_spans(predicted[i], labels);
    std::sort(g.begin(), g.end());
    std::sort(p.begin(), p.end());
    std::vector<Span> common;
    std::set_intersection(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(common));
    out.gold_spans += g.size();
    out.predicted_spans += p.size();
    out.matched += common.size();
  }
  if (out.predicted_spans > 0)
    out.precision = static_cast<double>(out.matched) / static_cast<double>(out.predicted_spans);
  if (out.gold_spans > 0)
    out.recall = static_cast<double>(out.matched) / static_cast<double>(out.gold_spans);
  if (out.precision + out.recall > 0.0)
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

Metric resolve_metric(Metric metric, const LabelSet& labels) {
  if (metric != Metric::Auto) return metric;
  return is_bio_shaped(labels) ? Metric::SpanF1 : Metric::Accuracy;
}

double evaluate(Metric metric, std::span<const Sequence> gold, std::span<const LabelSeq> predicted,
                const LabelSet& labels) {
  if (resolve_metric(metric, labels) == Metric::SpanF1) return span_f1(gold, predicted, labels).f1;
  return token_accuracy(gold, predicted);
}

}  // namespace lfm
