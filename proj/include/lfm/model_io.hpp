// Trained model bundle and its binary file format.
//
// Layout (all integers and doubles little-endian):
//   magic "LFMMODEL", u32 version
//   u32 length + bytes: template spec (TemplateSet::to_string)
//   u32 label count, then per label: u32 length + bytes
//   u64 attribute count, then per attribute (sorted): u32 length + bytes
//   u64 weight count, then that many f64 averaged weights

#ifndef LFM_MODEL_IO_HPP
#define LFM_MODEL_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lfm/model.hpp"

namespace lfm {

inline constexpr std::uint32_t kModelVersion = 1;

struct Model {
  FeatureAlphabet alphabet;
  std::vector<double> weights;

  LabelSeq tag(const Sequence& x) const;
  std::vector<LabelSeq> tag(std::span<const Sequence> xs) const;
};

void write_model(std::ostream& out, const Model& m);
Model read_model(std::istream& in);

std::string serialize_model(const Model& m);
void save_model(const std::filesystem::path& path, const Model& m);
Model load_model(const std::filesystem::path& path);

}  // namespace lfm

#endif  // LFM_MODEL_IO_HPP
