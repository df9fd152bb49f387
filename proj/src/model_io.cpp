#include "lfm/model_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lfm/decoder.hpp"

namespace lfm {

LabelSeq Model::tag(const Sequence& x) const {
  return viterbi(x, DenseWeights(weights), alphabet).labels;
}

std::vector<LabelSeq> Model::tag(std::span<const Sequence> xs) const {
  std::vector<LabelSeq> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(tag(x));
  return out;
}

namespace {

constexpr std::array<char, 8> kMagic = {'L', 'F', 'M', 'M', 'O', 'D', 'E', 'L'};

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), bytes.size());
}

template <class T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), bytes.size())) throw Error("model file truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto len = get<std::uint32_t>(in);
  if (len > (1u << 24)) throw Error("model file corrupt: string too long");
  std::string s(len, '\0');
  if (len && !in.read(s.data(), len)) throw Error("model file truncated");
  return s;
}

}  // namespace

void write_model(std::ostream& out, const Model& m) {
  if (m.weights.size() != m.alphabet.size())
    throw Error("weights/alphabet size mismatch on save");
  if (!std::is_sorted(m.alphabet.attributes().begin(), m.alphabet.attributes().end()))
    throw Error("alphabet attributes must be sorted for serialization");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kModelVersion);
  put_string(out, m.alphabet.templates().to_string());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.alphabet.num_labels()));
  for (const auto& l : m.alphabet.labels().names()) put_string(out, l);
  put<std::uint64_t>(out, m.alphabet.num_attributes());
  for (const auto& a : m.alphabet.attributes()) put_string(out, a);
  put<std::uint64_t>(out, m.weights.size());
  for (double w : m.weights) put<double>(out, w);
}

Model read_model(std::istream& in) {
  std::array<char, 8> magic;
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw Error("not a model file");
  const auto version = get<std::uint32_t>(in);
  if (version != kModelVersion)
    throw Error("unsupported model version " + std::to_string(version));
  TemplateSet templates = TemplateSet::parse(get_string(in));
  const auto n_labels = get<std::uint32_t>(in);
  std::vector<std::string> labels;
  for (std::uint32_t i = 0; i < n_labels; ++i) labels.push_back(get_string(in));
  const auto n_attrs = get<std::uint64_t>(in);
  std::vector<std::string> attrs;
  for (std::uint64_t i = 0; i < n_attrs; ++i) attrs.push_back(get_string(in));
  Model m{FeatureAlphabet(std::move(templates), LabelSet(std::move(labels)), std::move(attrs)), {}};
  const auto n_weights = get<std::uint64_t>(in);
  if (n_weights != m.alphabet.size()) throw Error("model file corrupt: weight count mismatch");
  m.weights.resize(n_weights);
  for (auto& w : m.weights) w = get<double>(in);
  return m;
}

std::string serialize_model(const Model& m) {
  std::ostringstream out(std::ios::binary);
  write_model(out, m);
  return out.str();
}

void save_model(const std::filesystem::path& path, const Model& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_model(out, m);
  if (!out) throw Error("write failed: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_model(in);
}

}  // namespace lfm
