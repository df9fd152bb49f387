#include "lfm/decoder.hpp"

#include <string>

namespace lfm {

std::size_t hamming_loss(std::span<const LabelId> y, std::span<const LabelId> z) {
  if (y.size() != z.size())
    throw Error("hamming_loss: length mismatch (" + std::to_string(y.size()) + " vs " +
                std::to_string(z.size()) + ")");
  std::size_t loss = 0;
  for (std::size_t i = 0; i < y.size(); ++i) loss += y[i] != z[i];
  return loss;
}

}  // namespace lfm
