#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>

#include "kgaug/kg_store.hpp"
#include "kgaug/numerics/tensor.hpp"

namespace kgaug {

// Pretrained word vectors in the `word v1 ... vd` text format. Words absent
// from the table are the caller's problem (the text encoder maps them to its
// unknown id; description averaging ignores them).
struct WordVectors {
  NameTable words;
  num::Tensor matrix;  // words.size() x dim
  std::size_t duplicates = 0;

  std::size_t dim() const { return matrix.cols(); }
  std::size_t size() const { return words.size(); }
  std::optional<std::size_t> find(std::string_view word) const;
};

WordVectors load_word_vectors(std::istream& in, const std::string& source = "<stream>");
WordVectors load_word_vectors(const std::filesystem::path& path);

}  // namespace kgaug
