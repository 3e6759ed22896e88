#include "kgaug/word_vectors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "kgaug/error.hpp"

namespace kgaug {

std::optional<std::size_t> WordVectors::find(std::string_view word) const {
  auto id = words.find(word);
  if (!id) return std::nullopt;
  return *id;
}

WordVectors load_word_vectors(std::istream& in, const std::string& source) {
  WordVectors out;
  std::vector<double> data;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word) || word[0] == '#') continue;
    std::vector<double> vec;
    std::string tok;
    while (fields >> tok) {
      double v = 0.0;
      auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || end != tok.data() + tok.size() || !std::isfinite(v)) {
        throw ParseError(source, line_no, "bad number '" + tok + "'");
      }
      vec.push_back(v);
    }
    if (vec.empty()) throw ParseError(source, line_no, "word without a vector");
    if (dim == 0) dim = vec.size();
    if (vec.size() != dim) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(dim) + " values, got " + std::to_string(vec.size()));
    }
    if (out.words.find(word)) {
      ++out.duplicates;
      continue;
    }
    out.words.intern(word);
    data.insert(data.end(), vec.begin(), vec.end());
  }
  if (out.words.size() == 0) throw DomainError(source + ": no word vectors");
  out.matrix = num::Tensor::matrix(out.words.size(), dim, std::move(data));
  return out;
}

WordVectors load_word_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return load_word_vectors(in, path.string());
}

}  // namespace kgaug
