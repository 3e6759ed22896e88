#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "kgaug/kg_store.hpp"
#include "kgaug/numerics/graph.hpp"
#include "kgaug/numerics/lstm.hpp"
#include "kgaug/word_vectors.hpp"

namespace kgaug {

// Lowercased words; any character that is not alphanumeric, '_' or '-' (or
// a non-ASCII byte) separates words and is dropped.
std::vector<std::string> split_words(std::string_view text);

// Word vocabulary with two reserved ids.
class TextVocab {
 public:
  static constexpr Id pad = 0;
  static constexpr Id unknown = 1;

  TextVocab();
  void add_text(std::string_view text);
  Id id(std::string_view word) const;  // unknown when absent
  const NameTable& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  static TextVocab from_words(const std::vector<std::string>& words);

 private:
  NameTable words_;
};

struct TokenSequence {
  std::vector<Id> ids;     // length T, pad beyond `length`
  std::vector<bool> mask;  // true on the real prefix
  std::size_t length = 0;
};

// Truncates to max_len. Empty (or separator-only) text is a domain error.
TokenSequence tokenize(std::string_view text, const TextVocab& vocab, std::size_t max_len);

// Word table for the vocabulary: loaded vectors where available, otherwise
// N(0, sigma^2). The pad row is zero.
num::Tensor init_word_table(const TextVocab& vocab, std::size_t dim, double sigma, std::mt19937_64& rng,
                            const WordVectors* pretrained = nullptr);

// Masked mean of LSTM hidden states over a batch: B x n.
num::Var encode_mean(num::Graph& g, num::Var word_table, const std::vector<const TokenSequence*>& batch,
                     const num::LstmVars& lstm);

// ReLU(mean · projection): B x m.
num::Var context_from_mean(num::Var mean, num::Var projection);

// encode_mean followed by context_from_mean.
num::Var encode(num::Graph& g, num::Var word_table, const std::vector<const TokenSequence*>& batch,
                const num::LstmVars& lstm, num::Var projection);

struct LabeledText {
  std::size_t label = 0;
  std::string text;
};

struct Dataset {
  std::vector<std::string> labels;  // class id -> label string
  std::vector<LabeledText> examples;

  std::size_t num_classes() const { return labels.size(); }
};

// `label<TAB>text` lines. With `labels` given, labels must come from it;
// otherwise the label set is collected and sorted.
Dataset read_dataset(std::istream& in, const std::string& source = "<stream>",
                     const std::vector<std::string>* labels = nullptr);
Dataset read_dataset(const std::filesystem::path& path, const std::vector<std::string>* labels = nullptr);
void write_dataset(std::ostream& out, const Dataset& data);

}  // namespace kgaug
