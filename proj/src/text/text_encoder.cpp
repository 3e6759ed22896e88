#include "kgaug/text_encoder.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "kgaug/error.hpp"
#include "kgaug/numerics/ops.hpp"

namespace kgaug {

using num::Graph;
using num::Tensor;
using num::Var;

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && (std::isalnum(c) || c == '_' || c == '-')) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TextVocab::TextVocab() {
  words_.intern("<pad>");
  words_.intern("<unk>");
}

void TextVocab::add_text(std::string_view text) {
  for (const std::string& w : split_words(text)) words_.intern(w);
}

Id TextVocab::id(std::string_view word) const {
  auto found = words_.find(word);
  return found ? *found : unknown;
}

TextVocab TextVocab::from_words(const std::vector<std::string>& words) {
  if (words.size() < 2 || words[0] != "<pad>" || words[1] != "<unk>") {
    throw ConfigError("text vocabulary must start with <pad>, <unk>");
  }
  TextVocab v;
  for (std::size_t i = 2; i < words.size(); ++i) v.words_.intern(words[i]);
  if (v.size() != words.size()) throw ConfigError("duplicate word in text vocabulary");
  return v;
}

TokenSequence tokenize(std::string_view text, const TextVocab& vocab, std::size_t max_len) {
  if (max_len == 0) throw ConfigError("sequence length must be positive");
  const std::vector<std::string> words = split_words(text);
  if (words.empty()) throw DomainError("cannot tokenize empty text");
  TokenSequence seq;
  seq.length = std::min(words.size(), max_len);
  seq.ids.assign(max_len, TextVocab::pad);
  seq.mask.assign(max_len, false);
  for (std::size_t t = 0; t < seq.length; ++t) {
    seq.ids[t] = vocab.id(words[t]);
    seq.mask[t] = true;
  }
  return seq;
}

Tensor init_word_table(const TextVocab& vocab, std::size_t dim, double sigma, std::mt19937_64& rng,
                       const WordVectors* pretrained) {
  if (pretrained != nullptr && pretrained->dim() != dim) {
    throw ConfigError("word vectors have dimension " + std::to_string(pretrained->dim()) +
                      ", config asks for " + std::to_string(dim));
  }
  std::normal_distribution<double> dist(0.0, sigma);
  Tensor table = Tensor::zeros(vocab.size(), dim);
  for (std::size_t i = 1; i < vocab.size(); ++i) {
    auto row = table.row(i);
    if (pretrained != nullptr) {
      if (auto id = pretrained->find(vocab.words().name(static_cast<Id>(i)))) {
        std::copy(pretrained->matrix.row(*id).begin(), pretrained->matrix.row(*id).end(), row.begin());
        continue;
      }
    }
    for (double& v : row) v = dist(rng);
  }
  return table;
}

Var encode_mean(Graph& g, Var word_table, const std::vector<const TokenSequence*>& batch,
                const num::LstmVars& lstm) {
  if (batch.empty()) throw DomainError("encode: empty batch");
  const std::size_t steps = batch.front()->ids.size();
  for (const TokenSequence* s : batch) {
    if (s->ids.size() != steps) throw DimensionError("encode: sequences of different padded length");
  }
  const std::size_t b = batch.size();
  const std::size_t n = lstm.recurrent_weights.rows();
  // Steps past the longest real prefix cannot affect the masked mean.
  std::size_t used = 0;
  for (const TokenSequence* s : batch) used = std::max(used, s->length);
  num::LstmState state = num::lstm_zero_state(g, b, n);
  std::vector<Var> hidden;
  hidden.reserve(used);
  std::vector<std::vector<bool>> mask(b, std::vector<bool>(used));
  std::vector<std::size_t> ids(b);
  for (std::size_t t = 0; t < used; ++t) {
    for (std::size_t i = 0; i < b; ++i) {
      ids[i] = batch[i]->ids[t];
      mask[i][t] = batch[i]->mask[t];
    }
    Var x = num::gather_rows(word_table, ids);
    state = num::lstm_cell(x, state, lstm);
    hidden.push_back(state.h);
  }
  return num::masked_mean(hidden, mask);
}

Var context_from_mean(Var mean, Var projection) { return num::relu(num::matmul(mean, projection)); }

Var encode(Graph& g, Var word_table, const std::vector<const TokenSequence*>& batch, const num::LstmVars& lstm,
           Var projection) {
  return context_from_mean(encode_mean(g, word_table, batch, lstm), projection);
}

Dataset read_dataset(std::istream& in, const std::string& source, const std::vector<std::string>* labels) {
  struct Row {
    std::string label, text;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError(source, line_no, "expected label<TAB>text");
    std::string text = line.substr(tab + 1);
    if (split_words(text).empty()) throw ParseError(source, line_no, "empty text");
    rows.push_back({line.substr(0, tab), std::move(text), line_no});
  }
  if (rows.empty()) throw DomainError(source + ": no examples");
  Dataset data;
  if (labels != nullptr) {
    data.labels = *labels;
  } else {
    for (const Row& r : rows) data.labels.push_back(r.label);
    std::sort(data.labels.begin(), data.labels.end());
    data.labels.erase(std::unique(data.labels.begin(), data.labels.end()), data.labels.end());
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < data.labels.size(); ++k) index.emplace(data.labels[k], k);
  for (Row& r : rows) {
    auto it = index.find(r.label);
    if (it == index.end()) throw ParseError(source, r.line, "unknown label '" + r.label + "'");
    data.examples.push_back({it->second, std::move(r.text)});
  }
  return data;
}

Dataset read_dataset(const std::filesystem::path& path, const std::vector<std::string>* labels) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_dataset(in, path.string(), labels);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  for (const LabeledText& ex : data.examples) out << data.labels[ex.label] << '\t' << ex.text << '\n';
}

}  // namespace kgaug
