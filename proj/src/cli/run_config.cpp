#include "kgaug/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "kgaug/error.hpp"

namespace kgaug {

namespace {

enum class Kind { size, positive, real, boolean, u64, mode, norm, reals };

struct KeyInfo {
  const char* key;
  Kind kind;
  const char* desk;
};

// Desk-scale defaults. Table-scale presets override a subset below.
const KeyInfo kKeys[] = {
    {"seed", Kind::u64, "1"},
    {"mode", Kind::mode, "conv_kg"},
    {"fraction", Kind::real, "1"},
    {"fractions", Kind::reals, "0.5,0.7,1"},
    {"clusters", Kind::positive, "8"},
    {"kg_dim", Kind::positive, "16"},
    {"kg_epochs", Kind::size, "200"},
    {"kg_margin", Kind::real, "1"},
    {"kg_norm", Kind::norm, "l1"},
    {"kg_batch_size", Kind::positive, "64"},
    {"kg_learning_rate", Kind::real, "0.01"},
    {"word_dim", Kind::positive, "16"},
    {"hidden_dim", Kind::positive, "32"},
    {"max_len", Kind::positive, "16"},
    {"word_sigma", Kind::real, "0.1"},
    {"train_words", Kind::boolean, "true"},
    {"shared_encoder", Kind::boolean, "false"},
    {"finetune_kg", Kind::boolean, "false"},
    {"relu_after_pool", Kind::boolean, "false"},
    {"identity_encoder", Kind::boolean, "false"},
    {"epochs", Kind::size, "30"},
    {"pretrain_epochs", Kind::size, "10"},
    {"batch_size", Kind::positive, "32"},
    {"learning_rate", Kind::real, "0.01"},
    {"synth_groups", Kind::positive, "4"},
    {"synth_subjects_per_group", Kind::positive, "12"},
    {"synth_relations", Kind::positive, "4"},
    {"synth_filler_words", Kind::size, "4"},
    {"synth_filler_vocab", Kind::positive, "40"},
    {"synth_train_docs_per_subject", Kind::positive, "16"},
    {"synth_test_docs_per_pair", Kind::size, "2"},
};

using Overrides = std::vector<std::pair<const char*, const char*>>;

const Overrides& overrides(const std::string& preset) {
  static const Overrides desk;
  static const Overrides news20{{"batch_size", "256"}, {"learning_rate", "0.05"}, {"word_dim", "300"},
                                {"max_len", "300"},    {"hidden_dim", "200"},      {"kg_dim", "50"},
                                {"clusters", "20"},    {"epochs", "20"}};
  static const Overrides snli{{"batch_size", "1024"}, {"learning_rate", "0.05"}, {"word_dim", "300"},
                              {"max_len", "85"},      {"hidden_dim", "200"},      {"kg_dim", "50"},
                              {"clusters", "20"},     {"epochs", "20"}};
  if (preset == "desk") return desk;
  if (preset == "news20") return news20;
  if (preset == "snli") return snli;
  throw ConfigError("unknown preset '" + preset + "' (expected desk, news20 or snli)");
}

const KeyInfo& lookup(const std::string& key) {
  for (const KeyInfo& s : kKeys)
    if (key == s.key) return s;
  throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && !text.empty();
}

bool parse_bool(const std::string& text, bool& out) {
  if (text == "true" || text == "1") return out = true, true;
  if (text == "false" || text == "0") return out = false, true;
  return false;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    double v = 0.0;
    if (!parse_number(trim(text.substr(start, comma - start)), v)) {
      throw ConfigError(key + ": expected comma-separated numbers, got '" + text + "'");
    }
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

void validate(const KeyInfo& s, const std::string& value) {
  const std::string key = s.key;
  auto bad = [&](const char* what) { return ConfigError(key + ": expected " + what + ", got '" + value + "'"); };
  switch (s.kind) {
    case Kind::size:
    case Kind::positive: {
      std::size_t v = 0;
      if (!parse_number(value, v)) throw bad("a non-negative integer");
      if (s.kind == Kind::positive && v == 0) throw bad("a positive integer");
      break;
    }
    case Kind::u64: {
      std::uint64_t v = 0;
      if (!parse_number(value, v)) throw bad("an unsigned integer");
      break;
    }
    case Kind::real: {
      double v = 0.0;
      if (!parse_number(value, v)) throw bad("a number");
      break;
    }
    case Kind::boolean: {
      bool v = false;
      if (!parse_bool(value, v)) throw bad("true or false");
      break;
    }
    case Kind::mode:
      parse_mode(value);
      break;
    case Kind::norm:
      parse_norm(value);
      break;
    case Kind::reals:
      parse_list(key, value);
      break;
  }
}

}  // namespace

std::vector<std::string> RunConfig::preset_names() { return {"desk", "news20", "snli"}; }

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const KeyInfo& s : kKeys) out.push_back(s.key);
  return out;
}

RunConfig RunConfig::preset(const std::string& name) {
  RunConfig c;
  c.preset_ = name;
  for (const KeyInfo& s : kKeys) c.values_[s.key] = s.desk;
  for (const auto& [key, value] : overrides(name)) c.values_[key] = value;
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeyInfo& s = lookup(key);
  const std::string v = trim(value);
  validate(s, v);
  values_[key] = v;
}

void RunConfig::merge(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string text = trim(line.substr(0, line.find('#')));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(source, number, "expected key=value");
    const std::string key = trim(text.substr(0, eq));
    if (key == "preset") throw ParseError(source, number, "preset must be chosen with --preset");
    try {
      set(key, text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void RunConfig::merge(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  merge(in, path.string());
}

const std::string& RunConfig::get(const std::string& key) const {
  lookup(key);
  return values_.at(key);
}

std::size_t RunConfig::get_size(const std::string& key) const {
  std::size_t v = 0;
  parse_number(get(key), v);
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  double v = 0.0;
  parse_number(get(key), v);
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  bool v = false;
  parse_bool(get(key), v);
  return v;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  std::uint64_t v = 0;
  parse_number(get(key), v);
  return v;
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const { return parse_list(key, get(key)); }

void RunConfig::write(std::ostream& out) const {
  out << "preset=" << preset_ << '\n';
  for (const auto& [key, value] : values_) out << key << '=' << value << '\n';
}

TransEConfig RunConfig::transe() const {
  TransEConfig c;
  c.dim = get_size("kg_dim");
  c.margin = get_double("kg_margin");
  c.norm = parse_norm(get("kg_norm"));
  c.epochs = get_size("kg_epochs");
  c.batch_size = get_size("kg_batch_size");
  c.learning_rate = get_double("kg_learning_rate");
  c.seed = get_u64("seed");
  c.track_objective = false;
  return c;
}

TrainConfig RunConfig::train() const {
  TrainConfig c;
  ModelConfig& m = c.model;
  m.mode = parse_mode(get("mode"));
  m.word_dim = get_size("word_dim");
  m.hidden_dim = get_size("hidden_dim");
  m.max_len = get_size("max_len");
  m.word_sigma = get_double("word_sigma");
  m.train_words = get_bool("train_words");
  m.shared_encoder = get_bool("shared_encoder");
  m.finetune_kg = get_bool("finetune_kg");
  m.relu_after_pool = get_bool("relu_after_pool");
  m.identity_encoder = get_bool("identity_encoder");
  c.epochs = get_size("epochs");
  c.pretrain_epochs = get_size("pretrain_epochs");
  c.batch_size = get_size("batch_size");
  c.learning_rate = get_double("learning_rate");
  c.fraction = get_double("fraction");
  c.seed = get_u64("seed");
  return c;
}

SynthConfig RunConfig::synth() const {
  SynthConfig c;
  c.groups = get_size("synth_groups");
  c.subjects_per_group = get_size("synth_subjects_per_group");
  c.relations = get_size("synth_relations");
  c.filler_words = get_size("synth_filler_words");
  c.filler_vocab = get_size("synth_filler_vocab");
  c.train_docs_per_subject = get_size("synth_train_docs_per_subject");
  c.test_docs_per_pair = get_size("synth_test_docs_per_pair");
  c.seed = get_u64("seed");
  return c;
}

}  // namespace kgaug
