#include "kgaug/kg_store.hpp"

#include <cctype>
#include <fstream>
#include <limits>

#include "kgaug/error.hpp"

namespace kgaug {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

bool skippable(std::string_view line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string_view::npos || line[first] == '#';
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

// Splits "head\trelation\ttail"; every field must be nonempty.
bool split_triple(std::string_view line, std::string_view (&fields)[3]) {
  for (int i = 0; i < 3; ++i) {
    const auto tab = line.find('\t');
    if (i < 2) {
      if (tab == std::string_view::npos) return false;
      fields[i] = line.substr(0, tab);
      line.remove_prefix(tab + 1);
    } else {
      if (tab != std::string_view::npos) return false;
      fields[i] = line;
    }
    if (fields[i].empty()) return false;
  }
  return true;
}

}  // namespace

Id NameTable::intern(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) return it->second;
  if (names_.size() >= std::numeric_limits<Id>::max()) throw DomainError("vocabulary overflow");
  const Id id = static_cast<Id>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<Id> NameTable::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Id NameTable::at(std::string_view name) const {
  auto id = find(name);
  if (!id) throw IndexError("unknown name '" + std::string(name) + "'");
  return *id;
}

const std::string& NameTable::name(Id id) const {
  if (id >= names_.size()) throw IndexError("id " + std::to_string(id) + " out of range");
  return names_[id];
}

bool KgVocab::contains(const Triple& t) const {
  return t.head < num_entities() && t.tail < num_entities() && t.relation < num_relations();
}

TripleSet::TripleSet(const std::vector<Triple>& triples) {
  for (const Triple& t : triples) insert(t);
}

std::uint64_t TripleSet::key(const Triple& t) {
  // 21 bits per field is far beyond desk scale; checked on insert.
  return (static_cast<std::uint64_t>(t.head) << 42) | (static_cast<std::uint64_t>(t.relation) << 21) |
         t.tail;
}

bool TripleSet::insert(const Triple& t) {
  constexpr Id limit = 1u << 21;
  if (t.head >= limit || t.relation >= limit || t.tail >= limit) {
    throw DomainError("triple id exceeds 2^21");
  }
  if (!index_.insert(key(t)).second) return false;
  triples_.push_back(t);
  return true;
}

TripleFile parse_triples(std::istream& in, const std::string& source) {
  TripleFile out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = chomp(raw);
    if (skippable(line)) continue;
    std::string_view f[3];
    if (!split_triple(line, f)) {
      throw ParseError(source, line_no, "expected head<TAB>relation<TAB>tail");
    }
    Triple t;
    t.head = out.vocab.entities.intern(f[0]);
    t.relation = out.vocab.relations.intern(f[1]);
    t.tail = out.vocab.entities.intern(f[2]);
    if (!out.triples.insert(t)) ++out.duplicates;
  }
  if (out.triples.empty()) throw DomainError(source + ": no triples");
  out.vocab.descriptions.assign(out.vocab.num_entities(), {});
  return out;
}

TripleFile parse_triples(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_triples(in, path.string());
}

TripleSet parse_triples_with(std::istream& in, const KgVocab& vocab, const std::string& source) {
  TripleSet out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = chomp(raw);
    if (skippable(line)) continue;
    std::string_view f[3];
    if (!split_triple(line, f)) {
      throw ParseError(source, line_no, "expected head<TAB>relation<TAB>tail");
    }
    const auto h = vocab.entities.find(f[0]);
    const auto r = vocab.relations.find(f[1]);
    const auto t = vocab.entities.find(f[2]);
    if (!h || !r || !t) throw ParseError(source, line_no, "name not in the knowledge graph");
    out.insert({*h, *r, *t});
  }
  return out;
}

TripleSet parse_triples_with(const std::filesystem::path& path, const KgVocab& vocab) {
  auto in = open_input(path);
  return parse_triples_with(in, vocab, path.string());
}

void write_triples(std::ostream& out, const KgVocab& vocab, const TripleSet& triples) {
  for (const Triple& t : triples.triples()) {
    out << vocab.entities.name(t.head) << '\t' << vocab.relations.name(t.relation) << '\t'
        << vocab.entities.name(t.tail) << '\n';
  }
}

std::vector<std::string> split_lower(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::size_t parse_descriptions(std::istream& in, KgVocab& vocab, const std::string& source) {
  vocab.descriptions.resize(vocab.num_entities());
  std::size_t skipped = 0;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = chomp(raw);
    if (skippable(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw ParseError(source, line_no, "expected entity<TAB>text");
    }
    const auto id = vocab.entities.find(line.substr(0, tab));
    if (!id) {
      ++skipped;
      continue;
    }
    vocab.descriptions[*id] = split_lower(line.substr(tab + 1));
  }
  return skipped;
}

std::size_t parse_descriptions(const std::filesystem::path& path, KgVocab& vocab) {
  auto in = open_input(path);
  return parse_descriptions(in, vocab, path.string());
}

Triple corrupt(const Triple& t, std::size_t num_entities, std::mt19937_64& rng) {
  if (num_entities < 2) throw DomainError("corrupt needs at least 2 entities");
  std::uniform_int_distribution<int> coin(0, 1);
  // Draw from N-1 values and skip over the original to stay uniform.
  std::uniform_int_distribution<std::size_t> pick(0, num_entities - 2);
  Triple out = t;
  Id& slot = coin(rng) == 0 ? out.head : out.tail;
  std::size_t e = pick(rng);
  if (e >= slot) ++e;
  slot = static_cast<Id>(e);
  return out;
}

}  // namespace kgaug
