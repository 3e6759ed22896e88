#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgaug {

using Id = std::uint32_t;

struct Triple {
  Id head = 0;
  Id relation = 0;
  Id tail = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

// Name <-> id bijection, ids assigned in first-appearance order.
class NameTable {
 public:
  Id intern(std::string_view name);
  std::optional<Id> find(std::string_view name) const;
  Id at(std::string_view name) const;  // IndexError when absent
  const std::string& name(Id id) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Id> ids_;
};

struct KgVocab {
  NameTable entities;
  NameTable relations;
  // One token list per entity id; empty when no description was given.
  std::vector<std::vector<std::string>> descriptions;

  std::size_t num_entities() const { return entities.size(); }
  std::size_t num_relations() const { return relations.size(); }
  bool contains(const Triple& t) const;
};

class TripleSet {
 public:
  TripleSet() = default;
  explicit TripleSet(const std::vector<Triple>& triples);

  // Returns false (and stores nothing) for a duplicate.
  bool insert(const Triple& t);
  bool contains(const Triple& t) const { return index_.count(key(t)) != 0; }
  const std::vector<Triple>& triples() const { return triples_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }

 private:
  static std::uint64_t key(const Triple& t);

  std::vector<Triple> triples_;
  std::unordered_set<std::uint64_t> index_;
};

struct TripleFile {
  KgVocab vocab;
  TripleSet triples;
  std::size_t duplicates = 0;
};

TripleFile parse_triples(std::istream& in, const std::string& source = "<stream>");
TripleFile parse_triples(const std::filesystem::path& path);

// Reads triples naming only entities/relations already in `vocab`;
// unknown names are a parse error. Used for held-out splits.
TripleSet parse_triples_with(std::istream& in, const KgVocab& vocab,
                             const std::string& source = "<stream>");
TripleSet parse_triples_with(const std::filesystem::path& path, const KgVocab& vocab);

void write_triples(std::ostream& out, const KgVocab& vocab, const TripleSet& triples);

// Returns the number of lines skipped because the entity is unknown.
std::size_t parse_descriptions(std::istream& in, KgVocab& vocab,
                               const std::string& source = "<stream>");
std::size_t parse_descriptions(const std::filesystem::path& path, KgVocab& vocab);

// Lowercase + whitespace split.
std::vector<std::string> split_lower(std::string_view text);

// Replaces head or tail (probability 1/2 each) by a different entity drawn
// uniformly. The result may still be a true triple.
Triple corrupt(const Triple& t, std::size_t num_entities, std::mt19937_64& rng);

}  // namespace kgaug
