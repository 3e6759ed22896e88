#include "kgaug/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "kgaug/error.hpp"

namespace kgaug {

namespace {

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02zu", prefix, i);
  return buf;
}

void write_file(const std::filesystem::path& path, const auto& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  writer(out);
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace

SynthData make_synth(const SynthConfig& c) {
  if (c.groups < 2) throw ConfigError("synth: need at least 2 groups");
  if (c.relations < 2) throw ConfigError("synth: need at least 2 relations");
  if (c.subjects_per_group % c.relations != 0) {
    throw ConfigError("synth: subjects_per_group must be a multiple of relations");
  }
  if (c.filler_vocab == 0 || c.train_docs_per_subject == 0) throw ConfigError("synth: empty corpus");
  std::mt19937_64 rng(c.seed);
  SynthData d;

  // Subject names are shuffled so that numbering says nothing about groups.
  const std::size_t subjects = c.groups * c.subjects_per_group;
  std::vector<std::size_t> name_order(subjects);
  std::iota(name_order.begin(), name_order.end(), std::size_t{0});
  std::shuffle(name_order.begin(), name_order.end(), rng);
  std::vector<Id> subject_ids(subjects);
  for (std::size_t i = 0; i < subjects; ++i) subject_ids[name_order[i]] = d.vocab.entities.intern(numbered("e", i));
  d.subject_group.resize(subjects);
  for (std::size_t s = 0; s < subjects; ++s) d.subject_group[subject_ids[s]] = s / c.subjects_per_group;
  std::vector<std::vector<Id>> object(c.groups, std::vector<Id>(c.relations));
  for (std::size_t g = 0; g < c.groups; ++g)
    for (std::size_t r = 0; r < c.relations; ++r)
      object[g][r] = d.vocab.entities.intern(numbered("o", g * c.relations + r));
  std::vector<std::string> cue(c.relations);
  for (std::size_t r = 0; r < c.relations; ++r) {
    cue[r] = numbered("rel", r);
    d.vocab.relations.intern(cue[r]);
  }
  // Class of o(g, r): a random permutation of the groups for each relation.
  // The class is itself a fact, (o(g, r), category, class), so objects of
  // one class share a neighbourhood in the embedding space.
  std::vector<std::vector<std::size_t>> label(c.relations, std::vector<std::size_t>(c.groups));
  for (auto& perm : label) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
  }
  std::vector<Id> class_ids;
  for (std::size_t k = 0; k < c.groups; ++k) {
    d.train.labels.push_back(numbered("class", k));
    class_ids.push_back(d.vocab.entities.intern(d.train.labels.back()));
  }
  d.test.labels = d.train.labels;
  const Id category = d.vocab.relations.intern("category");
  d.vocab.descriptions.resize(d.vocab.entities.size());

  for (std::size_t s = 0; s < subjects; ++s)
    for (std::size_t r = 0; r < c.relations; ++r)
      d.triples.insert({subject_ids[s], static_cast<Id>(r), object[s / c.subjects_per_group][r]});
  for (std::size_t g = 0; g < c.groups; ++g)
    for (std::size_t r = 0; r < c.relations; ++r) d.triples.insert({object[g][r], category, class_ids[label[r][g]]});

  std::uniform_int_distribution<std::size_t> filler(0, c.filler_vocab - 1);
  auto document = [&](std::size_t s, std::size_t r) {
    std::vector<std::string> words{d.vocab.entities.name(subject_ids[s]), cue[r]};
    for (std::size_t i = 0; i < c.filler_words; ++i) words.push_back(numbered("w", filler(rng)));
    std::shuffle(words.begin(), words.end(), rng);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    return LabeledText{label[r][s / c.subjects_per_group], text};
  };

  // Within each group the training relation is balanced across subjects, so
  // every object is reachable from some training document.
  std::vector<std::size_t> seen(subjects);
  for (std::size_t g = 0; g < c.groups; ++g) {
    std::vector<std::size_t> slots(c.subjects_per_group);
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i % c.relations;
    std::shuffle(slots.begin(), slots.end(), rng);
    for (std::size_t i = 0; i < slots.size(); ++i) seen[g * c.subjects_per_group + i] = slots[i];
  }
  for (std::size_t s = 0; s < subjects; ++s)
    for (std::size_t k = 0; k < c.train_docs_per_subject; ++k) d.train.examples.push_back(document(s, seen[s]));
  for (std::size_t s = 0; s < subjects; ++s)
    for (std::size_t r = 0; r < c.relations; ++r) {
      if (r == seen[s]) continue;
      for (std::size_t k = 0; k < c.test_docs_per_pair; ++k) d.test.examples.push_back(document(s, r));
    }
  std::shuffle(d.train.examples.begin(), d.train.examples.end(), rng);
  return d;
}

void write_synth(const std::filesystem::path& dir, const SynthData& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "kg.tsv", [&](std::ostream& out) { write_triples(out, data.vocab, data.triples); });
  write_file(dir / "train.tsv", [&](std::ostream& out) { write_dataset(out, data.train); });
  write_file(dir / "test.tsv", [&](std::ostream& out) { write_dataset(out, data.test); });
}

}  // namespace kgaug
