#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kgaug/kg_store.hpp"
#include "kgaug/text_encoder.hpp"

namespace kgaug {

// Fact-determined classification benchmark. Subjects fall into hidden
// groups; relation r links every subject of group g to the object o(g, r).
// A document names one subject and one relation cue, and its label is the
// class of o(g, r), stored in the graph as (o(g, r), category, class). Object names never appear in text, and each subject is
// seen in training under a single relation, so text alone cannot tell which
// class a subject takes under the other relations.
struct SynthConfig {
  std::size_t groups = 4;  // also the number of classes
  std::size_t subjects_per_group = 12;
  std::size_t relations = 4;
  std::size_t filler_words = 4;  // per document
  std::size_t filler_vocab = 40;
  std::size_t train_docs_per_subject = 16;
  std::size_t test_docs_per_pair = 2;  // per (subject, unseen relation)
  std::uint64_t seed = 1;
};

struct SynthData {
  KgVocab vocab;
  TripleSet triples;
  Dataset train;
  Dataset test;
  std::vector<std::size_t> subject_group;  // entity id -> group, subjects only
};

SynthData make_synth(const SynthConfig& config);

// Writes kg.tsv, train.tsv and test.tsv under `dir` (created if needed).
void write_synth(const std::filesystem::path& dir, const SynthData& data);

}  // namespace kgaug
