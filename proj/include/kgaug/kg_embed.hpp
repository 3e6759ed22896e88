#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kgaug/kg_store.hpp"
#include "kgaug/numerics/tensor.hpp"
#include "kgaug/word_vectors.hpp"

namespace kgaug {

enum class Norm { l1, l2 };
enum class TableKind { entity, relation };

Norm parse_norm(const std::string& text);
std::string to_string(Norm norm);

struct EmbeddingTable {
  TableKind kind = TableKind::entity;
  std::vector<std::string> names;
  num::Tensor vectors;  // size() x dim()

  std::size_t size() const { return names.size(); }
  std::size_t dim() const { return vectors.cols(); }
  std::span<const double> row(std::size_t id) const { return vectors.row(id); }
};

struct TransEConfig {
  std::size_t dim = 16;
  double margin = 1.0;
  Norm norm = Norm::l1;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  std::uint64_t seed = 1;
  // Evaluate expected_margin_loss after every epoch (O(|T|·|E|·m)).
  bool track_objective = true;
};

// ||h + r - t|| under `norm`.
double transe_energy(std::span<const double> h, std::span<const double> r,
                     std::span<const double> t, Norm norm);
double margin_loss(double d_pos, double d_neg, double margin);

// Mean word vector of each entity's description; words without a vector are
// ignored and an entity with none left counts as undescribed.
struct DescriptionFeatures {
  num::Tensor means;  // |E| x d_w
  std::vector<bool> described;

  std::size_t count() const;
};

DescriptionFeatures description_features(const KgVocab& vocab, const WordVectors& words);

// Gaussian projection d_w -> m with std 1/sqrt(d_w).
num::Tensor random_projection(std::size_t word_dim, std::size_t dim, std::uint64_t seed);

// Described entities: normalize(mean · projection). Others: uniform in
// [-6/sqrt(m), 6/sqrt(m)] drawn from `seed`.
EmbeddingTable init_from_descriptions(const KgVocab& vocab, const DescriptionFeatures& features,
                                      const num::Tensor& projection, std::uint64_t seed);

// Mean hinge over every training triple paired with each of its head and tail
// corruptions: the expectation of the sampled training loss.
double expected_margin_loss(const EmbeddingTable& entities, const EmbeddingTable& relations,
                            const TripleSet& triples, double margin, Norm norm);

struct TransEResult {
  EmbeddingTable entities;
  EmbeddingTable relations;
  std::vector<double> epoch_loss;  // mean sampled hinge per positive/negative pair
  std::vector<double> epoch_objective;  // expected_margin_loss after each epoch
  num::Tensor projection;          // empty unless descriptions were used
};

// When `words` is given and at least one entity has a usable description, a
// projection is trained jointly: e_i = mean_i · P + z_i for described entities.
TransEResult train_transe(const KgVocab& vocab, const TripleSet& triples, const TransEConfig& config,
                          const WordVectors* words = nullptr);

struct LinkPrediction {
  double mean_rank = 0.0;
  double hits_at_1 = 0.0;
  double hits_at_10 = 0.0;
  std::size_t count = 0;
};

// Filtered tail ranking: candidate tails forming a triple in `known` (other
// than the test tail) are removed before ranking. Rank 1 is best.
LinkPrediction eval_link_prediction(const EmbeddingTable& entities, const EmbeddingTable& relations,
                                    const TripleSet& test, const TripleSet& known, Norm norm);

void write_embeddings(std::ostream& out, const EmbeddingTable& table);
EmbeddingTable read_embeddings(std::istream& in, const std::string& source = "<stream>");
EmbeddingTable read_embeddings(const std::filesystem::path& path);

}  // namespace kgaug
