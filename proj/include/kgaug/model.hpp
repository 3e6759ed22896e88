#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kgaug/clustering.hpp"
#include "kgaug/kg_embed.hpp"
#include "kgaug/numerics/graph.hpp"
#include "kgaug/numerics/lstm.hpp"
#include "kgaug/retrieval.hpp"
#include "kgaug/text_encoder.hpp"

namespace kgaug {

enum class Mode { plain, vanilla_kg, conv_kg };

Mode parse_mode(const std::string& text);
std::string to_string(Mode mode);
inline bool uses_kg(Mode mode) { return mode != Mode::plain; }

struct ModelConfig {
  Mode mode = Mode::conv_kg;
  std::size_t word_dim = 16;
  std::size_t hidden_dim = 32;
  std::size_t max_len = 16;
  double word_sigma = 0.1;
  bool train_words = true;
  // One LSTM feeds all three context projections.
  bool shared_encoder = false;
  // Let the classification loss update the KG tables (frozen by default).
  bool finetune_kg = false;
  bool relu_after_pool = false;
  // Global-max cluster encoder instead of the learned convolution stack.
  bool identity_encoder = false;
};

// Frozen KG artifacts. Cluster counts of 0 mean "attend over the full table";
// relations are left unclustered when there are fewer of them than clusters.
struct KgContext {
  EmbeddingTable entities;
  EmbeddingTable relations;
  std::vector<std::size_t> entity_assignment;
  std::size_t entity_clusters = 0;
  std::vector<std::size_t> relation_assignment;
  std::size_t relation_clusters = 0;

  std::size_t dim() const { return entities.dim(); }
};

KgContext make_kg_context(EmbeddingTable entities, EmbeddingTable relations, std::size_t clusters,
                          std::uint64_t seed);

class Model {
 public:
  enum class Head { joint, retrieval };
  enum Branch : std::size_t { classification = 0, entity = 1, relation = 2 };

  struct Output {
    num::Var probs;             // B x K
    num::Var entity_weights;    // invalid in plain mode
    num::Var relation_weights;
    RetrievedFact fact;  // empty in plain mode
  };

  // Without a KG (plain mode) `kg` may be empty; u = m = kg.dim(), or
  // hidden_dim when there is no KG.
  // `pretrained` rows seed the word table (other words are N(0, sigma^2)).
  Model(const ModelConfig& config, TextVocab vocab, std::vector<std::string> labels, KgContext kg,
        std::uint64_t seed, const WordVectors* pretrained = nullptr);
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  Output forward(num::Graph& g, const std::vector<const TokenSequence*>& batch, Head head = Head::joint);

  // Trainable parameters reachable from a head, in a fixed order.
  std::vector<num::Parameter*> parameters(Head head = Head::joint);
  // Every parameter the model owns, trainable or not.
  std::vector<num::Parameter*> all_parameters();
  num::Parameter* find_parameter(const std::string& name);

  TokenSequence tokenize(const std::string& text) const;

  const ModelConfig& config() const { return config_; }
  const TextVocab& vocab() const { return vocab_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const KgContext& kg() const { return kg_; }
  std::size_t num_classes() const { return labels_.size(); }
  std::size_t context_dim() const { return context_dim_; }

  // Re-encodes every cluster with a new member order (members permuted
  // within their cluster); used by the shuffle-robustness experiment.
  void set_entity_members(std::vector<std::vector<std::size_t>> members);
  const ClusterSet& entity_clusters() const { return entity_set_; }

 private:
  num::Var space(num::Graph& g, num::Var table, const ClusterSet& set, ConvEncoderParams* conv);
  std::vector<num::Var> contexts(num::Graph& g, num::Var words, const std::vector<const TokenSequence*>& batch,
                                 bool need_classification, bool need_kg);

  ModelConfig config_;
  TextVocab vocab_;
  std::vector<std::string> labels_;
  KgContext kg_;
  std::size_t context_dim_ = 0;

  num::Parameter word_table_;
  std::vector<num::LstmParams> lstms_;         // 1 when shared or plain, else 3
  std::vector<num::Parameter> projections_;    // indexed by Branch; 1 in plain mode
  num::Parameter plain_out_;                   // C -> K
  num::Parameter fact_proj_;                   // 3m -> u
  num::Parameter joint_proj_;                  // 2u -> u
  num::Parameter joint_out_;                   // u -> K
  num::Parameter retrieval_out_;               // u -> K, pretraining only
  num::Parameter entity_table_;
  num::Parameter relation_table_;
  ClusterSet entity_set_;
  ClusterSet relation_set_;
  ConvEncoderParams entity_conv_;
  ConvEncoderParams relation_conv_;
};

struct TrainConfig {
  ModelConfig model;
  std::size_t epochs = 30;
  std::size_t pretrain_epochs = 0;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double fraction = 1.0;
  std::uint64_t seed = 1;
};

struct MetricRow {
  std::size_t epoch = 0;
  std::string split;  // pretrain_train | pretrain_test | train | test
  double loss = 0.0;
  double accuracy = 0.0;
};

struct Metrics {
  Mode mode = Mode::plain;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  std::vector<MetricRow> rows;
  // Mean entropy of the entity attention on the test set, per joint epoch.
  std::vector<double> attention_entropy;
  double pretrain_accuracy = -1.0;  // < 0 when no pretraining ran
  double test_accuracy = 0.0;
  std::size_t train_examples = 0;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  double entropy = 0.0;  // entity attention; 0 in plain mode
  std::vector<std::size_t> predictions;
};

Evaluation evaluate(Model& model, const Dataset& data, Model::Head head = Model::Head::joint);

// Trains the retrieval head alone; U_pre is left in the model but unused by
// the joint head. Appends pretrain_* rows to `metrics`.
void pretrain_retrieval(Model& model, const Dataset& train, const Dataset& test, const TrainConfig& config,
                        Metrics& metrics);

// Optional pretraining, then joint training. Throws TrainingError naming the
// epoch and batch if a loss or gradient goes non-finite.
Metrics train(Model& model, const Dataset& train, const Dataset& test, const TrainConfig& config);

// Per-label random subset of round(fraction * n_label) examples in original
// order. A label left with no example is a domain error.
Dataset stratified_subsample(const Dataset& data, double fraction, std::uint64_t seed);

struct RunResult {
  Model model;
  Metrics metrics;
};

// Subsample, build the vocabulary from the kept training text (plus every
// pretrained word), build and train a model.
RunResult run_experiment(const Dataset& train, const Dataset& test, const KgContext& kg,
                         const TrainConfig& config, const WordVectors* pretrained = nullptr);

struct SweepRow {
  double fraction = 1.0;
  Mode mode = Mode::plain;
  double accuracy = 0.0;
};

std::vector<SweepRow> fraction_sweep(const Dataset& train, const Dataset& test, const KgContext& kg,
                                     const TrainConfig& config, const std::vector<double>& fractions,
                                     const std::vector<Mode>& modes = {Mode::plain, Mode::conv_kg},
                                     const WordVectors* pretrained = nullptr);

void write_metrics_csv(std::ostream& out, const Metrics& metrics, bool header = true);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Self-contained JSON: config, vocabulary, labels, KG tables, clusters and
// every parameter.
void save_model(std::ostream& out, Model& model);
void save_model(const std::filesystem::path& path, Model& model);
Model load_model(std::istream& in, const std::string& source = "<stream>");
Model load_model(const std::filesystem::path& path);

}  // namespace kgaug
