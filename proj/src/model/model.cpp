#include "kgaug/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kgaug/error.hpp"
#include "kgaug/numerics/ops.hpp"

namespace kgaug {

using num::Graph;
using num::Parameter;
using num::Tensor;
using num::Var;

Mode parse_mode(const std::string& text) {
  if (text == "plain") return Mode::plain;
  if (text == "vanilla_kg") return Mode::vanilla_kg;
  if (text == "conv_kg") return Mode::conv_kg;
  throw ConfigError("unknown mode '" + text + "' (expected plain, vanilla_kg or conv_kg)");
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::plain: return "plain";
    case Mode::vanilla_kg: return "vanilla_kg";
    case Mode::conv_kg: return "conv_kg";
  }
  return "?";
}

KgContext make_kg_context(EmbeddingTable entities, EmbeddingTable relations, std::size_t clusters,
                          std::uint64_t seed) {
  KgContext kg;
  if (clusters > 0) {
    ClusterSet e = balanced_kmeans(entities, ClusterConfig{clusters, 100, 5, seed});
    kg.entity_assignment = e.assignment;
    kg.entity_clusters = clusters;
    if (relations.size() >= clusters) {
      ClusterSet r = balanced_kmeans(relations, ClusterConfig{clusters, 100, 5, seed});
      kg.relation_assignment = r.assignment;
      kg.relation_clusters = clusters;
    }
  }
  kg.entities = std::move(entities);
  kg.relations = std::move(relations);
  return kg;
}

namespace {

Parameter glorot(const std::string& name, std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t({rows, cols});
  for (double& v : t.data()) v = dist(rng);
  return Parameter(name, std::move(t));
}

const char* branch_name(std::size_t b) {
  static const char* names[] = {"cls", "entity", "relation"};
  return names[b];
}

}  // namespace

Model::Model(const ModelConfig& config, TextVocab vocab, std::vector<std::string> labels, KgContext kg,
             std::uint64_t seed, const WordVectors* pretrained)
    : config_(config), vocab_(std::move(vocab)), labels_(std::move(labels)), kg_(std::move(kg)) {
  if (labels_.size() < 2) throw ConfigError("model needs at least 2 classes");
  if (config_.word_dim == 0 || config_.hidden_dim == 0 || config_.max_len == 0) {
    throw ConfigError("word_dim, hidden_dim and max_len must be positive");
  }
  const bool kg_mode = uses_kg(config_.mode);
  if (kg_mode) {
    if (kg_.entities.size() == 0 || kg_.relations.size() == 0) {
      throw ConfigError(to_string(config_.mode) + " needs entity and relation embeddings");
    }
    if (kg_.entities.dim() != kg_.relations.dim()) {
      throw ConfigError("entity and relation embeddings differ in dimension");
    }
    if (config_.mode == Mode::conv_kg && kg_.entity_clusters == 0) {
      throw ConfigError("conv_kg needs an entity clustering");
    }
  }
  context_dim_ = kg_.entities.size() > 0 ? kg_.dim() : config_.hidden_dim;
  const std::size_t m = context_dim_;
  const std::size_t n = config_.hidden_dim;
  const std::size_t classes = labels_.size();

  std::mt19937_64 rng(seed);
  word_table_ = Parameter("words", init_word_table(vocab_, config_.word_dim, config_.word_sigma, rng, pretrained));
  word_table_.trainable = config_.train_words;

  const std::size_t lstm_count = (!kg_mode || config_.shared_encoder) ? 1 : 3;
  for (std::size_t b = 0; b < lstm_count; ++b) {
    const std::string name = lstm_count == 1 && kg_mode ? "lstm.shared" : std::string("lstm.") + branch_name(b);
    lstms_.push_back(num::LstmParams::random(name, config_.word_dim, n, rng));
  }
  for (std::size_t b = 0; b < (kg_mode ? 3u : 1u); ++b) {
    projections_.push_back(glorot(std::string("proj.") + branch_name(b), n, m, rng));
  }

  if (!kg_mode) {
    plain_out_ = glorot("out.plain", m, classes, rng);
    return;
  }
  fact_proj_ = glorot("fact.V", 3 * m, m, rng);
  joint_proj_ = glorot("joint.U", 2 * m, m, rng);
  joint_out_ = glorot("joint.out", m, classes, rng);
  retrieval_out_ = glorot("retrieval.out", m, classes, rng);
  entity_table_ = Parameter("kg.entities", kg_.entities.vectors);
  relation_table_ = Parameter("kg.relations", kg_.relations.vectors);
  entity_table_.trainable = relation_table_.trainable = config_.finetune_kg;

  if (config_.mode != Mode::conv_kg) return;
  auto make_conv = [&](const std::string& name, std::size_t rows) {
    ConvEncoderParams p = config_.identity_encoder ? ConvEncoderParams::identity(name, rows)
                                                   : ConvEncoderParams::make(name, rows, plan_schedule(rows), rng);
    p.relu_after_pool = config_.relu_after_pool;
    // The global-max encoder is a fixed reduction, not a learned one.
    p.first_filter.trainable = p.second_filter.trainable = !config_.identity_encoder;
    return p;
  };
  entity_set_ = make_cluster_set(kg_.entities.vectors, kg_.entity_assignment, kg_.entity_clusters);
  entity_conv_ = make_conv("conv.entity", entity_set_.rows);
  if (kg_.relation_clusters > 0) {
    relation_set_ = make_cluster_set(kg_.relations.vectors, kg_.relation_assignment, kg_.relation_clusters);
    relation_conv_ = make_conv("conv.relation", relation_set_.rows);
  }
}

TokenSequence Model::tokenize(const std::string& text) const {
  return kgaug::tokenize(text, vocab_, config_.max_len);
}

std::vector<Var> Model::contexts(Graph& g, Var words, const std::vector<const TokenSequence*>& batch,
                                 bool need_classification, bool need_kg) {
  std::vector<Var> out(projections_.size());
  const bool need[] = {need_classification, need_kg, need_kg};
  if (lstms_.size() == 1) {
    Var mean = encode_mean(g, words, batch, num::bind(g, lstms_[0]));
    for (std::size_t b = 0; b < out.size(); ++b) {
      if (need[b]) out[b] = context_from_mean(mean, g.param(projections_[b]));
    }
    return out;
  }
  for (std::size_t b = 0; b < out.size(); ++b) {
    if (need[b]) out[b] = encode(g, words, batch, num::bind(g, lstms_[b]), g.param(projections_[b]));
  }
  return out;
}

Var Model::space(Graph& g, Var table, const ClusterSet& set, ConvEncoderParams* conv) {
  if (set.size() == 0 || conv == nullptr) return table;
  const std::size_t m = table.cols();
  std::vector<Var> mats;
  std::vector<std::size_t> counts;
  mats.reserve(set.size());
  for (const auto& ids : set.members) {
    Var rows = num::gather_rows(table, ids);
    if (ids.size() < set.rows) {
      const Var parts[] = {rows, g.constant(Tensor::zeros(set.rows - ids.size(), m))};
      rows = num::concat_rows(parts);
    }
    mats.push_back(rows);
    counts.push_back(ids.size());
  }
  return encode_clusters(g, mats, counts, *conv);
}

Model::Output Model::forward(Graph& g, const std::vector<const TokenSequence*>& batch, Head head) {
  Var words = g.param(word_table_);
  Output out;
  if (!uses_kg(config_.mode)) {
    if (head == Head::retrieval) throw ConfigError("plain mode has no retrieval head");
    std::vector<Var> ctx = contexts(g, words, batch, true, false);
    out.probs = num::softmax(num::matmul(ctx[classification], g.param(plain_out_)));
    return out;
  }
  const bool joint = head == Head::joint;
  std::vector<Var> ctx = contexts(g, words, batch, joint, true);
  const bool conv = config_.mode == Mode::conv_kg;
  Var entity_space = space(g, g.param(entity_table_), entity_set_, conv ? &entity_conv_ : nullptr);
  Var relation_space = space(g, g.param(relation_table_), relation_set_, conv ? &relation_conv_ : nullptr);
  RetrievedFact fact = retrieve(ctx[entity], ctx[relation], entity_space, relation_space);
  out.entity_weights = fact.entity_weights;
  out.relation_weights = fact.relation_weights;
  out.fact = fact;
  Var projected = num::relu(num::matmul(fact.fact, g.param(fact_proj_)));
  Var logits;
  if (joint) {
    const Var parts[] = {projected, ctx[classification]};
    Var h = num::concat_cols(parts);
    logits = num::matmul(num::matmul(h, g.param(joint_proj_)), g.param(joint_out_));
  } else {
    logits = num::matmul(projected, g.param(retrieval_out_));
  }
  out.probs = num::softmax(logits);
  return out;
}

std::vector<Parameter*> Model::parameters(Head head) {
  std::vector<Parameter*> all;
  auto add = [&](Parameter& p) {
    if (p.trainable && !p.value.empty()) all.push_back(&p);
  };
  auto add_lstm = [&](num::LstmParams& l) {
    add(l.input_weights);
    add(l.recurrent_weights);
    add(l.bias);
  };
  add(word_table_);
  if (!uses_kg(config_.mode)) {
    if (head == Head::retrieval) throw ConfigError("plain mode has no retrieval head");
    add_lstm(lstms_[0]);
    add(projections_[0]);
    add(plain_out_);
    return all;
  }
  const bool joint = head == Head::joint;
  if (lstms_.size() == 1) {
    add_lstm(lstms_[0]);
  } else {
    for (std::size_t b = joint ? 0 : 1; b < 3; ++b) add_lstm(lstms_[b]);
  }
  for (std::size_t b = joint ? 0 : 1; b < 3; ++b) add(projections_[b]);
  add(fact_proj_);
  if (joint) {
    add(joint_proj_);
    add(joint_out_);
  } else {
    add(retrieval_out_);
  }
  add(entity_table_);
  add(relation_table_);
  if (config_.mode == Mode::conv_kg) {
    add(entity_conv_.first_filter);
    add(entity_conv_.second_filter);
    if (relation_set_.size() > 0) {
      add(relation_conv_.first_filter);
      add(relation_conv_.second_filter);
    }
  }
  return all;
}

std::vector<Parameter*> Model::all_parameters() {
  std::vector<Parameter*> all;
  auto add = [&](Parameter& p) {
    if (!p.value.empty()) all.push_back(&p);
  };
  add(word_table_);
  for (auto& l : lstms_) {
    add(l.input_weights);
    add(l.recurrent_weights);
    add(l.bias);
  }
  for (auto& p : projections_) add(p);
  for (Parameter* p : {&plain_out_, &fact_proj_, &joint_proj_, &joint_out_, &retrieval_out_, &entity_table_,
                       &relation_table_, &entity_conv_.first_filter, &entity_conv_.second_filter,
                       &relation_conv_.first_filter, &relation_conv_.second_filter}) {
    add(*p);
  }
  return all;
}

Parameter* Model::find_parameter(const std::string& name) {
  for (Parameter* p : all_parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

void Model::set_entity_members(std::vector<std::vector<std::size_t>> members) {
  if (members.size() != entity_set_.size()) throw DimensionError("set_entity_members: cluster count differs");
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto a = members[c];
    auto b = entity_set_.members[c];
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) throw DomainError("set_entity_members: cluster " + std::to_string(c) + " changed membership");
  }
  entity_set_.members = std::move(members);
  entity_set_.matrices = build_cluster_matrices(entity_set_.members, entity_table_.value, entity_set_.rows);
}

}  // namespace kgaug
