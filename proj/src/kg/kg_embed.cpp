#include "kgaug/kg_embed.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "kgaug/error.hpp"
#include "kgaug/numerics/adam.hpp"

namespace kgaug {

using num::Tensor;

Norm parse_norm(const std::string& text) {
  if (text == "l1" || text == "L1") return Norm::l1;
  if (text == "l2" || text == "L2") return Norm::l2;
  throw ConfigError("norm must be l1 or l2, got '" + text + "'");
}

std::string to_string(Norm norm) { return norm == Norm::l1 ? "l1" : "l2"; }

double transe_energy(std::span<const double> h, std::span<const double> r,
                     std::span<const double> t, Norm norm) {
  if (h.size() != r.size() || h.size() != t.size()) {
    throw DimensionError("transe_energy: dimensions " + std::to_string(h.size()) + ", " +
                         std::to_string(r.size()) + ", " + std::to_string(t.size()));
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double d = h[k] + r[k] - t[k];
    acc += norm == Norm::l1 ? std::abs(d) : d * d;
  }
  return norm == Norm::l1 ? acc : std::sqrt(acc);
}

double margin_loss(double d_pos, double d_neg, double margin) {
  return std::max(0.0, margin + d_pos - d_neg);
}

std::size_t DescriptionFeatures::count() const {
  return static_cast<std::size_t>(std::count(described.begin(), described.end(), true));
}

DescriptionFeatures description_features(const KgVocab& vocab, const WordVectors& words) {
  const std::size_t n = vocab.num_entities();
  const std::size_t dw = words.dim();
  DescriptionFeatures out{Tensor::zeros(n, dw), std::vector<bool>(n, false)};
  for (std::size_t i = 0; i < n && i < vocab.descriptions.size(); ++i) {
    std::size_t used = 0;
    auto dst = out.means.row(i);
    for (const std::string& w : vocab.descriptions[i]) {
      auto id = words.find(w);
      if (!id) continue;
      auto src = words.matrix.row(*id);
      for (std::size_t k = 0; k < dw; ++k) dst[k] += src[k];
      ++used;
    }
    if (used == 0) continue;
    for (double& v : dst) v /= static_cast<double>(used);
    out.described[i] = true;
  }
  return out;
}

Tensor random_projection(std::size_t word_dim, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(word_dim)));
  Tensor p = Tensor::zeros(word_dim, dim);
  for (double& v : p.data()) v = dist(rng);
  return p;
}

namespace {

double l2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void normalize(std::span<double> v) {
  const double n = l2(v);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

// row(i) of out = mean(i) · projection
void project(const Tensor& means, const Tensor& projection, std::size_t i, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  auto m = means.row(i);
  for (std::size_t a = 0; a < m.size(); ++a) {
    if (m[a] == 0.0) continue;
    auto prow = projection.row(a);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += m[a] * prow[k];
  }
}

void uniform_fill(std::span<double> v, std::size_t dim, std::mt19937_64& rng) {
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : v) x = dist(rng);
}

}  // namespace

EmbeddingTable init_from_descriptions(const KgVocab& vocab, const DescriptionFeatures& features,
                                      const Tensor& projection, std::uint64_t seed) {
  const std::size_t n = vocab.num_entities();
  if (features.means.rows() != n || projection.rows() != features.means.cols()) {
    throw DimensionError("init_from_descriptions: features " +
                         num::shape_string(features.means.shape()) + ", projection " +
                         num::shape_string(projection.shape()));
  }
  const std::size_t m = projection.cols();
  EmbeddingTable table{TableKind::entity, vocab.entities.names(), Tensor::zeros(n, m)};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = table.vectors.row(i);
    if (features.described[i]) {
      project(features.means, projection, i, row);
      if (l2(row) > 0.0) {
        normalize(row);
        continue;
      }
    }
    uniform_fill(row, m, rng);
  }
  return table;
}

TransEResult train_transe(const KgVocab& vocab, const TripleSet& triples, const TransEConfig& config,
                          const WordVectors* words) {
  const std::size_t n = vocab.num_entities();
  const std::size_t nr = vocab.num_relations();
  const std::size_t m = config.dim;
  if (n < 2) throw DomainError("train_transe needs at least 2 entities");
  if (triples.empty()) throw DomainError("train_transe: no triples");
  if (config.margin <= 0.0) throw ConfigError("transe margin must be positive");
  if (m == 0 || config.batch_size == 0) throw ConfigError("transe dim and batch size must be positive");

  std::mt19937_64 rng(config.seed);
  DescriptionFeatures features;
  bool use_desc = false;
  if (words != nullptr) {
    features = description_features(vocab, *words);
    use_desc = features.count() > 0;
  }

  num::Parameter residual("transe.entities", Tensor::zeros(n, m));
  num::Parameter relations("transe.relations", Tensor::zeros(nr, m));
  num::Parameter projection("transe.projection", Tensor());

  // Entity vector i is base(i) + residual(i); base is zero for undescribed
  // entities and mean(i) · projection otherwise.
  Tensor base = Tensor::zeros(n, m);
  auto refresh_base = [&] {
    if (!use_desc) return;
    for (std::size_t i = 0; i < n; ++i) {
      if (features.described[i]) project(features.means, projection.value, i, base.row(i));
    }
  };

  if (use_desc) {
    projection.value = random_projection(words->dim(), m, rng());
    EmbeddingTable init = init_from_descriptions(vocab, features, projection.value, rng());
    refresh_base();
    for (std::size_t k = 0; k < n * m; ++k) residual.value[k] = init.vectors[k] - base[k];
  } else {
    for (std::size_t i = 0; i < n; ++i) uniform_fill(residual.value.row(i), m, rng);
  }
  for (std::size_t j = 0; j < nr; ++j) {
    uniform_fill(relations.value.row(j), m, rng);
    normalize(relations.value.row(j));
  }

  std::vector<num::Parameter*> params{&residual, &relations};
  if (use_desc) {
    projection.grad = Tensor(projection.value.shape());
    params.push_back(&projection);
  }
  for (num::Parameter* p : params) p->zero_grad();
  num::Adam adam(params, num::AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});

  auto snapshot = [&] {
    EmbeddingTable t{TableKind::entity, vocab.entities.names(), Tensor::zeros(n, m)};
    for (std::size_t k = 0; k < n * m; ++k) t.vectors[k] = base[k] + residual.value[k];
    // base + residual can drift from unit norm by an ulp.
    for (std::size_t i = 0; i < n; ++i) normalize(t.vectors.row(i));
    return t;
  };

  const auto& list = triples.triples();
  std::vector<std::size_t> order(list.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> ent(m), diff_pos(m), diff_neg(m), g(m);

  TransEResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double inv = 1.0 / static_cast<double>(stop - start);
      adam.zero_grad();
      Tensor entity_grad = Tensor::zeros(n, m);
      for (std::size_t b = start; b < stop; ++b) {
        const Triple pos = list[order[b]];
        const Triple neg = corrupt(pos, n, rng);
        auto vec = [&](Id e, std::size_t k) { return base.at(e, k) + residual.value.at(e, k); };
        double dp = 0.0, dn = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          const double r = relations.value.at(pos.relation, k);
          diff_pos[k] = vec(pos.head, k) + r - vec(pos.tail, k);
          diff_neg[k] = vec(neg.head, k) + r - vec(neg.tail, k);
          dp += config.norm == Norm::l1 ? std::abs(diff_pos[k]) : diff_pos[k] * diff_pos[k];
          dn += config.norm == Norm::l1 ? std::abs(diff_neg[k]) : diff_neg[k] * diff_neg[k];
        }
        if (config.norm == Norm::l2) {
          dp = std::sqrt(dp);
          dn = std::sqrt(dn);
        }
        const double loss = margin_loss(dp, dn, config.margin);
        epoch_loss += loss;
        if (loss <= 0.0) continue;
        // d loss/d diff: +grad energy for the positive, -grad for the negative.
        auto dnorm = [&](double d, double total) {
          if (config.norm == Norm::l1) return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
          return total > 0.0 ? d / total : 0.0;
        };
        for (std::size_t k = 0; k < m; ++k) {
          const double gp = inv * dnorm(diff_pos[k], dp);
          const double gn = inv * dnorm(diff_neg[k], dn);
          entity_grad.at(pos.head, k) += gp;
          entity_grad.at(pos.tail, k) -= gp;
          entity_grad.at(neg.head, k) -= gn;
          entity_grad.at(neg.tail, k) += gn;
          relations.grad.at(pos.relation, k) += gp - gn;
        }
      }
      residual.grad = entity_grad;
      if (use_desc) {
        // e_i = mean_i · P + z_i  =>  dP += mean_iᵀ · de_i
        for (std::size_t i = 0; i < n; ++i) {
          if (!features.described[i]) continue;
          auto de = entity_grad.row(i);
          auto mean = features.means.row(i);
          for (std::size_t a = 0; a < mean.size(); ++a) {
            if (mean[a] == 0.0) continue;
            auto prow = projection.grad.row(a);
            for (std::size_t k = 0; k < m; ++k) prow[k] += mean[a] * de[k];
          }
        }
      }
      adam.step();
      refresh_base();
    }
    // Project entities back onto the unit sphere by resetting the residual.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < m; ++k) ent[k] = base.at(i, k) + residual.value.at(i, k);
      normalize(ent);
      for (std::size_t k = 0; k < m; ++k) residual.value.at(i, k) = ent[k] - base.at(i, k);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    if (config.track_objective) {
      const EmbeddingTable rel{TableKind::relation, vocab.relations.names(), relations.value};
      result.epoch_objective.push_back(
          expected_margin_loss(snapshot(), rel, triples, config.margin, config.norm));
    }
  }

  result.entities = snapshot();
  result.relations = EmbeddingTable{TableKind::relation, vocab.relations.names(), relations.value};
  if (use_desc) result.projection = projection.value;
  return result;
}

double expected_margin_loss(const EmbeddingTable& entities, const EmbeddingTable& relations,
                            const TripleSet& triples, double margin, Norm norm) {
  if (triples.empty()) throw DomainError("expected_margin_loss: no triples");
  const std::size_t n = entities.size();
  double total = 0.0;
  for (const Triple& t : triples.triples()) {
    const auto h = entities.row(t.head);
    const auto r = relations.row(t.relation);
    const auto tail = entities.row(t.tail);
    const double pos = transe_energy(h, r, tail, norm);
    double head_side = 0.0, tail_side = 0.0;
    for (Id c = 0; c < n; ++c) {
      if (c != t.head) head_side += margin_loss(pos, transe_energy(entities.row(c), r, tail, norm), margin);
      if (c != t.tail) tail_side += margin_loss(pos, transe_energy(h, r, entities.row(c), norm), margin);
    }
    // corrupt() picks a side with probability 1/2, then one of n-1 entities.
    total += 0.5 * (head_side + tail_side) / static_cast<double>(n - 1);
  }
  return total / static_cast<double>(triples.size());
}

LinkPrediction eval_link_prediction(const EmbeddingTable& entities, const EmbeddingTable& relations,
                                    const TripleSet& test, const TripleSet& known, Norm norm) {
  if (test.empty()) throw DomainError("eval_link_prediction: empty test set");
  if (entities.dim() != relations.dim()) {
    throw DimensionError("entity dim " + std::to_string(entities.dim()) + " vs relation dim " +
                         std::to_string(relations.dim()));
  }
  LinkPrediction out;
  double rank_sum = 0.0;
  std::size_t hit1 = 0, hit10 = 0;
  for (const Triple& t : test.triples()) {
    if (t.head >= entities.size() || t.tail >= entities.size() || t.relation >= relations.size()) {
      throw IndexError("test triple outside the embedding tables");
    }
    const auto h = entities.row(t.head);
    const auto r = relations.row(t.relation);
    const double truth = transe_energy(h, r, entities.row(t.tail), norm);
    std::size_t rank = 1;
    for (Id c = 0; c < entities.size(); ++c) {
      if (c == t.tail) continue;
      if (known.contains({t.head, t.relation, c}) || test.contains({t.head, t.relation, c})) continue;
      // Ties count against the true tail.
      if (transe_energy(h, r, entities.row(c), norm) <= truth) ++rank;
    }
    rank_sum += static_cast<double>(rank);
    hit1 += rank == 1;
    hit10 += rank <= 10;
  }
  const double cnt = static_cast<double>(test.size());
  out.count = test.size();
  out.mean_rank = rank_sum / cnt;
  out.hits_at_1 = static_cast<double>(hit1) / cnt;
  out.hits_at_10 = static_cast<double>(hit10) / cnt;
  return out;
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << "# kind=" << (table.kind == TableKind::entity ? "entity" : "relation")
      << " dim=" << table.dim() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.names[i];
    for (double v : table.row(i)) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(end - buf));
    }
    out << '\n';
  }
}

EmbeddingTable read_embeddings(std::istream& in, const std::string& source) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  bool header = false;
  std::vector<double> data;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line[0] == '#') {
      std::string tok;
      fields >> tok;  // '#'
      while (fields >> tok) {
        if (tok == "kind=entity") table.kind = TableKind::entity;
        else if (tok == "kind=relation") table.kind = TableKind::relation;
        else if (tok.rfind("dim=", 0) == 0) dim = std::stoul(tok.substr(4));
      }
      header = true;
      continue;
    }
    if (!header) throw ParseError(source, line_no, "missing '# kind=... dim=...' header");
    std::string name, tok;
    fields >> name;
    std::size_t count = 0;
    while (fields >> tok) {
      double v = 0.0;
      auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || end != tok.data() + tok.size()) {
        throw ParseError(source, line_no, "bad number '" + tok + "'");
      }
      data.push_back(v);
      ++count;
    }
    if (count != dim) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(dim) + " values, got " + std::to_string(count));
    }
    table.names.push_back(name);
  }
  if (table.names.empty()) throw DomainError(source + ": no embeddings");
  table.vectors = Tensor::matrix(table.names.size(), dim, std::move(data));
  return table;
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_embeddings(in, path.string());
}

}  // namespace kgaug
