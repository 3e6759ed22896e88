#include "kgaug/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <sstream>

#include "kgaug/error.hpp"

namespace kgaug {

using num::Graph;
using num::Tensor;
using num::Var;

Attention attend(Var context, Var candidates) {
  if (candidates.rows() == 0) throw DomainError("attend: no candidates");
  if (context.cols() != candidates.cols()) {
    throw DimensionError("attend: context " + num::shape_string(context.shape()) + " vs candidates " +
                         num::shape_string(candidates.shape()));
  }
  Var weights = num::softmax(num::matmul(context, num::transpose(candidates)));
  return {weights, num::matmul(weights, candidates)};
}

namespace {

std::atomic<std::size_t> audit_passes{0};
std::atomic<std::size_t> audit_violations{0};

void audit(const RetrievedFact& fact) {
  const Tensor& e = fact.entity.value();
  const Tensor& r = fact.relation.value();
  const Tensor& t = fact.tail.value();
  bool exact = t.size() == e.size();
  for (std::size_t i = 0; exact && i < t.size(); ++i) exact = t[i] - (e[i] + r[i]) == 0.0;
  ++audit_passes;
  if (!exact) ++audit_violations;
}

}  // namespace

FactAudit fact_audit() { return {audit_passes.load(), audit_violations.load()}; }

RetrievedFact retrieve(Var entity_context, Var relation_context, Var entity_space, Var relation_space) {
  Attention e = attend(entity_context, entity_space);
  Attention r = attend(relation_context, relation_space);
  RetrievedFact fact;
  fact.entity = e.pooled;
  fact.relation = r.pooled;
  fact.tail = num::add(e.pooled, r.pooled);
  audit(fact);
  std::vector<Var> parts{fact.entity, fact.relation, fact.tail};
  fact.fact = num::concat_cols(parts);
  fact.entity_weights = e.weights;
  fact.relation_weights = r.weights;
  return fact;
}

std::string describe(const ConvSchedule& s) {
  std::ostringstream out;
  out << "conv(k=" << s.first.kernel << ",s=" << s.first.stride << ") pool(" << s.first.pool << ") conv(k="
      << s.second.kernel << ",s=" << s.second.stride << ") pool(" << s.second.pool << ")";
  return out.str();
}

std::vector<std::size_t> schedule_rows(std::size_t q, const ConvSchedule& s) {
  std::vector<std::size_t> rows{q};
  try {
    for (const ConvLayer* layer : {&s.first, &s.second}) {
      rows.push_back(num::conv_output_rows(rows.back(), layer->kernel, layer->stride));
      rows.push_back(num::pool_output_rows(rows.back(), layer->pool, layer->pool));
    }
  } catch (const Error& e) {
    throw ConfigError("conv schedule " + describe(s) + " does not fit q=" + std::to_string(q) + ": " +
                      e.what());
  }
  if (rows.back() != 1) {
    std::ostringstream msg;
    msg << "conv schedule " << describe(s) << " maps q=" << q << " rows to";
    for (std::size_t i = 1; i < rows.size(); ++i) msg << ' ' << rows[i];
    msg << " (need 1)";
    throw ConfigError(msg.str());
  }
  return rows;
}

ConvSchedule plan_schedule(std::size_t q) {
  if (q == 0) throw ConfigError("conv schedule needs q >= 1");
  ConvSchedule s;
  s.first.kernel = std::min<std::size_t>(3, q);
  const std::size_t c1 = q - s.first.kernel + 1;
  s.first.pool = std::min<std::size_t>(2, c1);
  const std::size_t p1 = (c1 + s.first.pool - 1) / s.first.pool;
  s.second.kernel = std::min<std::size_t>(3, p1);
  s.second.pool = p1 - s.second.kernel + 1;  // global
  schedule_rows(q, s);
  return s;
}

ConvSchedule identity_schedule(std::size_t q) {
  if (q == 0) throw ConfigError("conv schedule needs q >= 1");
  ConvSchedule s;
  s.first.pool = q;
  return s;
}

ConvEncoderParams ConvEncoderParams::make(const std::string& name, std::size_t rows,
                                          const ConvSchedule& schedule, std::mt19937_64& rng, double noise) {
  schedule_rows(rows, schedule);
  ConvEncoderParams p;
  p.schedule = schedule;
  p.rows = rows;
  std::normal_distribution<double> dist(0.0, noise);
  auto filter = [&](std::size_t k) {
    Tensor w({k});
    for (double& v : w.data()) v = dist(rng);
    w[k / 2] += 1.0;
    return w;
  };
  p.first_filter = num::Parameter(name + ".filter1", filter(schedule.first.kernel));
  p.second_filter = num::Parameter(name + ".filter2", filter(schedule.second.kernel));
  return p;
}

ConvEncoderParams ConvEncoderParams::identity(const std::string& name, std::size_t rows) {
  ConvEncoderParams p;
  p.schedule = identity_schedule(rows);
  schedule_rows(rows, p.schedule);
  p.rows = rows;
  p.first_filter = num::Parameter(name + ".filter1", Tensor::vector({1.0}));
  p.second_filter = num::Parameter(name + ".filter2", Tensor::vector({1.0}));
  return p;
}

Var encode_clusters(Graph& g, const std::vector<Var>& clusters, const std::vector<std::size_t>& members,
                    ConvEncoderParams& params) {
  if (clusters.empty()) throw DomainError("encode_clusters: no clusters");
  if (members.size() != clusters.size()) throw DimensionError("encode_clusters: member counts mismatch");
  Var w1 = g.param(params.first_filter);
  Var w2 = g.param(params.second_filter);
  const ConvSchedule& s = params.schedule;
  std::vector<Var> reps;
  reps.reserve(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (clusters[c].rows() != params.rows) {
      throw DimensionError("encode_clusters: cluster has " + std::to_string(clusters[c].rows()) +
                           " rows, encoder built for " + std::to_string(params.rows));
    }
    if (members[c] == 0) throw DomainError("encode_clusters: empty cluster");
    std::vector<bool> valid(params.rows, false);
    std::fill_n(valid.begin(), std::min(members[c], params.rows), true);
    num::MaskedVar h = num::conv1d_col(clusters[c], valid, w1, s.first.stride);
    h = num::maxpool_col(h.value, h.valid, s.first.pool, s.first.pool);
    if (params.relu_after_pool) h.value = num::relu(h.value);
    h = num::conv1d_col(h.value, h.valid, w2, s.second.stride);
    h = num::maxpool_col(h.value, h.valid, s.second.pool, s.second.pool);
    if (params.relu_after_pool) h.value = num::relu(h.value);
    reps.push_back(h.value);
  }
  return num::concat_rows(reps);
}

void write_top_attention(std::ostream& out, const std::vector<std::string>& names,
                         std::span<const double> weights, std::size_t k) {
  if (names.size() != weights.size()) throw DimensionError("attention dump: names do not match weights");
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return weights[a] > weights[b] || (weights[a] == weights[b] && a < b);
                    });
  for (std::size_t i = 0; i < k; ++i) out << names[order[i]] << '\t' << weights[order[i]] << '\n';
}

}  // namespace kgaug
