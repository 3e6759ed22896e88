#pragma once

#include <cstddef>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kgaug/numerics/graph.hpp"
#include "kgaug/numerics/ops.hpp"

namespace kgaug {

struct Attention {
  num::Var weights;  // B x L, rows sum to 1
  num::Var pooled;   // B x m
};

// weights = softmax(context · candidatesᵀ) row-wise; pooled = weights · candidates.
Attention attend(num::Var context, num::Var candidates);

struct RetrievedFact {
  num::Var entity;    // e, B x m
  num::Var relation;  // r, B x m
  num::Var tail;      // t = e + r
  num::Var fact;      // [e, r, t], B x 3m
  num::Var entity_weights;
  num::Var relation_weights;
};

// Attention over an entity space and a relation space (full tables for the
// vanilla model, cluster representations for the conv model).
RetrievedFact retrieve(num::Var entity_context, num::Var relation_context, num::Var entity_space,
                       num::Var relation_space);

// Every retrieve() call compares t with e + r elementwise; these counters
// are process-wide.
struct FactAudit {
  std::size_t passes = 0;
  std::size_t violations = 0;
};
FactAudit fact_audit();

struct ConvLayer {
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t pool = 1;  // window; pool stride equals the window
};

struct ConvSchedule {
  ConvLayer first;
  ConvLayer second;
};

std::string describe(const ConvSchedule& schedule);

// Row counts through conv1, pool1, conv2, pool2 starting from q; throws
// ConfigError naming q and the schedule unless the stack ends in 1 row.
std::vector<std::size_t> schedule_rows(std::size_t q, const ConvSchedule& schedule);

// kernel 3 / stride 1 / pool 2 where they fit, then a global pool.
ConvSchedule plan_schedule(std::size_t q);

// Kernel-1 layers and a global first pool: the column-wise max of members.
ConvSchedule identity_schedule(std::size_t q);

struct ConvEncoderParams {
  ConvSchedule schedule;
  std::size_t rows = 0;
  num::Parameter first_filter;   // first.kernel
  num::Parameter second_filter;  // second.kernel
  bool relu_after_pool = false;

  // Filters near a unit impulse plus noise of scale `noise`.
  static ConvEncoderParams make(const std::string& name, std::size_t rows, const ConvSchedule& schedule,
                                std::mt19937_64& rng, double noise = 0.1);
  // Filters [1]; output is the column max over valid members.
  static ConvEncoderParams identity(const std::string& name, std::size_t rows);
};

// Encodes each cluster matrix (q x m, `members[c]` valid leading rows) into
// one m-vector; returns l x m.
num::Var encode_clusters(num::Graph& g, const std::vector<num::Var>& clusters,
                         const std::vector<std::size_t>& members, ConvEncoderParams& params);

// `name<TAB>weight` for the k largest weights of one attention row.
void write_top_attention(std::ostream& out, const std::vector<std::string>& names,
                         std::span<const double> weights, std::size_t k);

}  // namespace kgaug
