#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "grad_check.hpp"
#include "kgaug/clustering.hpp"
#include "kgaug/error.hpp"
#include "kgaug/retrieval.hpp"

using namespace kgaug;
using num::Graph;
using num::Parameter;
using num::Tensor;
using num::Var;

namespace {

Tensor column(std::initializer_list<double> v) {
  Tensor t = Tensor::zeros(v.size(), 1);
  std::copy(v.begin(), v.end(), t.data().begin());
  return t;
}

void check_fact_identity(const RetrievedFact& f) {
  const Tensor& e = f.entity.value();
  const Tensor& r = f.relation.value();
  const Tensor& t = f.tail.value();
  const std::size_t m = e.cols();
  for (std::size_t b = 0; b < e.rows(); ++b)
    for (std::size_t k = 0; k < m; ++k) {
      CHECK(t.at(b, k) - (e.at(b, k) + r.at(b, k)) == 0.0);
      CHECK(f.fact.value().at(b, k) == e.at(b, k));
      CHECK(f.fact.value().at(b, m + k) == r.at(b, k));
      CHECK(f.fact.value().at(b, 2 * m + k) == t.at(b, k));
    }
}

}  // namespace

TEST_CASE("attend reference cases") {
  Graph g;
  Var cands = g.constant(Tensor::matrix({{1, 2}, {3, 4}, {5, 0}}));
  Attention zero = attend(g.constant(Tensor::matrix({{0, 0}})), cands);
  for (double w : zero.weights.value().data()) CHECK(w == doctest::Approx(1.0 / 3.0));
  CHECK(zero.pooled.value().at(0, 0) == doctest::Approx(3.0));
  CHECK(zero.pooled.value().at(0, 1) == doctest::Approx(2.0));

  Attention one = attend(g.constant(Tensor::matrix({{7, -3}})), g.constant(Tensor::matrix({{0.5, 0.25}})));
  CHECK(one.weights.value().item() == 1.0);
  CHECK(one.pooled.value() == Tensor::matrix({{0.5, 0.25}}));

  Attention ex = attend(g.constant(Tensor::matrix({{1, 0}})), g.constant(Tensor::matrix({{1, 0}, {0, 1}})));
  CHECK(std::abs(ex.pooled.value()[0] - 0.73106) < 1e-5);
  CHECK(std::abs(ex.pooled.value()[1] - 0.26894) < 1e-5);

  CHECK_THROWS_AS(attend(g.constant(Tensor::matrix({{1, 0, 0}})), cands), DimensionError);
}

TEST_CASE("attention weights are a distribution on random draws") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> len(1, 40), dim(1, 16);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t l = len(rng), m = dim(rng);
    Graph g(false);
    Attention a = attend(g.constant(testing::random_tensor(rng, {2, m}, 3.0)),
                         g.constant(testing::random_tensor(rng, {l, m}, 3.0)));
    const Tensor& w = a.weights.value();
    REQUIRE(w.cols() == l);
    for (std::size_t b = 0; b < 2; ++b) {
      double s = 0.0;
      for (double x : w.row(b)) {
        CHECK(x >= 0.0);
        s += x;
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("retrieve over full tables") {
  Graph g;
  SUBCASE("single entity and relation") {
    Var e = g.constant(Tensor::matrix({{0.3, -0.2}}));
    Var r = g.constant(Tensor::matrix({{1.0, 2.0}}));
    RetrievedFact f = retrieve(g.constant(Tensor::matrix({{5, 5}})), g.constant(Tensor::matrix({{1, 1}})), e, r);
    CHECK(f.entity.value() == e.value());
    CHECK(f.relation.value() == r.value());
    CHECK(f.tail.value().at(0, 0) == 0.3 + 1.0);
    check_fact_identity(f);
  }
  SUBCASE("zero entity context averages the entity table") {
    Var e = g.constant(Tensor::matrix({{1, 0}, {0, 1}, {2, 2}, {1, 1}}));
    Var r = g.constant(Tensor::matrix({{1, 0}, {0, 1}}));
    RetrievedFact f = retrieve(g.constant(Tensor::matrix({{0, 0}})), g.constant(Tensor::matrix({{1, 0}})), e, r);
    CHECK(f.entity.value().at(0, 0) == doctest::Approx(1.0));
    CHECK(f.entity.value().at(0, 1) == doctest::Approx(1.0));
    check_fact_identity(f);
  }
  SUBCASE("fact identity on random batches") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
      RetrievedFact f = retrieve(g.constant(testing::random_tensor(rng, {3, 5})),
                                 g.constant(testing::random_tensor(rng, {3, 5})),
                                 g.constant(testing::random_tensor(rng, {9, 5})),
                                 g.constant(testing::random_tensor(rng, {4, 5})));
      check_fact_identity(f);
    }
  }
}

TEST_CASE("conv1d_col and maxpool_col reference cases") {
  Graph g;
  Var x = g.constant(column({1, 2, 3, 4}));
  CHECK(num::conv1d_col(x, g.constant(Tensor::vector({1, 1})), 2).value() == column({3, 7}));
  Var wide = g.constant(Tensor::matrix({{1, -2}, {3, 5}, {0.5, 7}}));
  CHECK(num::conv1d_col(wide, g.constant(Tensor::vector({1})), 1).value() == wide.value());
  for (double v : num::conv1d_col(wide, g.constant(Tensor::vector({0, 0})), 1).value().data()) CHECK(v == 0.0);
  CHECK_THROWS_AS(num::conv1d_col(x, g.constant(Tensor::vector({1, 1, 1, 1, 1})), 1), DimensionError);

  Var y = g.constant(column({1, 3, 2, 4}));
  CHECK(num::maxpool_col(y, 2).value() == column({3, 4}));
  CHECK(num::maxpool_col(y, 1).value() == y.value());
  CHECK(num::maxpool_col(g.constant(column({2.5, 2.5, 2.5})), 2).value() == column({2.5, 2.5}));
  CHECK(num::maxpool_col(g.constant(column({1, 5, 2})), 2).value() == column({5, 2}));
  CHECK_THROWS_AS(num::maxpool_col(y, 0), DomainError);
  CHECK_THROWS_AS(num::maxpool_col(y, 5), DimensionError);
}

TEST_CASE("conv1d_col commutes with column permutation") {
  std::mt19937_64 rng(3);
  Graph g;
  Tensor x = testing::random_tensor(rng, {7, 6});
  Tensor xp = x;
  std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 6; ++j) xp.at(i, j) = x.at(i, perm[j]);
  Var w = g.constant(testing::random_tensor(rng, {3}));
  Tensor y = num::conv1d_col(g.constant(x), w, 2).value();
  Tensor yp = num::conv1d_col(g.constant(xp), w, 2).value();
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(yp.at(i, j) == y.at(i, perm[j]));
}

TEST_CASE("conv schedules") {
  CHECK(schedule_rows(8, ConvSchedule{{3, 1, 2}, {3, 1, 1}}) == std::vector<std::size_t>{8, 6, 3, 1, 1});
  for (std::size_t q = 1; q <= 40; ++q) {
    CHECK(schedule_rows(q, plan_schedule(q)).back() == 1);
    CHECK(schedule_rows(q, identity_schedule(q)).back() == 1);
  }
  ConvSchedule p8 = plan_schedule(8);
  CHECK(p8.first.kernel == 3);
  CHECK(p8.first.pool == 2);
  CHECK(p8.second.kernel == 3);
  CHECK(p8.second.pool == 1);
  try {
    schedule_rows(9, ConvSchedule{{3, 1, 2}, {3, 1, 1}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("q=9") != std::string::npos);
    CHECK(msg.find("conv(k=3") != std::string::npos);
  }
  CHECK_THROWS_AS(schedule_rows(2, ConvSchedule{{3, 1, 1}, {1, 1, 1}}), ConfigError);
}

TEST_CASE("identity encoder yields the column max of valid members") {
  Graph g;
  ConvEncoderParams id = ConvEncoderParams::identity("enc", 3);
  Var a = g.constant(Tensor::matrix({{-1, 4}, {-3, 2}, {0, 0}}));  // last row is padding
  Var b = g.constant(Tensor::matrix({{5, -6}, {1, 7}, {2, 1}}));
  Var reps = encode_clusters(g, {a, b}, {2, 3}, id);
  CHECK(reps.value() == Tensor::matrix({{-1, 4}, {5, 7}}));
}

TEST_CASE("encoder: identical clusters give identical representations") {
  std::mt19937_64 rng(4);
  Graph g;
  ConvEncoderParams p = ConvEncoderParams::make("enc", 8, plan_schedule(8), rng);
  Tensor c = testing::random_tensor(rng, {8, 5});
  Var reps = encode_clusters(g, {g.constant(c), g.constant(c)}, {7, 7}, p);
  CHECK(std::equal(reps.value().row(0).begin(), reps.value().row(0).end(), reps.value().row(1).begin()));
  CHECK(reps.value().rows() == 2);
  CHECK(reps.value().cols() == 5);
}

TEST_CASE("conv model reductions") {
  std::mt19937_64 rng(5);
  Tensor table = testing::random_tensor(rng, {6, 4});
  Tensor rel = testing::random_tensor(rng, {3, 4});
  Tensor ce = testing::random_tensor(rng, {2, 4});
  Tensor cr = testing::random_tensor(rng, {2, 4});

  SUBCASE("one cluster: e is its representation regardless of context") {
    Graph g;
    ClusterSet set = make_cluster_set(table, std::vector<std::size_t>(6, 0), 1);
    ConvEncoderParams p = ConvEncoderParams::make("enc", set.rows, plan_schedule(set.rows), rng);
    std::vector<Var> mats{g.constant(set.matrices[0])};
    Var reps = encode_clusters(g, mats, {6}, p);
    RetrievedFact f = retrieve(g.constant(ce), g.constant(cr), reps, g.constant(rel));
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t k = 0; k < 4; ++k) CHECK(f.entity.value().at(b, k) == reps.value().at(0, k));
    check_fact_identity(f);
  }
  SUBCASE("l = N with the identity encoder matches the vanilla model") {
    Graph g;
    ClusterSet set = balanced_kmeans(table, ClusterConfig{6, 50, 2, 1});
    ConvEncoderParams p = ConvEncoderParams::identity("enc", set.rows);
    std::vector<Var> mats;
    std::vector<std::size_t> members;
    for (std::size_t c = 0; c < 6; ++c) {
      mats.push_back(g.constant(set.matrices[c]));
      members.push_back(set.members[c].size());
    }
    Var reps = encode_clusters(g, mats, members, p);
    RetrievedFact conv = retrieve(g.constant(ce), g.constant(cr), reps, g.constant(rel));
    RetrievedFact vanilla = retrieve(g.constant(ce), g.constant(cr), g.constant(table), g.constant(rel));
    for (std::size_t i = 0; i < conv.fact.value().size(); ++i)
      CHECK(conv.fact.value()[i] == doctest::Approx(vanilla.fact.value()[i]).epsilon(1e-12));
    CHECK(conv.entity_weights.value().cols() == 6);
  }
}

TEST_CASE("within-cluster shuffles are invisible to the identity encoder") {
  std::mt19937_64 rng(6);
  Tensor table = testing::random_tensor(rng, {11, 5});
  ClusterSet set = balanced_kmeans(table, ClusterConfig{3, 50, 2, 1});
  ConvEncoderParams p = ConvEncoderParams::identity("enc", set.rows);
  Tensor ctx = testing::random_tensor(rng, {1, 5});
  auto run = [&](const std::vector<std::vector<std::size_t>>& members) {
    Graph g(false);
    auto mats = build_cluster_matrices(members, table, set.rows);
    std::vector<Var> vars;
    std::vector<std::size_t> counts;
    for (std::size_t c = 0; c < mats.size(); ++c) {
      vars.push_back(g.constant(mats[c]));
      counts.push_back(members[c].size());
    }
    Var reps = encode_clusters(g, vars, counts, p);
    return retrieve(g.constant(ctx), g.constant(ctx), reps, reps).fact.value();
  };
  const Tensor base = run(set.members);
  for (int s = 0; s < 5; ++s) {
    auto shuffled = set.members;
    for (auto& mem : shuffled) std::shuffle(mem.begin(), mem.end(), rng);
    CHECK(run(shuffled) == base);
  }
}

TEST_CASE("conv filter gradients through retrieval match finite differences") {
  std::mt19937_64 rng(7);
  Tensor table = testing::random_tensor(rng, {8, 4});
  ClusterSet set = balanced_kmeans(table, ClusterConfig{2, 50, 2, 1});
  ConvEncoderParams p = ConvEncoderParams::make("enc", set.rows, plan_schedule(set.rows), rng, 0.5);
  Parameter ce("ce", testing::random_tensor(rng, {2, 4}));
  Parameter rel("rel", testing::random_tensor(rng, {3, 4}));
  for (bool relu : {false, true}) {
    p.relu_after_pool = relu;
    auto res = testing::check_gradients({&p.first_filter, &p.second_filter, &ce, &rel}, [&](Graph& g) {
      std::vector<Var> mats;
      std::vector<std::size_t> counts;
      for (std::size_t c = 0; c < set.size(); ++c) {
        mats.push_back(g.constant(set.matrices[c]));
        counts.push_back(set.members[c].size());
      }
      Var reps = encode_clusters(g, mats, counts, p);
      return testing::weighted_sum(g, retrieve(g.param(ce), g.param(ce), reps, g.param(rel)).fact);
    });
    INFO(res.worst_param);
    CHECK(res.worst < 1e-4);
  }
}

TEST_CASE("top-k attention dump") {
  std::ostringstream out;
  std::vector<double> w{0.1, 0.6, 0.3};
  write_top_attention(out, {"a", "b", "c"}, w, 2);
  CHECK(out.str() == "b\t0.6\nc\t0.3\n");
}
