#include <doctest.h>

#include <cmath>
#include <numeric>

#include "test_support.hpp"
#include "zsar/error.hpp"
#include "zsar/gradcheck.hpp"
#include "zsar/relation.hpp"

using namespace zsar;
using zsar::test::random_unit_table;
using zsar::test::random_unit_vector;

namespace {

AttributeNet random_attr(int embedding_dim, int hidden, int feature_dim,
                         double scale, Rng& rng) {
  AttributeNet attr = init_attribute_net(embedding_dim, hidden, feature_dim,
                                         scale, rng);
  for (std::size_t i = 0; i < attr.b1.size(); ++i) attr.b1[i] = scale * rng.normal();
  for (std::size_t i = 0; i < attr.b2.size(); ++i) attr.b2[i] = scale * rng.normal();
  return attr;
}

RelationNet random_rel(int feature_dim, int hidden, double scale, Rng& rng) {
  RelationNet rel = init_relation_net(feature_dim, hidden, scale, rng);
  for (std::size_t i = 0; i < rel.b1.size(); ++i) rel.b1[i] = scale * rng.normal();
  for (std::size_t i = 0; i < rel.b2.size(); ++i) rel.b2[i] = scale * rng.normal();
  return rel;
}

AttributeNet zero_attr(int embedding_dim, int hidden, int feature_dim) {
  AttributeNet attr;
  attr.w1 = Tensor({embedding_dim, hidden});
  attr.b1 = Tensor({hidden});
  attr.w2 = Tensor({hidden, feature_dim});
  attr.b2 = Tensor({feature_dim});
  return attr;
}

RelationNet zero_rel(int feature_dim, int hidden) {
  RelationNet rel;
  rel.w1 = Tensor({2 * feature_dim, hidden});
  rel.b1 = Tensor({hidden});
  rel.w2 = Tensor({hidden, 1});
  rel.b2 = Tensor({1});
  return rel;
}

// Layer-by-layer forward recomputation, independent of relation_score.
double score_oracle(const AttributeNet& attr, const RelationNet& rel,
                    std::span<const double> e, std::span<const double> v) {
  const int ha = attr.w1.dim(1);
  const int f = attr.w2.dim(1);
  std::vector<double> h1(ha), a(f);
  for (int j = 0; j < ha; ++j) {
    double acc = attr.b1(j);
    for (std::size_t i = 0; i < e.size(); ++i) {
      acc += e[i] * attr.w1(static_cast<int>(i), j);
    }
    h1[j] = std::max(0.0, acc);
  }
  for (int j = 0; j < f; ++j) {
    double acc = attr.b2(j);
    for (int i = 0; i < ha; ++i) acc += h1[i] * attr.w2(i, j);
    a[j] = acc;
  }
  std::vector<double> concat(a.begin(), a.end());
  concat.insert(concat.end(), v.begin(), v.end());
  const int hr = rel.w1.dim(1);
  std::vector<double> h2(hr);
  for (int j = 0; j < hr; ++j) {
    double acc = rel.b1(j);
    for (std::size_t i = 0; i < concat.size(); ++i) {
      acc += concat[i] * rel.w1(static_cast<int>(i), j);
    }
    h2[j] = std::max(0.0, acc);
  }
  double out = rel.b2(0);
  for (int i = 0; i < hr; ++i) out += h2[i] * rel.w2(i, 0);
  return 1.0 / (1.0 + std::exp(-out));
}

VisualFeatureMatrix features_near_embeddings(const LabelEmbeddingTable& table,
                                             int per_class, Rng& rng,
                                             double noise = 0.05) {
  VisualFeatureMatrix features;
  features.features = Tensor({table.class_count() * per_class, table.dim()});
  int row = 0;
  for (int c = 0; c < table.class_count(); ++c) {
    for (int s = 0; s < per_class; ++s) {
      Tensor v({table.dim()});
      for (int d = 0; d < table.dim(); ++d) {
        v(d) = table.embeddings(c, d) + noise * rng.normal();
      }
      const Tensor unit = unit_normalize(v);
      auto dst = features.features.row(row);
      for (int d = 0; d < table.dim(); ++d) dst[d] = unit(d);
      features.label_indices.push_back(c);
      ++row;
    }
  }
  features.unit_normalized = true;
  return features;
}

}  // namespace

TEST_CASE("relation_score") {
  SUBCASE("all-zero nets score exactly one half") {
    const auto attr = zero_attr(5, 4, 3);
    const auto rel = zero_rel(3, 4);
    const double e[5] = {0.3, -1.0, 0.5, 2.0, 0.0};
    const double v[3] = {1.0, -1.0, 0.25};
    CHECK(relation_score(attr, rel, e, v) == 0.5);
  }
  SUBCASE("scores stay strictly inside (0, 1)") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      const auto attr = random_attr(4, 6, 3, 1.0, rng);
      const auto rel = random_rel(3, 5, 1.0, rng);
      const Tensor e = random_unit_vector(4, rng);
      const Tensor v = random_unit_vector(3, rng);
      const double s = relation_score(attr, rel, {e.data(), e.size()},
                                      {v.data(), v.size()});
      CHECK(s > 0.0);
      CHECK(s < 1.0);
    }
  }
  SUBCASE("matches the layer-by-layer oracle") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      const auto attr = random_attr(5, 7, 4, 0.8, rng);
      const auto rel = random_rel(4, 6, 0.8, rng);
      const Tensor e = random_unit_vector(5, rng);
      const Tensor v = random_unit_vector(4, rng);
      const double fast = relation_score(attr, rel, {e.data(), e.size()},
                                         {v.data(), v.size()});
      const double slow = score_oracle(attr, rel, {e.data(), e.size()},
                                       {v.data(), v.size()});
      CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
    }
  }
  SUBCASE("dimension mismatch") {
    const auto attr = zero_attr(5, 4, 3);
    const auto rel = zero_rel(3, 4);
    const double e[4] = {1, 2, 3, 4};
    const double v[3] = {1, 2, 3};
    CHECK_THROWS_AS(relation_score(attr, rel, e, v), ShapeError);
  }
}

TEST_CASE("sample_episode") {
  const auto table = random_unit_table(4, 6, 44);
  Rng feature_rng(2);
  const auto features = features_near_embeddings(table, 5, feature_rng);

  SUBCASE("single-sample episode has a one-hot target row") {
    Rng rng(3);
    const auto episode = sample_episode(features, table, {0, 1, 2, 3}, 1, rng);
    CHECK(episode.features.dim(0) == 1);
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) sum += episode.targets(0, j);
    CHECK(sum == 1.0);
    CHECK(episode.targets(0, episode.labels[0]) == 1.0);
  }
  SUBCASE("same seed gives the identical episode") {
    Rng r1(5), r2(5);
    const auto e1 = sample_episode(features, table, {0, 1, 2, 3}, 6, r1);
    const auto e2 = sample_episode(features, table, {0, 1, 2, 3}, 6, r2);
    CHECK(bitwise_equal(e1.features, e2.features));
    CHECK(e1.labels == e2.labels);
    CHECK(bitwise_equal(e1.targets, e2.targets));
  }
  SUBCASE("sampling is uniform over equal-size classes") {
    std::vector<int> counts(4, 0);
    Rng rng(11);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      const auto episode = sample_episode(features, table, {0, 1, 2, 3}, 1, rng);
      ++counts[episode.labels[0]];
    }
    for (int c = 0; c < 4; ++c) {
      CHECK(std::abs(counts[c] / static_cast<double>(draws) - 0.25) < 0.02);
    }
  }
}

TEST_CASE("episode_loss closed forms") {
  const auto table = random_unit_table(5, 6, 77);
  Rng feature_rng(4);
  const auto features = features_near_embeddings(table, 3, feature_rng);
  Rng rng(6);
  const auto episode =
      sample_episode(features, table, {0, 1, 2, 3, 4}, 4, rng);

  SUBCASE("zero nets with one-hot targets give exactly 0.25") {
    const auto attr = zero_attr(6, 5, table.dim() == 6 ? 6 : 6);
    const auto rel = zero_rel(6, 4);
    const auto result = episode_loss(attr, rel, table, episode);
    CHECK(std::abs(result.loss - 0.25) < 1e-9);
  }
  SUBCASE("saturated matched scores make loss and gradients vanish") {
    // Bias-only nets: relation output +/-40 by the sign of a marker the
    // attribute side cannot produce, so scores sit at the targets and the
    // sigmoid slope kills the gradients.
    auto attr = zero_attr(6, 5, 6);
    auto rel = zero_rel(6, 4);
    // score every pair near 0: b2 = -40 -> score ~ 4e-18 ~ target 0
    rel.b2(0) = -40.0;
    Episode all_negative = episode;
    all_negative.targets = Tensor({episode.features.dim(0), 5});
    const auto result = episode_loss(attr, rel, table, all_negative);
    CHECK(result.loss < 1e-20);
    double grad_peak = 0.0;
    for (const Tensor* g :
         {&result.grads.attr.w1, &result.grads.attr.b1, &result.grads.attr.w2,
          &result.grads.attr.b2, &result.grads.rel.w1, &result.grads.rel.b1,
          &result.grads.rel.w2, &result.grads.rel.b2}) {
      for (std::size_t i = 0; i < g->size(); ++i) {
        grad_peak = std::max(grad_peak, std::abs((*g)[i]));
      }
    }
    CHECK(grad_peak < 1e-15);
  }
  SUBCASE("loss stays within [0, 1]") {
    Rng net_rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      const auto attr = random_attr(6, 5, 6, 1.0, net_rng);
      const auto rel = random_rel(6, 4, 1.0, net_rng);
      const auto result = episode_loss(attr, rel, table, episode);
      CHECK(result.loss >= 0.0);
      CHECK(result.loss <= 1.0);
    }
  }
}

TEST_CASE("episode_loss gradients match finite differences") {
  const auto table = random_unit_table(4, 5, 88);
  Rng feature_rng(5);
  const auto features = features_near_embeddings(table, 3, feature_rng);

  int done = 0;
  std::uint64_t seed = 900;
  while (done < 6) {
    Rng rng(seed++);
    auto attr = random_attr(5, 6, 4, 0.6, rng);
    auto rel = random_rel(4, 5, 0.6, rng);
    // features were built at table dim; rebuild at feature dim 4
    VisualFeatureMatrix small;
    small.features = Tensor({6, 4});
    for (int i = 0; i < 6; ++i) {
      const Tensor v = random_unit_vector(4, rng);
      auto dst = small.features.row(i);
      for (int d = 0; d < 4; ++d) dst[d] = v(d);
      small.label_indices.push_back(i % 4);
    }
    small.unit_normalized = true;
    const auto episode = sample_episode(small, table, {0, 1, 2, 3}, 3, rng);
    if (detail::episode_min_abs_pre_relu(attr, rel, table, episode) < 1e-3) {
      continue;
    }
    const auto result = episode_loss(attr, rel, table, episode);

    struct Slot {
      Tensor* param;
      const Tensor* grad;
    };
    const Slot slots[8] = {
        {&attr.w1, &result.grads.attr.w1}, {&attr.b1, &result.grads.attr.b1},
        {&attr.w2, &result.grads.attr.w2}, {&attr.b2, &result.grads.attr.b2},
        {&rel.w1, &result.grads.rel.w1},   {&rel.b1, &result.grads.rel.b1},
        {&rel.w2, &result.grads.rel.w2},   {&rel.b2, &result.grads.rel.b2},
    };
    double worst = 0.0;
    for (const Slot& slot : slots) {
      const Tensor saved = *slot.param;
      const double err = finite_difference_check(
          [&](const Tensor& p) {
            *slot.param = p;
            return episode_loss(attr, rel, table, episode).loss;
          },
          saved, *slot.grad, 1e-5);
      *slot.param = saved;
      worst = std::max(worst, err);
    }
    CHECK(worst < 1e-4);
    ++done;
  }
}

TEST_CASE("train_relation") {
  const auto table = random_unit_table(4, 6, 99);
  Rng feature_rng(6);
  const auto features = features_near_embeddings(table, 8, feature_rng);
  const std::vector<int> seen = {0, 1, 2, 3};

  RelationHyper hyper;
  hyper.episodes = 6000;
  hyper.batch_size = 8;
  hyper.learning_rate = 5e-3;
  hyper.lr_step_size = 4000;
  hyper.lr_gamma = 0.5;
  hyper.hidden_attr = 16;
  hyper.hidden_rel = 12;
  // The full-scale default init (std 0.01) starts the net nearly linear
  // and it stalls at the target prior on desk-sized runs; desk configs use
  // a larger init.
  hyper.init_std = 0.3;

  SUBCASE("realizable instance reaches a small episode loss") {
    Rng rng(1);
    const auto model = train_relation(features, table, seen, hyper, rng);
    REQUIRE(model.episode_losses.size() == 6000);
    double tail = 0.0;
    for (int i = 5500; i < 6000; ++i) tail += model.episode_losses[i];
    CHECK(tail / 500.0 < 0.05);
  }
  SUBCASE("loss trend decreases over training") {
    RelationHyper desk = hyper;
    desk.episodes = 20000;
    desk.learning_rate = 5e-4;
    desk.lr_step_size = 10000;
    for (std::uint64_t seed : {31, 32, 33}) {
      Rng rng(seed);
      const auto model = train_relation(features, table, seen, desk, rng);
      double head = 0.0, tail = 0.0;
      for (int i = 0; i < 1000; ++i) head += model.episode_losses[i];
      for (int i = 19000; i < 20000; ++i) tail += model.episode_losses[i];
      CHECK(tail < head);
    }
  }
  SUBCASE("episodes=0 returns the seeded initialization") {
    RelationHyper frozen = hyper;
    frozen.episodes = 0;
    Rng r1(4);
    const auto model = train_relation(features, table, seen, frozen, r1);
    Rng r2(4);
    const auto attr = init_attribute_net(6, 16, 6, frozen.init_std, r2);
    CHECK(bitwise_equal(model.attr.w1, attr.w1));
    CHECK(model.episode_losses.empty());
  }
  SUBCASE("deterministic per seed") {
    RelationHyper quick = hyper;
    quick.episodes = 300;
    Rng r1(5), r2(5);
    const auto m1 = train_relation(features, table, seen, quick, r1);
    const auto m2 = train_relation(features, table, seen, quick, r2);
    CHECK(bitwise_equal(m1.attr.w1, m2.attr.w1));
    CHECK(bitwise_equal(m1.attr.w2, m2.attr.w2));
    CHECK(bitwise_equal(m1.rel.w1, m2.rel.w1));
    CHECK(bitwise_equal(m1.rel.w2, m2.rel.w2));
  }
  SUBCASE("contamination is rejected") {
    Rng rng(6);
    CHECK_THROWS_AS(train_relation(features, table, {0, 1, 2}, hyper, rng),
                    ContaminationError);
  }
}

TEST_CASE("predict_relation") {
  const auto table = random_unit_table(5, 6, 111);
  Rng rng(7);
  const auto attr = random_attr(6, 8, 4, 0.7, rng);
  const auto rel = random_rel(4, 6, 0.7, rng);
  const Tensor v = random_unit_vector(4, rng);

  SUBCASE("single candidate") {
    const auto ranked =
        predict_relation(attr, rel, {v.data(), v.size()}, {2}, table);
    REQUIRE(ranked.size() == 1);
    CHECK(ranked[0].first == 2);
  }
  SUBCASE("duplicate embeddings tie-break toward the lower index") {
    LabelEmbeddingTable dup = table;
    const auto src = dup.embeddings.row(3);
    auto dst = dup.embeddings.row(1);
    std::copy(src.begin(), src.end(), dst.begin());
    const auto ranked =
        predict_relation(attr, rel, {v.data(), v.size()}, {1, 3}, dup);
    CHECK(ranked[0].second == doctest::Approx(ranked[1].second));
    CHECK(ranked[0].first == 1);
  }
  SUBCASE("matches a score-then-sort oracle") {
    const std::vector<int> candidates = {0, 1, 2, 3, 4};
    const auto ranked =
        predict_relation(attr, rel, {v.data(), v.size()}, candidates, table);
    std::vector<std::pair<int, double>> oracle;
    for (int j : candidates) {
      oracle.emplace_back(j, score_oracle(attr, rel, table.embeddings.row(j),
                                          {v.data(), v.size()}));
    }
    std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      CHECK(ranked[i].first == oracle[i].first);
    }
  }
}

TEST_CASE("relation checkpoint round-trip") {
  zsar::test::TempDir dir("relation");
  Rng rng(13);
  const auto attr = random_attr(5, 7, 4, 0.5, rng);
  const auto rel = random_rel(4, 6, 0.5, rng);
  RelationHyper hyper;
  hyper.episodes = 1234;
  hyper.candidate_set = CandidateSet::seen_only;
  const auto path = dir.path() / "head.zrel";
  save_relation(path, attr, rel, hyper);
  const auto loaded = load_relation(path);
  CHECK(loaded.hyper.episodes == 1234);
  CHECK(loaded.hyper.candidate_set == CandidateSet::seen_only);
  for (std::size_t i = 0; i < attr.w1.size(); ++i) {
    CHECK(loaded.attr.w1[i] ==
          static_cast<double>(static_cast<float>(attr.w1[i])));
  }
  for (std::size_t i = 0; i < rel.w2.size(); ++i) {
    CHECK(loaded.rel.w2[i] ==
          static_cast<double>(static_cast<float>(rel.w2[i])));
  }
}
