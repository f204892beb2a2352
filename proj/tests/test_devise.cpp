#include <doctest.h>

#include <cmath>
#include <numeric>

#include "test_support.hpp"
#include "zsar/devise.hpp"
#include "zsar/error.hpp"
#include "zsar/gradcheck.hpp"

using namespace zsar;
using zsar::test::random_unit_table;
using zsar::test::random_unit_vector;

namespace {

std::vector<int> all_classes(const LabelEmbeddingTable& table) {
  std::vector<int> out(static_cast<std::size_t>(table.class_count()));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

// Feature matrix whose rows are noisy linear images of their class
// embeddings, so a linear projection back to the embeddings exists.
VisualFeatureMatrix realizable_features(const LabelEmbeddingTable& table,
                                        int per_class, int feature_dim,
                                        Rng& rng, double noise = 0.02) {
  Tensor mix({table.dim(), feature_dim});
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = rng.normal();
  VisualFeatureMatrix features;
  features.features = Tensor({table.class_count() * per_class, feature_dim});
  int row = 0;
  for (int c = 0; c < table.class_count(); ++c) {
    for (int s = 0; s < per_class; ++s) {
      Tensor v({feature_dim});
      for (int f = 0; f < feature_dim; ++f) {
        double acc = 0.0;
        for (int d = 0; d < table.dim(); ++d) {
          acc += table.embeddings(c, d) * mix(d, f);
        }
        v(f) = acc + noise * rng.normal();
      }
      const Tensor unit = unit_normalize(v);
      auto dst = features.features.row(row);
      for (int f = 0; f < feature_dim; ++f) dst[f] = unit(f);
      features.label_indices.push_back(c);
      ++row;
    }
  }
  features.unit_normalized = true;
  return features;
}

double mean_loss(const DeviseProjection& projection,
                 const VisualFeatureMatrix& features,
                 const LabelEmbeddingTable& table, const DeviseHyper& hyper,
                 const std::vector<int>& negatives) {
  double total = 0.0;
  for (int i = 0; i < features.count(); ++i) {
    total += hinge_rank_loss(projection, features.features.row(i),
                             features.label_indices[i], table, hyper.margin,
                             negatives)
                 .loss;
  }
  return total / features.count();
}

}  // namespace

TEST_CASE("hinge_rank_loss closed forms") {
  SUBCASE("zero projection costs margin per negative") {
    const auto table = random_unit_table(6, 8, 3);
    DeviseProjection projection;
    projection.matrix = Tensor({8, 4});
    Rng rng(4);
    const Tensor v = random_unit_vector(4, rng);
    const auto negatives = all_classes(table);
    const auto result = hinge_rank_loss(projection, {v.data(), v.size()}, 2,
                                        table, 0.1, negatives);
    CHECK(std::abs(result.loss - 0.1 * 5) < 1e-9);
  }
  SUBCASE("direct substitution: projected feature equals the wrong class") {
    // t0 = e0, t1 = e1, M v = t1, margin 0.1:
    // loss = max(0, 0.1 - 0 + 1) = 1.1
    LabelEmbeddingTable table;
    table.labels = {"right", "wrong"};
    table.embeddings = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
    table.normalized = true;
    DeviseProjection projection;
    projection.matrix = Tensor::from({2, 1}, {0.0, 1.0});
    const double v[1] = {1.0};
    const auto result =
        hinge_rank_loss(projection, v, 0, table, 0.1, {0, 1});
    CHECK(result.loss == doctest::Approx(1.1).epsilon(1e-12));
  }
  SUBCASE("all hinges slack: zero loss and zero gradient") {
    LabelEmbeddingTable table;
    table.labels = {"a", "b"};
    table.embeddings = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
    DeviseProjection projection;
    projection.matrix = Tensor::from({2, 1}, {1.0, 0.0});  // M v = t0
    const double v[1] = {1.0};
    const auto result =
        hinge_rank_loss(projection, v, 0, table, 0.1, {0, 1});
    CHECK(result.loss == 0.0);
    for (std::size_t i = 0; i < result.grad.size(); ++i) {
      CHECK(result.grad[i] == 0.0);
    }
  }
  SUBCASE("loss is nonnegative on random instances") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
      const auto table = random_unit_table(5, 6, 100 + trial);
      DeviseProjection projection;
      projection.matrix = Tensor({6, 3});
      for (std::size_t i = 0; i < projection.matrix.size(); ++i) {
        projection.matrix[i] = rng.normal();
      }
      const Tensor v = random_unit_vector(3, rng);
      const auto result = hinge_rank_loss(
          projection, {v.data(), v.size()},
          static_cast<int>(rng.uniform_int(5)), table, 0.1,
          all_classes(table));
      CHECK(result.loss >= 0.0);
    }
  }
  SUBCASE("label outside the table") {
    const auto table = random_unit_table(3, 4, 9);
    DeviseProjection projection;
    projection.matrix = Tensor({4, 2});
    const double v[2] = {1.0, 0.0};
    CHECK_THROWS_AS(hinge_rank_loss(projection, v, 5, table, 0.1, {0, 1, 2}),
                    ConfigError);
  }
}

TEST_CASE("hinge_rank_loss gradient matches finite differences") {
  // Instances are resampled until every hinge term is at least 1e-3 from
  // its boundary, where the subgradient is the classical gradient.
  int done = 0;
  std::uint64_t seed = 400;
  while (done < 8) {
    Rng rng(seed++);
    const auto table = random_unit_table(5, 6, seed);
    DeviseProjection projection;
    projection.matrix = Tensor({6, 3});
    for (std::size_t i = 0; i < projection.matrix.size(); ++i) {
      projection.matrix[i] = 0.5 * rng.normal();
    }
    const Tensor v = random_unit_vector(3, rng);
    const int label = static_cast<int>(rng.uniform_int(5));
    const auto negatives = all_classes(table);

    // boundary proximity check
    Tensor projected({6});
    for (int d = 0; d < 6; ++d) {
      projected(d) = dot(projection.matrix.row(d), {v.data(), v.size()});
    }
    const double true_score =
        dot(table.embeddings.row(label), {projected.data(), projected.size()});
    bool near_boundary = false;
    for (int j = 0; j < 5; ++j) {
      if (j == label) continue;
      const double term =
          0.1 - true_score +
          dot(table.embeddings.row(j), {projected.data(), projected.size()});
      if (std::abs(term) < 1e-3) near_boundary = true;
    }
    if (near_boundary) continue;

    const auto result = hinge_rank_loss(projection, {v.data(), v.size()},
                                        label, table, 0.1, negatives);
    const double err = finite_difference_check(
        [&](const Tensor& m) {
          DeviseProjection probe;
          probe.matrix = m;
          return hinge_rank_loss(probe, {v.data(), v.size()}, label, table,
                                 0.1, negatives)
              .loss;
        },
        projection.matrix, result.grad, 1e-5);
    CHECK(err < 1e-4);
    ++done;
  }
}

TEST_CASE("train_devise") {
  const auto table = random_unit_table(4, 8, 77);
  DeviseHyper hyper;
  hyper.margin = 0.1;
  hyper.learning_rate = 0.05;
  hyper.momentum = 0.9;
  hyper.batch_size = 8;
  hyper.epochs = 60;
  const std::vector<int> seen = {0, 1, 2, 3};

  SUBCASE("linearly realizable instance trains far below its start") {
    Rng data_rng(7);
    const auto features = realizable_features(table, 10, 5, data_rng);
    Rng rng(1);
    const auto projection = train_devise(features, table, seen, hyper, rng);
    DeviseProjection zero;
    zero.matrix = Tensor({table.dim(), features.dim()});
    const auto negatives = all_classes(table);
    const double initial = mean_loss(zero, features, table, hyper, negatives);
    const double final_loss =
        mean_loss(projection, features, table, hyper, negatives);
    CHECK(final_loss < 0.05 * initial);
  }
  SUBCASE("epochs=0 returns the zero initialization") {
    Rng data_rng(8);
    const auto features = realizable_features(table, 2, 5, data_rng);
    DeviseHyper frozen = hyper;
    frozen.epochs = 0;
    Rng rng(1);
    const auto projection = train_devise(features, table, seen, frozen, rng);
    for (std::size_t i = 0; i < projection.matrix.size(); ++i) {
      CHECK(projection.matrix[i] == 0.0);
    }
  }
  SUBCASE("full-batch loss is non-increasing at a small learning rate") {
    DeviseHyper gentle = hyper;
    gentle.learning_rate = 1e-4;
    gentle.momentum = 0.0;
    gentle.batch_size = 1 << 20;  // full batch: one step per epoch
    const auto negatives = all_classes(table);
    for (std::uint64_t seed : {21, 22, 23}) {
      Rng data_rng(seed);
      const auto features = realizable_features(table, 3, 5, data_rng);
      double previous = std::numeric_limits<double>::infinity();
      for (int epochs = 0; epochs <= 8; ++epochs) {
        DeviseHyper steps = gentle;
        steps.epochs = epochs;
        Rng rng(seed);
        const auto projection =
            train_devise(features, table, seen, steps, rng);
        const double loss =
            mean_loss(projection, features, table, gentle, negatives);
        CHECK(loss <= previous + 1e-12);
        previous = loss;
      }
    }
  }
  SUBCASE("unseen feature rows are contamination") {
    Rng data_rng(9);
    auto features = realizable_features(table, 2, 5, data_rng);
    Rng rng(1);
    CHECK_THROWS_AS(train_devise(features, table, {0, 1, 2}, hyper, rng),
                    ContaminationError);
  }
  SUBCASE("seen_only equals all_classes on the unseen-stripped table") {
    // Training with negatives restricted to the seen set must match
    // training against a table that never had the unseen rows.
    const std::vector<int> seen_subset = {0, 1, 2};
    LabelEmbeddingTable stripped;
    stripped.labels = {table.labels[0], table.labels[1], table.labels[2]};
    stripped.embeddings = Tensor({3, table.dim()});
    for (int c = 0; c < 3; ++c) {
      const auto src = table.embeddings.row(c);
      auto dst = stripped.embeddings.row(c);
      std::copy(src.begin(), src.end(), dst.begin());
    }
    stripped.normalized = table.normalized;

    Rng data_rng(11);
    auto features = realizable_features(table, 4, 5, data_rng);
    // keep only seen-class rows
    VisualFeatureMatrix seen_features;
    seen_features.unit_normalized = true;
    std::vector<int> keep;
    for (int i = 0; i < features.count(); ++i) {
      if (features.label_indices[i] <= 2) keep.push_back(i);
    }
    seen_features.features =
        Tensor({static_cast<int>(keep.size()), features.dim()});
    for (std::size_t r = 0; r < keep.size(); ++r) {
      const auto src = features.features.row(keep[r]);
      auto dst = seen_features.features.row(static_cast<int>(r));
      std::copy(src.begin(), src.end(), dst.begin());
      seen_features.label_indices.push_back(features.label_indices[keep[r]]);
    }

    DeviseHyper quick = hyper;
    quick.epochs = 5;
    quick.negative_set = NegativeSet::seen_only;
    Rng r1(3);
    const auto m1 =
        train_devise(seen_features, table, seen_subset, quick, r1);
    quick.negative_set = NegativeSet::all_classes;
    Rng r2(3);
    const auto m2 =
        train_devise(seen_features, stripped, seen_subset, quick, r2);
    CHECK(bitwise_equal(m1.matrix, m2.matrix));
  }
  SUBCASE("training is deterministic per seed") {
    Rng data_rng(12);
    const auto features = realizable_features(table, 3, 5, data_rng);
    DeviseHyper quick = hyper;
    quick.epochs = 5;
    Rng r1(6), r2(6);
    CHECK(bitwise_equal(
        train_devise(features, table, seen, quick, r1).matrix,
        train_devise(features, table, seen, quick, r2).matrix));
  }
}

TEST_CASE("predict_devise") {
  const auto table = random_unit_table(5, 6, 55);
  Rng rng(3);
  DeviseProjection projection;
  projection.matrix = Tensor({6, 4});
  for (std::size_t i = 0; i < projection.matrix.size(); ++i) {
    projection.matrix[i] = rng.normal();
  }
  const Tensor v = random_unit_vector(4, rng);

  SUBCASE("single candidate is ranked first") {
    const auto ranked =
        predict_devise(projection, {v.data(), v.size()}, {3}, table);
    REQUIRE(ranked.size() == 1);
    CHECK(ranked[0].first == 3);
  }
  SUBCASE("exact embedding match wins with score one") {
    LabelEmbeddingTable ortho;
    ortho.labels = {"a", "b", "c"};
    ortho.embeddings = Tensor::from(
        {3, 3}, {1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0});
    DeviseProjection onto;
    onto.matrix = Tensor::from({3, 1}, {0.0, 1.0, 0.0});  // M v = t1
    const double feature[1] = {1.0};
    const auto ranked = predict_devise(onto, feature, {0, 1, 2}, ortho);
    CHECK(ranked[0].first == 1);
    CHECK(ranked[0].second == doctest::Approx(1.0));
  }
  SUBCASE("matches the exhaustive dot-product oracle") {
    const std::vector<int> candidates = {0, 1, 2, 3, 4};
    const auto ranked =
        predict_devise(projection, {v.data(), v.size()}, candidates, table);
    // oracle: explicit scores, stable sort by (-score, index)
    std::vector<std::pair<int, double>> oracle;
    for (int j : candidates) {
      double score = 0.0;
      for (int d = 0; d < 6; ++d) {
        double mv = 0.0;
        for (int f = 0; f < 4; ++f) mv += projection.matrix(d, f) * v(f);
        score += table.embeddings(j, d) * mv;
      }
      oracle.emplace_back(j, score);
    }
    std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    REQUIRE(ranked.size() == oracle.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      CHECK(ranked[i].first == oracle[i].first);
      CHECK(ranked[i].second == doctest::Approx(oracle[i].second).epsilon(1e-12));
    }
  }
  SUBCASE("ranking is invariant to positive scaling") {
    const std::vector<int> candidates = {0, 1, 2, 3, 4};
    const auto base =
        predict_devise(projection, {v.data(), v.size()}, candidates, table);
    DeviseProjection scaled;
    scaled.matrix = projection.matrix;
    for (std::size_t i = 0; i < scaled.matrix.size(); ++i) {
      scaled.matrix[i] *= 37.5;
    }
    const auto rescaled =
        predict_devise(scaled, {v.data(), v.size()}, candidates, table);
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(base[i].first == rescaled[i].first);
    }
  }
  SUBCASE("empty candidates are a usage error") {
    CHECK_THROWS_AS(predict_devise(projection, {v.data(), v.size()}, {}, table),
                    ConfigError);
  }
}

TEST_CASE("devise checkpoint round-trip") {
  zsar::test::TempDir dir("devise");
  Rng rng(66);
  DeviseProjection projection;
  projection.matrix = Tensor({6, 4});
  for (std::size_t i = 0; i < projection.matrix.size(); ++i) {
    projection.matrix[i] = rng.normal();
  }
  DeviseHyper hyper;
  hyper.margin = 0.2;
  hyper.epochs = 17;
  const auto path = dir.path() / "head.zdvs";
  save_devise(path, projection, hyper);
  const auto [loaded, loaded_hyper] = load_devise(path);
  CHECK(loaded_hyper.margin == 0.2);
  CHECK(loaded_hyper.epochs == 17);
  for (std::size_t i = 0; i < projection.matrix.size(); ++i) {
    CHECK(loaded.matrix[i] ==
          static_cast<double>(static_cast<float>(projection.matrix[i])));
  }
}
