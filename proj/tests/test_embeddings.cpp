#include <doctest.h>

#include <cmath>
#include <string>

#include "test_support.hpp"
#include "zsar/embeddings.hpp"
#include "zsar/error.hpp"
#include "zsar/io.hpp"

using namespace zsar;
using zsar::test::TempDir;

namespace {

std::filesystem::path write_csv(const TempDir& dir, const std::string& name,
                                const std::string& content) {
  const auto path = dir.path() / name;
  io::write_text_file(path, content);
  return path;
}

}  // namespace

TEST_CASE("load_embeddings parses the documented CSV format") {
  TempDir dir("emb");
  const auto path = write_csv(dir, "table.csv",
                              "label,d0,d1,d2,d3\n"
                              "walk,2,0,0,0\n"
                              "run,0,1,0,0\n"
                              "\"sit, then stand\",0.5,0.5,0.5,0.5\n");
  const auto table = load_embeddings(path);
  CHECK(table.class_count() == 3);
  CHECK(table.dim() == 4);
  CHECK(table.labels[2] == "sit, then stand");
  CHECK(table.embeddings(2, 3) == doctest::Approx(0.5));
  CHECK(table.source == EmbeddingSource::loaded);
  CHECK(!table.normalized);  // first row has norm 2
  CHECK(table.index_of("run") == 1);
  CHECK(table.index_of("absent") == -1);
}

TEST_CASE("load_embeddings error paths name the line") {
  TempDir dir("emberr");
  SUBCASE("duplicate label") {
    const auto path = write_csv(dir, "dup.csv",
                                "label,d0\nwalk,1\nwalk,2\n");
    CHECK_THROWS_WITH_AS(load_embeddings(path),
                         doctest::Contains("line 3"), ParseError);
  }
  SUBCASE("ragged row") {
    const auto path = write_csv(dir, "ragged.csv",
                                "label,d0,d1\nwalk,1\n");
    CHECK_THROWS_WITH_AS(load_embeddings(path),
                         doctest::Contains("line 2"), ParseError);
  }
  SUBCASE("non-numeric cell") {
    const auto path = write_csv(dir, "nonnum.csv",
                                "label,d0\nwalk,abc\n");
    CHECK_THROWS_WITH_AS(load_embeddings(path),
                         doctest::Contains("non-numeric"), ParseError);
  }
  SUBCASE("bad header") {
    const auto path = write_csv(dir, "hdr.csv", "name,d0\nwalk,1\n");
    CHECK_THROWS_AS(load_embeddings(path), ParseError);
  }
  SUBCASE("missing expected label") {
    const auto path = write_csv(dir, "miss.csv",
                                "label,d0\nwalk,1\nrun,2\n");
    CHECK_THROWS_WITH_AS(
        load_embeddings(path, std::vector<std::string>{"walk", "jump"}),
        doctest::Contains("jump"), ParseError);
  }
}

TEST_CASE("expected labels reorder rows") {
  TempDir dir("order");
  const auto path = write_csv(dir, "t.csv",
                              "label,d0\nwalk,1\nrun,2\njump,3\n");
  const auto table = load_embeddings(
      path, std::vector<std::string>{"jump", "walk", "run"});
  CHECK(table.labels == std::vector<std::string>{"jump", "walk", "run"});
  CHECK(table.embeddings(0, 0) == 3.0);
  CHECK(table.embeddings(1, 0) == 1.0);
}

TEST_CASE("save/load round-trip is value-identical at 32-bit width") {
  TempDir dir("rt");
  // 0.1 is not exactly representable; the loader quantizes to float so the
  // second pass reproduces the first exactly.
  const auto original = write_csv(dir, "orig.csv",
                                  "label,d0,d1\n"
                                  "a,0.1,0.333333333333\n"
                                  "\"quote\"\"d\",-1e-7,2.5\n");
  const auto first = load_embeddings(original);
  CHECK(first.labels[1] == "quote\"d");
  const auto saved = dir.path() / "saved.csv";
  save_embeddings(saved, first);
  const auto second = load_embeddings(saved);
  REQUIRE(second.class_count() == first.class_count());
  REQUIRE(second.dim() == first.dim());
  CHECK(second.labels == first.labels);
  for (std::size_t i = 0; i < first.embeddings.size(); ++i) {
    CHECK(second.embeddings[i] == first.embeddings[i]);
  }
}

TEST_CASE("random_embeddings") {
  const std::vector<std::string> labels = {"a", "b", "c"};
  SUBCASE("deterministic per seed") {
    Rng r1(99), r2(99);
    const auto t1 = random_embeddings(labels, 8, r1);
    const auto t2 = random_embeddings(labels, 8, r2);
    CHECK(bitwise_equal(t1.embeddings, t2.embeddings));
    CHECK(t1.source == EmbeddingSource::random);
    CHECK(t1.random_seed == 99);
    CHECK(t1.normalized);
  }
  SUBCASE("different seeds differ") {
    Rng r1(1), r2(2);
    CHECK(!bitwise_equal(random_embeddings(labels, 8, r1).embeddings,
                         random_embeddings(labels, 8, r2).embeddings));
  }
  SUBCASE("rows are unit norm") {
    Rng rng(5);
    const auto table = random_embeddings(labels, 16, rng);
    for (int i = 0; i < table.class_count(); ++i) {
      CHECK(std::abs(l2_norm(table.embeddings.row(i)) - 1.0) < 1e-12);
    }
  }
  SUBCASE("60 classes at 700-d: mean pairwise cosine near zero") {
    std::vector<std::string> many;
    for (int i = 0; i < 60; ++i) many.push_back("c" + std::to_string(i));
    double grand_mean = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      const auto table = random_embeddings(many, 700, rng);
      double sum = 0.0;
      int pairs = 0;
      for (int i = 0; i < 60; ++i) {
        for (int j = i + 1; j < 60; ++j) {
          sum += dot(table.embeddings.row(i), table.embeddings.row(j));
          ++pairs;
        }
      }
      grand_mean += sum / pairs;
    }
    CHECK(std::abs(grand_mean / 20.0) < 0.05);
  }
  SUBCASE("duplicate labels rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(random_embeddings({"a", "a"}, 4, rng), ConfigError);
  }
}

TEST_CASE("pairwise_distances") {
  SUBCASE("identical rows have distance zero") {
    LabelEmbeddingTable table;
    table.labels = {"a", "b"};
    table.embeddings = Tensor::from({2, 2}, {1.0, 2.0, 1.0, 2.0});
    const Tensor d = pairwise_distances(table, DistanceMetric::cosine);
    CHECK(d(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    const Tensor e = pairwise_distances(table, DistanceMetric::euclidean);
    CHECK(e(0, 1) == 0.0);
  }
  SUBCASE("orthogonal unit rows have cosine distance one") {
    LabelEmbeddingTable table;
    table.labels = {"a", "b"};
    table.embeddings = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
    const Tensor d = pairwise_distances(table, DistanceMetric::cosine);
    CHECK(d(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("matches the double-loop oracle") {
    const auto table = zsar::test::random_unit_table(5, 7, 123);
    for (const auto metric :
         {DistanceMetric::cosine, DistanceMetric::euclidean}) {
      const Tensor d = pairwise_distances(table, metric);
      for (int i = 0; i < 5; ++i) {
        CHECK(d(i, i) == 0.0);
        for (int j = 0; j < 5; ++j) {
          double expected = 0.0;
          if (metric == DistanceMetric::cosine) {
            double dp = 0.0, na = 0.0, nb = 0.0;
            for (int k = 0; k < 7; ++k) {
              dp += table.embeddings(i, k) * table.embeddings(j, k);
              na += table.embeddings(i, k) * table.embeddings(i, k);
              nb += table.embeddings(j, k) * table.embeddings(j, k);
            }
            expected = i == j ? 0.0 : 1.0 - dp / std::sqrt(na * nb);
          } else {
            double acc = 0.0;
            for (int k = 0; k < 7; ++k) {
              const double diff = table.embeddings(i, k) - table.embeddings(j, k);
              acc += diff * diff;
            }
            expected = std::sqrt(acc);
          }
          CHECK(d(i, j) == doctest::Approx(expected).epsilon(1e-12));
          CHECK(d(i, j) == d(j, i));
        }
      }
    }
  }
  SUBCASE("euclidean satisfies the triangle inequality") {
    const auto table = zsar::test::random_unit_table(8, 5, 321);
    const Tensor d = pairwise_distances(table, DistanceMetric::euclidean);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        for (int k = 0; k < 8; ++k) {
          CHECK(d(i, j) <= d(i, k) + d(k, j) + 1e-12);
        }
      }
    }
  }
  SUBCASE("zero-norm row under cosine") {
    LabelEmbeddingTable table;
    table.labels = {"a", "b"};
    table.embeddings = Tensor({2, 3});
    table.embeddings(0, 0) = 1.0;
    CHECK_THROWS_AS(pairwise_distances(table, DistanceMetric::cosine),
                    DataError);
  }
}

TEST_CASE("normalization flag is truthful") {
  TempDir dir("norm");
  const auto path = write_csv(dir, "t.csv", "label,d0,d1\na,3,4\nb,1,0\n");
  const auto raw = load_embeddings(path);
  CHECK(!raw.normalized);
  const auto normalized = normalize_table(raw);
  CHECK(normalized.normalized);
  for (int i = 0; i < normalized.class_count(); ++i) {
    CHECK(std::abs(l2_norm(normalized.embeddings.row(i)) - 1.0) < 1e-12);
  }
  // A table saved in normalized form is detected as normalized on load.
  const auto saved = dir.path() / "normed.csv";
  save_embeddings(saved, normalized);
  CHECK(load_embeddings(saved).normalized);
}
