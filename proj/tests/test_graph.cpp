#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "test_support.hpp"
#include "zsar/error.hpp"
#include "zsar/graph.hpp"
#include "zsar/io.hpp"
#include "zsar/skeleton.hpp"

using namespace zsar;

namespace {

// Power iteration; enough accuracy to bound the spectral radius.
double largest_eigenvalue(const Tensor& m) {
  const int n = m.dim(0);
  std::vector<double> v(static_cast<std::size_t>(n), 1.0);
  double lambda = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<double> next(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        next[static_cast<std::size_t>(i)] +=
            m(i, j) * v[static_cast<std::size_t>(j)];
      }
    }
    double norm = 0.0;
    for (double x : next) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (double& x : next) x /= norm;
    lambda = 0.0;
    for (int i = 0; i < n; ++i) {
      double mx = 0.0;
      for (int j = 0; j < n; ++j) {
        mx += m(i, j) * next[static_cast<std::size_t>(j)];
      }
      lambda += next[static_cast<std::size_t>(i)] * mx;
    }
    v = std::move(next);
  }
  return lambda;
}

JointTopology random_tree(int joints, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < joints; ++v) {
    edges.emplace_back(static_cast<int>(rng.uniform_int(v)), v);
  }
  return make_topology(joints, std::move(edges));
}

}  // namespace

TEST_CASE("build_adjacency basics") {
  SUBCASE("two joints, one edge") {
    const auto topo = make_topology(2, {{0, 1}});
    const Tensor a = build_adjacency(topo);
    CHECK(a(0, 0) == 0.0);
    CHECK(a(0, 1) == 1.0);
    CHECK(a(1, 0) == 1.0);
    CHECK(a(1, 1) == 0.0);
  }
  SUBCASE("three-joint chain has exactly four ones") {
    const auto topo = make_topology(3, {{0, 1}, {1, 2}});
    const Tensor a = build_adjacency(topo);
    int ones = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ones += a[i] == 1.0 ? 1 : 0;
    CHECK(ones == 4);
  }
  SUBCASE("out-of-range edge") {
    CHECK_THROWS_AS(make_topology(2, {{0, 2}}), ConfigError);
  }
  SUBCASE("self-loop rejected") {
    CHECK_THROWS_AS(make_topology(2, {{1, 1}}), ConfigError);
  }
  SUBCASE("disconnected graph rejected") {
    CHECK_THROWS_AS(make_topology(4, {{0, 1}, {2, 3}}), ConfigError);
  }
}

TEST_CASE("the 25-joint constant is a 24-bone tree") {
  const auto topo = ntu25_topology();
  CHECK(topo.joint_count == 25);
  CHECK(topo.edges.size() == 24);  // tree: joints - 1 bones
  CHECK(topo.names.size() == 25);
  const Tensor a = build_adjacency(topo);
  int ones = 0;
  for (int i = 0; i < 25; ++i) {
    for (int j = 0; j < 25; ++j) {
      CHECK(a(i, j) == a(j, i));
      ones += a(i, j) == 1.0 ? 1 : 0;
    }
  }
  CHECK(ones == 48);  // 24 undirected bones
}

TEST_CASE("normalize_adjacency") {
  SUBCASE("single node") {
    const Tensor a({1, 1});
    const Tensor n = normalize_adjacency(a);
    CHECK(n(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("two nodes, one edge") {
    const Tensor a = build_adjacency(make_topology(2, {{0, 1}}));
    const Tensor n = normalize_adjacency(a);
    for (std::size_t i = 0; i < n.size(); ++i) {
      CHECK(n[i] == doctest::Approx(0.5).epsilon(1e-15));
    }
  }
  SUBCASE("three-node chain, hand-computed center row") {
    // degrees of A+I: (2, 3, 2)
    const Tensor a = build_adjacency(make_topology(3, {{0, 1}, {1, 2}}));
    const Tensor n = normalize_adjacency(a);
    CHECK(n(1, 0) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
    CHECK(n(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(n(1, 2) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
  }
  SUBCASE("complete graph rows are all 1/n") {
    for (int n_nodes = 2; n_nodes <= 6; ++n_nodes) {
      std::vector<std::pair<int, int>> edges;
      for (int i = 0; i < n_nodes; ++i) {
        for (int j = i + 1; j < n_nodes; ++j) edges.emplace_back(i, j);
      }
      const Tensor norm =
          normalize_adjacency(build_adjacency(make_topology(n_nodes, edges)));
      for (std::size_t i = 0; i < norm.size(); ++i) {
        CHECK(norm[i] == doctest::Approx(1.0 / n_nodes).epsilon(1e-12));
      }
    }
  }
  SUBCASE("spectral radius at most 1") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      const auto topo = random_tree(2 + static_cast<int>(rng.uniform_int(8)),
                                    rng);
      const Tensor norm = normalize_adjacency(build_adjacency(topo));
      CHECK(largest_eigenvalue(norm) <= 1.0 + 1e-9);
    }
  }
  SUBCASE("symmetry of the result") {
    Rng rng(23);
    const auto topo = random_tree(7, rng);
    const Tensor norm = normalize_adjacency(build_adjacency(topo));
    for (int i = 0; i < 7; ++i) {
      for (int j = 0; j < 7; ++j) {
        CHECK(norm(i, j) == doctest::Approx(norm(j, i)).epsilon(1e-15));
      }
    }
  }
  SUBCASE("precondition violations") {
    Tensor bad({2, 2});
    bad(0, 0) = 1.0;
    CHECK_THROWS_AS(normalize_adjacency(bad), DataError);
    Tensor asym({2, 2});
    asym(0, 1) = 1.0;
    CHECK_THROWS_AS(normalize_adjacency(asym), DataError);
  }
}

TEST_CASE("adjacency construction is equivariant under relabeling") {
  // build(permute(topology)) == permute(build(topology)) on small graphs
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(4));
    const auto topo = random_tree(n, rng);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);

    std::vector<std::pair<int, int>> mapped;
    for (const auto& [a, b] : topo.edges) {
      mapped.emplace_back(perm[static_cast<std::size_t>(a)],
                          perm[static_cast<std::size_t>(b)]);
    }
    const Tensor original = build_adjacency(topo);
    const Tensor relabeled = build_adjacency(make_topology(n, mapped));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        CHECK(relabeled(perm[static_cast<std::size_t>(i)],
                        perm[static_cast<std::size_t>(j)]) == original(i, j));
      }
    }
  }
}

TEST_CASE("topology file round-trip") {
  zsar::test::TempDir dir("topology");
  const auto topo = ntu25_topology();
  const auto path = dir.path() / "topology.json";
  save_topology(path, topo);
  const auto loaded = load_topology(path);
  CHECK(loaded.joint_count == topo.joint_count);
  CHECK(loaded.edges == topo.edges);
  CHECK(loaded.names == topo.names);

  SUBCASE("malformed file") {
    const auto bad = dir.path() / "bad.json";
    zsar::io::write_text_file(bad, "{\"joint_count\": 2}");
    CHECK_THROWS_AS(load_topology(bad), ParseError);
  }
}

TEST_CASE("validate_sequence") {
  const auto topo = make_topology(3, {{0, 1}, {1, 2}});
  SUBCASE("well-formed sample") {
    const auto seq = make_sequence(1, 4, 3, 0, "ok");
    const auto diag = validate_sequence(seq, topo, 2);
    CHECK(diag.ok);
    CHECK(diag.issues.empty());
  }
  SUBCASE("NaN coordinate names person/frame/joint/axis") {
    auto seq = make_sequence(2, 4, 3, 0);
    seq.coords(1, 2, 1, 2) = std::nan("");
    const auto diag = validate_sequence(seq, topo);
    REQUIRE(!diag.ok);
    REQUIRE(diag.issues.size() == 1);
    CHECK(diag.issues[0].find("person 1") != std::string::npos);
    CHECK(diag.issues[0].find("frame 2") != std::string::npos);
    CHECK(diag.issues[0].find("joint 1") != std::string::npos);
    CHECK(diag.issues[0].find("axis Z") != std::string::npos);
  }
  SUBCASE("joint-count mismatch") {
    const auto seq = make_sequence(1, 4, 2, 0);
    const auto diag = validate_sequence(seq, topo);
    CHECK(!diag.ok);
  }
  SUBCASE("label out of range") {
    const auto seq = make_sequence(1, 4, 3, 7);
    const auto diag = validate_sequence(seq, topo, 5);
    CHECK(!diag.ok);
  }
}
