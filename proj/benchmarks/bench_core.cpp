// Microbenchmarks at full-scale dimensions: 25-joint skeleton, 300-frame
// clips, 256-d features, 700-d embeddings, 60 classes.

#include <benchmark/benchmark.h>

#include <numeric>

#include "zsar/devise.hpp"
#include "zsar/embeddings.hpp"
#include "zsar/encoder.hpp"
#include "zsar/graph.hpp"
#include "zsar/relation.hpp"
#include "zsar/rng.hpp"

namespace {

using namespace zsar;

Tensor random_tensor(const std::vector<int>& dims, Rng& rng) {
  Tensor t(dims);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

LabelEmbeddingTable full_scale_table(int classes, int dim) {
  std::vector<std::string> labels;
  for (int c = 0; c < classes; ++c) labels.push_back("c" + std::to_string(c));
  Rng rng(1);
  return random_embeddings(labels, dim, rng);
}

void BM_NormalizeAdjacency(benchmark::State& state) {
  const Tensor adjacency = build_adjacency(ntu25_topology());
  for (auto _ : state) {
    benchmark::DoNotOptimize(normalize_adjacency(adjacency));
  }
}
BENCHMARK(BM_NormalizeAdjacency);

void BM_SpatialGraphConv(benchmark::State& state) {
  const int channels = static_cast<int>(state.range(0));
  const Tensor a_norm = normalize_adjacency(build_adjacency(ntu25_topology()));
  Rng rng(2);
  const Tensor x = random_tensor({64, 25, channels}, rng);
  const Tensor w = random_tensor({channels, channels}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(spatial_graph_conv(x, a_norm, w));
  }
}
BENCHMARK(BM_SpatialGraphConv)->Arg(16)->Arg(64);

void BM_TemporalConv(benchmark::State& state) {
  const int channels = static_cast<int>(state.range(0));
  Rng rng(3);
  const Tensor x = random_tensor({64, 25, channels}, rng);
  const Tensor kernel = random_tensor({channels, channels, 9}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(temporal_conv(x, kernel));
  }
}
BENCHMARK(BM_TemporalConv)->Arg(16)->Arg(64);

void BM_EncoderForward(benchmark::State& state) {
  EncoderConfig config;
  config.block_channels = {16, 32, 64};
  config.temporal_kernel = 9;
  config.frames = 300;
  std::vector<int> seen(55);
  std::iota(seen.begin(), seen.end(), 0);
  Rng rng(4);
  const auto model = init_encoder(config, ntu25_topology(), seen, rng);
  auto sequence = make_sequence(2, 300, 25, 0);
  for (std::size_t i = 0; i < sequence.coords.size(); ++i) {
    sequence.coords[i] = rng.normal();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(encoder_forward(model, sequence));
  }
}
BENCHMARK(BM_EncoderForward);

void BM_HingeRankLoss(benchmark::State& state) {
  const auto table = full_scale_table(60, 700);
  Rng rng(5);
  DeviseProjection projection;
  projection.matrix = random_tensor({700, 256}, rng);
  Tensor feature = random_tensor({256}, rng);
  feature = unit_normalize(feature);
  std::vector<int> negatives(60);
  std::iota(negatives.begin(), negatives.end(), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hinge_rank_loss(projection,
                                             {feature.data(), feature.size()},
                                             7, table, 0.1, negatives));
  }
}
BENCHMARK(BM_HingeRankLoss);

void BM_RelationEpisodeLoss(benchmark::State& state) {
  const auto table = full_scale_table(60, 700);
  Rng rng(6);
  const auto attr = init_attribute_net(700, 1400, 256, 0.01, rng);
  const auto rel = init_relation_net(256, 256, 0.01, rng);
  VisualFeatureMatrix features;
  features.features = random_tensor({64, 256}, rng);
  unit_normalize_rows(features.features);
  for (int i = 0; i < 64; ++i) features.label_indices.push_back(i % 55);
  features.unit_normalized = true;
  std::vector<int> candidates(60);
  std::iota(candidates.begin(), candidates.end(), 0);
  const auto episode = sample_episode(features, table, candidates, 32, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(episode_loss(attr, rel, table, episode));
  }
}
BENCHMARK(BM_RelationEpisodeLoss);

}  // namespace

BENCHMARK_MAIN();
