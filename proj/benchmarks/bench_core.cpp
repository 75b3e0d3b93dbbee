#include "lt3lssl/data/augment.hpp"
#include "lt3lssl/data/profile.hpp"
#include "lt3lssl/ssl/cam.hpp"
#include "lt3lssl/ssl/losses.hpp"
#include "lt3lssl/ssl/queue.hpp"
#include "lt3lssl/train/trainer.hpp"

#include <benchmark/benchmark.h>
#include <torch/torch.h>

#include <numeric>

using namespace lt3lssl;

namespace {

torch::Tensor unit_rows(const torch::Tensor& x) { return x / x.norm(2, -1, true); }

void BM_CosineLossBackward(benchmark::State& state) {
  const auto b = state.range(0);
  auto target = torch::randn({b, 128});
  for (auto _ : state) {
    auto a = torch::randn({b, 128}).requires_grad_(true);
    ssl::cosine_similarity_loss(a, target).backward();
    benchmark::DoNotOptimize(a.grad().data_ptr());
  }
}
BENCHMARK(BM_CosineLossBackward)->Arg(64)->Arg(256);

void BM_CamMaskStages(benchmark::State& state) {
  const auto stages = state.range(0);
  auto x = torch::rand({64, 3, 32, 32});
  auto f = torch::randn({64, 64, 8, 8});
  auto w = torch::randn({10, 64});
  auto classes = torch::randint(0, 10, {64}, torch::kLong);
  auto first = ssl::normalize_cam(ssl::compute_cam(f, w, classes));
  ssl::CamFn next = [&](const torch::Tensor&) { return first; };
  for (auto _ : state) benchmark::DoNotOptimize(ssl::mask_input_stages(x, first, stages, next).data_ptr());
}
BENCHMARK(BM_CamMaskStages)->DenseRange(1, 3);

void BM_QueueAggregateBatch(benchmark::State& state) {
  ssl::AugmentedQueue q(state.range(0), 128);
  std::vector<std::int64_t> labels;
  for (std::int64_t i = 0; i < q.capacity(); ++i) labels.push_back(i % 100);
  q.push(unit_rows(torch::randn({q.capacity(), 128})), labels);
  const std::vector<std::int64_t> lookup(labels.begin(), labels.begin() + 128);
  for (auto _ : state) benchmark::DoNotOptimize(q.aggregate_batch(lookup).first.data_ptr());
}
BENCHMARK(BM_QueueAggregateBatch)->Arg(1024)->Arg(8192);

void BM_QueuePush(benchmark::State& state) {
  ssl::AugmentedQueue q(1024, 128);
  auto e = unit_rows(torch::randn({128, 128}));
  const std::vector<std::int64_t> labels(128, 3);
  for (auto _ : state) q.push(e, labels);
}
BENCHMARK(BM_QueuePush);

void BM_TwoViewBatch(benchmark::State& state) {
  data::LabeledImageSet set;
  set.images = torch::rand({64, 3, 64, 32});
  for (std::int64_t i = 0; i < 64; ++i) {
    set.labels.push_back(i % 10);
    set.sample_ids.push_back(i);
  }
  std::vector<std::int64_t> idx(64);
  std::iota(idx.begin(), idx.end(), 0);
  const auto pipeline = data::AugmentationPipeline::moco_v2();
  std::int64_t epoch = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(data::make_two_view_batch(set, idx, pipeline, 0, epoch++).x.data_ptr());
}
BENCHMARK(BM_TwoViewBatch)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  train::TrainConfig cfg;
  cfg.model.backbone = {"resnet8", 16};
  cfg.losses = train::parse_losses(state.range(0) == 0 ? "ce" : "ce,h,p,a");
  cfg.optim.batch_size = 32;
  cfg.queue_capacity = 256;
  auto s = train::TrainState::create(cfg, data::build_longtail_profile(10, 100, 10.0), 100);
  data::TwoViewBatch batch;
  batch.x = torch::rand({32, 3, 32, 32});
  batch.x_prime = torch::rand({32, 3, 32, 32});
  batch.labels = torch::randint(0, 10, {32}, torch::kLong);
  for (auto _ : state) benchmark::DoNotOptimize(train::train_step(s, batch).total);
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->ArgNames({"full"})->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
