#include "fixtures.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/ssl/cam.hpp"
#include "lt3lssl/ssl/losses.hpp"
#include "lt3lssl/ssl/queue.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <random>

using namespace lt3lssl;
using namespace lt3lssl::ssl;
using torch::indexing::Slice;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> to_vec(const torch::Tensor& t) {
  auto c = t.to(torch::kFloat64).contiguous();
  return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

double cosine_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  return -dot(a, b) / std::sqrt(dot(a, a) * dot(b, b));
}

torch::Tensor unit_rows(torch::Tensor x) { return x / x.norm(2, -1, true); }

}  // namespace

TEST(CosineLoss, Examples) {
  auto a = torch::tensor({1.0, 0.0}, torch::kFloat64);
  EXPECT_NEAR(cosine_similarity_loss(a, torch::tensor({2.0, 0.0}, torch::kFloat64)).item<double>(), -1.0, 1e-12);
  EXPECT_NEAR(cosine_similarity_loss(a, torch::tensor({0.0, 3.0}, torch::kFloat64)).item<double>(), 0.0, 1e-12);
  EXPECT_NEAR(cosine_similarity_loss(a, torch::tensor({-1.0, 0.0}, torch::kFloat64)).item<double>(), 1.0, 1e-12);
  EXPECT_NEAR(cosine_similarity_loss(torch::tensor({1.0, 1.0}, torch::kFloat64), torch::tensor({1.0, 0.0}, torch::kFloat64)).item<double>(),
              -1.0 / std::sqrt(2.0), 1e-12);
}

TEST(CosineLoss, RandomPairsMatchOracleAndStayBounded) {
  torch::manual_seed(1);
  for (int t = 0; t < 50; ++t) {
    auto a = torch::randn({16}, torch::kFloat64);
    auto b = torch::randn({16}, torch::kFloat64);
    const double v = cosine_similarity_loss(a, b).item<double>();
    EXPECT_NEAR(v, cosine_oracle(to_vec(a), to_vec(b)), 1e-12);
    EXPECT_GE(v, -1.0 - 1e-12);
    EXPECT_LE(v, 1.0 + 1e-12);
    EXPECT_NEAR(cosine_similarity_loss(a * 3.5, b * 0.2).item<double>(), v, 1e-12);
  }
}

TEST(CosineLoss, BatchIsMeanOfPerSample) {
  auto a = torch::randn({5, 8}, torch::kFloat64);
  auto b = torch::randn({5, 8}, torch::kFloat64);
  double mean = 0.0;
  for (int i = 0; i < 5; ++i) mean += cosine_oracle(to_vec(a[i]), to_vec(b[i])) / 5.0;
  EXPECT_NEAR(cosine_similarity_loss(a, b).item<double>(), mean, 1e-12);
  EXPECT_EQ(cosine_similarity_loss_per_sample(a, b).sizes(), (std::vector<std::int64_t>{5}));
}

TEST(CosineLoss, ZeroNormThrows) {
  EXPECT_THROW(cosine_similarity_loss(torch::zeros({4}), torch::ones({4})), InvalidArgument);
  EXPECT_THROW(cosine_similarity_loss(torch::ones({4}), torch::zeros({4})), InvalidArgument);
  EXPECT_THROW(cosine_similarity_loss(torch::ones({4}), torch::ones({3})), InvalidArgument);
}

TEST(CosineLoss, TargetReceivesNoGradient) {
  auto a = torch::randn({3, 8}, torch::kFloat64).requires_grad_(true);
  auto b = torch::randn({3, 8}, torch::kFloat64).requires_grad_(true);
  cosine_similarity_loss(a, b).backward();
  EXPECT_TRUE(a.grad().defined());
  EXPECT_GT(a.grad().abs().sum().item<double>(), 0.0);
  EXPECT_FALSE(b.grad().defined());
}

TEST(CosineLoss, GradientMatchesFiniteDifferences) {
  torch::manual_seed(2);
  const double h = 1e-6;
  for (int t = 0; t < 10; ++t) {
    auto a = torch::randn({8}, torch::kFloat64);
    auto b = torch::randn({8}, torch::kFloat64);
    const auto av = to_vec(a);
    const auto bv = to_vec(b);
    std::vector<double> fd(8);
    for (int i = 0; i < 8; ++i) {
      auto plus = av;
      auto minus = av;
      plus[static_cast<std::size_t>(i)] += h;
      minus[static_cast<std::size_t>(i)] -= h;
      fd[static_cast<std::size_t>(i)] = (cosine_oracle(plus, bv) - cosine_oracle(minus, bv)) / (2.0 * h);
    }
    auto ag = a.clone().requires_grad_(true);
    cosine_similarity_loss(ag, b).backward();
    const auto autograd = to_vec(ag.grad());
    const auto closed = to_vec(cosine_similarity_loss_grad(a, b));
    double scale = 0.0;
    for (double g : fd) scale = std::max(scale, std::abs(g));
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_LT(std::abs(autograd[i] - fd[i]) / scale, 1e-4);
      EXPECT_LT(std::abs(closed[i] - fd[i]) / scale, 1e-4);
    }
  }
}

TEST(ClassificationLoss, MatchesLogSumExp) {
  torch::manual_seed(4);
  auto z = torch::randn({6, 5}, torch::kFloat64) * 3.0;
  auto y = torch::tensor({0, 4, 2, 2, 1, 3}, torch::kLong);
  double expected = 0.0;
  for (int i = 0; i < 6; ++i) {
    const auto row = to_vec(z[i]);
    double m = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - m);
    expected += (m + std::log(s) - row[static_cast<std::size_t>(y[i].item<std::int64_t>())]) / 6.0;
  }
  EXPECT_NEAR(classification_loss(z, y).item<double>(), expected, 1e-6);
  EXPECT_NEAR(classification_loss(torch::zeros({4}), 1), std::log(4.0), 1e-6);
}

TEST(ClassificationLoss, RejectsLabelsOutOfRange) {
  EXPECT_THROW(classification_loss(torch::zeros({3}), 3), InvalidArgument);
  EXPECT_THROW(classification_loss(torch::zeros({3}), -1), InvalidArgument);
  EXPECT_THROW(classification_loss(torch::zeros({2, 3}), torch::tensor({0, 5}, torch::kLong)), InvalidArgument);
}

TEST(InfoNce, MatchesManualComputation) {
  torch::manual_seed(5);
  auto q = torch::randn({3, 6}, torch::kFloat64);
  auto k = torch::randn({3, 6}, torch::kFloat64);
  auto n = torch::randn({4, 6}, torch::kFloat64);
  const double tau = 0.2;
  double expected = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto qi = to_vec(q[i]);
    std::vector<double> logits{-cosine_oracle(qi, to_vec(k[i])) / tau};
    for (int j = 0; j < 4; ++j) logits.push_back(-cosine_oracle(qi, to_vec(n[j])) / tau);
    double s = 0.0;
    for (double v : logits) s += std::exp(v);
    expected += (std::log(s) - logits[0]) / 3.0;
  }
  EXPECT_NEAR(infonce_loss(q, k, n, tau).item<double>(), expected, 1e-9);
  EXPECT_THROW(infonce_loss(q, k, torch::zeros({0, 6}, torch::kFloat64)), InvalidArgument);
  EXPECT_THROW(infonce_loss(q, k, n, 0.0), InvalidArgument);
}

TEST(TotalLoss, UnitWeightedSumAndSwitches) {
  const auto all = total_loss(-0.5, -0.25, -0.75, 1.5);
  EXPECT_DOUBLE_EQ(all.total, 0.0);
  const auto ce_only = total_loss(-0.5, -0.25, -0.75, 1.5, {false, false, false, true});
  EXPECT_DOUBLE_EQ(ce_only.total, 1.5);
  EXPECT_DOUBLE_EQ(ce_only.sim1, 0.0);
  const auto no_a = total_loss(-0.5, -0.25, std::numeric_limits<double>::quiet_NaN(), 1.0, {true, true, false, true});
  EXPECT_DOUBLE_EQ(no_a.total, -0.5 - 0.25 + 1.0);
  EXPECT_THROW(total_loss(std::numeric_limits<double>::quiet_NaN(), 0, 0, 0), NumericError);
  EXPECT_THROW(total_loss(0, 0, 0, std::numeric_limits<double>::infinity()), NumericError);
}

TEST(Cam, MatchesBruteForceLoop) {
  torch::manual_seed(6);
  auto f = torch::randn({2, 5, 3, 4}, torch::kFloat64);
  auto w = torch::randn({7, 5}, torch::kFloat64);
  auto classes = torch::tensor({6, 2}, torch::kLong);
  auto cam = compute_cam(f, w, classes);
  ASSERT_EQ(cam.sizes(), (std::vector<std::int64_t>{2, 3, 4}));
  for (int b = 0; b < 2; ++b) {
    const auto c = classes[b].item<std::int64_t>();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) {
        double s = 0.0;
        for (int k = 0; k < 5; ++k) s += w[c][k].item<double>() * f[b][k][i][j].item<double>();
        EXPECT_NEAR(cam[b][i][j].item<double>(), s, 1e-5);
      }
  }
  EXPECT_TRUE(torch::allclose(compute_cam(f[1], w, 2), cam[1]));
}

TEST(Cam, RejectsBadClassOrDim) {
  auto f = torch::randn({5, 3, 3});
  auto w = torch::randn({4, 5});
  EXPECT_THROW(compute_cam(f, w, 4), InvalidArgument);
  EXPECT_THROW(compute_cam(f, w, -1), InvalidArgument);
  EXPECT_THROW(compute_cam(f, torch::randn({4, 6}), 0), InvalidArgument);
}

TEST(Cam, NormalizeRangeAndConstantMaps) {
  auto m = normalize_cam(torch::tensor({{-2.0F, 0.0F}, {2.0F, 6.0F}}));
  EXPECT_TRUE(torch::allclose(m, torch::tensor({{0.0F, 0.25F}, {0.5F, 1.0F}})));
  EXPECT_EQ(normalize_cam(torch::full({3, 3}, 4.0F)).abs().sum().item<float>(), 0.0F);
  auto batch = normalize_cam(torch::randn({4, 5, 5}));
  for (int b = 0; b < 4; ++b) {
    EXPECT_FLOAT_EQ(batch[b].min().item<float>(), 0.0F);
    EXPECT_FLOAT_EQ(batch[b].max().item<float>(), 1.0F);
  }
}

TEST(Cam, MaskExtremes) {
  auto x = torch::rand({2, 3, 16, 16});
  EXPECT_TRUE(torch::equal(mask_input(x, torch::zeros({2, 4, 4})), x));
  EXPECT_EQ(mask_input(x, torch::ones({2, 4, 4})).abs().sum().item<float>(), 0.0F);
  EXPECT_EQ(mask_input(x[0], torch::zeros({4, 4})).sizes(), x[0].sizes());
}

TEST(Cam, MaskOnlyTouchesNeighbourhoodOfActiveCell) {
  auto x = torch::rand({1, 3, 32, 32});
  auto mask = torch::zeros({1, 4, 4});
  mask[0][0][0] = 1.0F;
  auto out = mask_input(x, mask);
  EXPECT_TRUE(torch::equal(out.index({Slice(), Slice(), Slice(16, 32), Slice()}),
                           x.index({Slice(), Slice(), Slice(16, 32), Slice()})));
  EXPECT_TRUE(torch::equal(out.index({Slice(), Slice(), Slice(), Slice(16, 32)}),
                           x.index({Slice(), Slice(), Slice(), Slice(16, 32)})));
  EXPECT_FALSE(torch::equal(out.index({Slice(), Slice(), Slice(0, 4), Slice(0, 4)}),
                            x.index({Slice(), Slice(), Slice(0, 4), Slice(0, 4)})));
}

TEST(Cam, UpsampleShape) {
  EXPECT_EQ(upsample_mask(torch::rand({3, 4, 2}), 64, 32).sizes(), (std::vector<std::int64_t>{3, 1, 64, 32}));
}

TEST(Cam, MultiStageMasksCombineByMaximum) {
  auto x = torch::ones({1, 1, 4, 4});
  auto first = torch::zeros({1, 4, 4});
  first[0][0][0] = 1.0F;
  int calls = 0;
  CamFn second = [&](const torch::Tensor& masked) {
    ++calls;
    EXPECT_EQ(masked[0][0][0][0].item<float>(), 0.0F);
    auto m = torch::zeros({1, 4, 4});
    m[0][3][3] = 1.0F;
    m[0][0][0] = 0.5F;  // lower than stage one; the max keeps 1
    return m;
  };
  EXPECT_TRUE(torch::equal(mask_input_stages(x, first, 1, second), mask_input(x, first)));
  EXPECT_EQ(calls, 0);
  auto out = mask_input_stages(x, first, 2, second);
  EXPECT_EQ(calls, 1);
  auto expected = torch::ones({1, 1, 4, 4});
  expected[0][0][0][0] = 0.0F;
  expected[0][0][3][3] = 0.0F;
  EXPECT_TRUE(torch::equal(out, expected));
  EXPECT_THROW(mask_input_stages(x, first, 0, second), InvalidArgument);
}

TEST(Queue, StartsWithSentinels) {
  AugmentedQueue q(4, 3);
  EXPECT_EQ(q.occupied(), 0);
  EXPECT_EQ(q.labels(), std::vector<std::int64_t>(4, AugmentedQueue::kSentinel));
  EXPECT_EQ(q.embeddings().abs().sum().item<float>(), 0.0F);
  EXPECT_FALSE(q.aggregate(0).has_value());
  EXPECT_FALSE(q.most_recent(0).has_value());
  EXPECT_THROW(AugmentedQueue(0, 3), InvalidArgument);
}

TEST(Queue, FifoEviction) {
  AugmentedQueue q(3, 2);
  for (std::int64_t i = 0; i < 5; ++i) q.push(unit_rows(torch::tensor({1.0F, static_cast<float>(i)})), i);
  EXPECT_EQ(q.occupied(), 3);
  EXPECT_EQ(q.head(), 2);
  EXPECT_EQ(q.labels(), (std::vector<std::int64_t>{3, 4, 2}));
  EXPECT_FALSE(q.aggregate(0).has_value());
  EXPECT_TRUE(q.aggregate(2).has_value());
}

TEST(Queue, PushValidation) {
  AugmentedQueue q(4, 2);
  EXPECT_THROW(q.push(torch::tensor({2.0F, 0.0F}), 0), InvalidArgument);
  EXPECT_THROW(q.push(torch::tensor({1.0F, 0.0F}), -1), InvalidArgument);
  EXPECT_THROW(q.push(torch::tensor({1.0F, 0.0F, 0.0F}), 0), InvalidArgument);
  EXPECT_NO_THROW(q.push(torch::tensor({1.0005F, 0.0F}), 0));
}

TEST(Queue, RandomPushesMatchReferenceModel) {
  std::mt19937_64 gen(8);
  torch::manual_seed(8);
  const std::int64_t capacity = 16;
  const std::int64_t dim = 5;
  AugmentedQueue q(capacity, dim);
  std::deque<std::pair<std::vector<double>, std::int64_t>> reference;
  for (int step = 0; step < 30; ++step) {
    const std::int64_t b = std::uniform_int_distribution<std::int64_t>(1, 6)(gen);
    auto e = unit_rows(torch::randn({b, dim}));
    std::vector<std::int64_t> labels;
    for (std::int64_t i = 0; i < b; ++i) labels.push_back(std::uniform_int_distribution<std::int64_t>(0, 4)(gen));
    q.push(e, labels);
    for (std::int64_t i = 0; i < b; ++i) {
      reference.emplace_back(to_vec(e[i]), labels[static_cast<std::size_t>(i)]);
      if (static_cast<std::int64_t>(reference.size()) > capacity) reference.pop_front();
    }
    EXPECT_EQ(q.occupied(), static_cast<std::int64_t>(reference.size()));

    std::map<std::int64_t, std::int64_t> counts;
    for (auto l : q.labels())
      if (l >= 0) ++counts[l];
    std::map<std::int64_t, std::int64_t> ref_counts;
    for (const auto& [v, l] : reference) ++ref_counts[l];
    EXPECT_EQ(counts, ref_counts);

    for (std::int64_t c = 0; c < 5; ++c) {
      std::vector<double> mean(static_cast<std::size_t>(dim), 0.0);
      std::int64_t n = 0;
      const std::vector<double>* latest = nullptr;
      for (const auto& [v, l] : reference) {
        if (l != c) continue;
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += v[k];
        ++n;
        latest = &v;
      }
      const auto agg = q.aggregate(c);
      const auto recent = q.most_recent(c);
      ASSERT_EQ(agg.has_value(), n > 0);
      ASSERT_EQ(recent.has_value(), n > 0);
      if (n == 0) continue;
      const auto got = to_vec(*agg);
      const auto got_recent = to_vec(*recent);
      for (std::size_t k = 0; k < mean.size(); ++k) {
        EXPECT_NEAR(got[k], mean[k] / static_cast<double>(n), 1e-6);
        EXPECT_NEAR(got_recent[k], (*latest)[k], 1e-7);
      }
    }
  }
}

TEST(Queue, BatchLookupsAgreeWithScalarOnes) {
  AugmentedQueue q(8, 3);
  torch::manual_seed(9);
  q.push(unit_rows(torch::randn({6, 3})), {0, 1, 0, 2, 1, 0});
  auto [targets, valid] = q.aggregate_batch({0, 3, 1});
  EXPECT_TRUE(valid[0].item<bool>());
  EXPECT_FALSE(valid[1].item<bool>());
  EXPECT_EQ(targets[1].abs().sum().item<float>(), 0.0F);
  EXPECT_TRUE(torch::allclose(targets[0], *q.aggregate(0)));
  EXPECT_TRUE(torch::allclose(targets[2], *q.aggregate(1)));
  auto [recent, rvalid] = q.most_recent_batch({0, 2});
  EXPECT_TRUE(rvalid.all().item<bool>());
  EXPECT_TRUE(torch::equal(recent[0], *q.most_recent(0)));
  EXPECT_TRUE(torch::equal(recent[1], *q.most_recent(2)));
}

TEST(Queue, CopiesAreIndependentSnapshots) {
  AugmentedQueue q(4, 2);
  q.push(torch::tensor({1.0F, 0.0F}), 1);
  AugmentedQueue snap = q;
  q.push(torch::tensor({0.0F, 1.0F}), 1);
  EXPECT_EQ(snap.occupied(), 1);
  EXPECT_TRUE(torch::equal(*snap.aggregate(1), torch::tensor({1.0F, 0.0F})));
}

TEST(Queue, SnapshotRoundTrip) {
  test_support::TempDir dir("queue");
  AugmentedQueue q(5, 2);
  q.push(unit_rows(torch::ones({3, 2})), {4, 0, 4});
  write_queue_snapshot(q, dir / "queue.csv", dir / "queue.bin");
  EXPECT_EQ(read_queue_snapshot_labels(dir / "queue.csv"), (std::vector<std::int64_t>{4, 0, 4, -1, -1}));
  EXPECT_EQ(std::filesystem::file_size(dir / "queue.bin"), 5u * 2u * sizeof(float));

  AugmentedQueue r(5, 2);
  r.restore(q.embeddings(), q.labels(), q.head());
  EXPECT_EQ(r.labels(), q.labels());
  EXPECT_EQ(r.head(), 3);
  EXPECT_THROW(r.restore(torch::zeros({4, 2}), q.labels(), 0), InvalidArgument);
}
