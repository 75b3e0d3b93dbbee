#include "fixtures.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/data/augment.hpp"
#include "lt3lssl/data/catalog.hpp"
#include "lt3lssl/data/groups.hpp"
#include "lt3lssl/data/longtail.hpp"
#include "lt3lssl/data/mnist_cifar.hpp"
#include "lt3lssl/data/profile.hpp"
#include "lt3lssl/data/sources.hpp"
#include "lt3lssl/data/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <random>

using namespace lt3lssl;
using namespace lt3lssl::data;
using torch::indexing::Slice;

namespace {

// Long-double evaluation of the exponential profile, kept apart from the
// library's implementation.
std::int64_t profile_oracle(std::int64_t c, std::int64_t num_classes, std::int64_t n_max, double beta) {
  const long double exponent = -static_cast<long double>(c) / static_cast<long double>(num_classes - 1);
  return std::llround(static_cast<long double>(n_max) * std::pow(static_cast<long double>(beta), exponent));
}

ConcatDataset small_concat(const LongTailProfile& profile, std::uint64_t seed = 0) {
  // Digit of class c is constant (c + 1) / 20, object of class c constant (c + 1) / 10.
  auto digits = test_support::constant_images(10, 6, 1, 28, 28, [](auto c) { return (c + 1) / 20.0; });
  auto objects = test_support::constant_images(10, 6, 3, 32, 32, [](auto c) { return (c + 1) / 10.0; });
  return build_mnist_cifar_lt(digits, objects, profile, seed);
}

}  // namespace

TEST(Profile, EndpointsAtBeta100) {
  const auto p = build_longtail_profile(10, 5000, 100.0);
  ASSERT_EQ(p.counts.size(), 10u);
  EXPECT_EQ(p.counts.front(), 5000);
  EXPECT_EQ(p.counts.back(), 50);
}

TEST(Profile, SecondClassMatchesClosedForm) {
  const auto p = build_longtail_profile(10, 5000, 100.0);
  const auto expected = profile_oracle(1, 10, 5000, 100.0);
  EXPECT_EQ(expected, 2997);
  EXPECT_EQ(p.counts[1], expected);
  for (std::int64_t c = 0; c < 10; ++c) EXPECT_EQ(p.counts[static_cast<std::size_t>(c)], profile_oracle(c, 10, 5000, 100.0));
}

TEST(Profile, BalancedWhenBetaIsOne) {
  const auto p = build_longtail_profile(10, 5000, 1.0);
  for (auto n : p.counts) EXPECT_EQ(n, 5000);
  EXPECT_EQ(p.total(), 50000);
}

TEST(Profile, RejectsBadArguments) {
  EXPECT_THROW(build_longtail_profile(10, 5000, 0.5), InvalidArgument);
  EXPECT_THROW(build_longtail_profile(10, 10, 100.0), InvalidArgument);  // tail rounds to 0
  EXPECT_THROW(build_longtail_profile(1, 10, 2.0), InvalidArgument);
  EXPECT_THROW(build_longtail_profile(10, 0, 1.0), InvalidArgument);
}

TEST(Profile, InvariantsOnRandomParameters) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::int64_t c = std::uniform_int_distribution<std::int64_t>(2, 120)(gen);
    const std::int64_t n_max = std::uniform_int_distribution<std::int64_t>(50, 6000)(gen);
    const double beta = std::uniform_real_distribution<double>(1.0, 50.0)(gen);
    const auto p = build_longtail_profile(c, n_max, beta);
    EXPECT_EQ(p.counts.front(), n_max);
    EXPECT_EQ(p.counts.back(), std::llround(static_cast<double>(n_max) / beta));
    for (std::size_t k = 1; k < p.counts.size(); ++k) EXPECT_LE(p.counts[k], p.counts[k - 1]);
    for (auto n : p.counts) EXPECT_GE(n, 1);
  }
}

TEST(Profile, CsvRoundTrip) {
  test_support::TempDir dir("profile");
  const auto p = build_longtail_profile(7, 300, 10.0);
  write_profile_csv(dir / "profile.csv", p);
  const auto q = read_profile_csv(dir / "profile.csv");
  EXPECT_EQ(q.counts, p.counts);
  EXPECT_EQ(q.n_max, p.n_max);
}

TEST(Subsample, ExactPerClassCardinalities) {
  auto source = test_support::constant_images(10, 60, 3, 4, 4, [](auto c) { return c / 10.0; });
  const auto p = build_longtail_profile(10, 60, 20.0);
  const auto out = subsample_longtail(source, p, 3);
  EXPECT_EQ(out.class_counts(10), p.counts);
  EXPECT_EQ(out.size(), std::accumulate(p.counts.begin(), p.counts.end(), std::int64_t{0}));
}

TEST(Subsample, DeterministicPerSeed) {
  auto source = test_support::constant_images(10, 60, 1, 2, 2, [](auto) { return 0.0; });
  const auto p = build_longtail_profile(10, 60, 20.0);
  EXPECT_EQ(subsample_longtail(source, p, 11).sample_ids, subsample_longtail(source, p, 11).sample_ids);
  EXPECT_NE(subsample_longtail(source, p, 11).sample_ids, subsample_longtail(source, p, 12).sample_ids);
}

TEST(Subsample, BalancedProfileKeepsWholeSource) {
  auto source = test_support::constant_images(5, 8, 1, 2, 2, [](auto) { return 0.0; });
  const auto out = subsample_longtail(source, build_longtail_profile(5, 8, 1.0), 0);
  EXPECT_EQ(out.size(), source.size());
}

TEST(Subsample, InsufficientClassNamesTheClass) {
  auto source = test_support::constant_images(10, 5, 1, 2, 2, [](auto) { return 0.0; });
  source = source.select(std::vector<std::int64_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 15, 16, 17, 18, 19,
                                                   20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 34, 35, 36, 37,
                                                   38, 39, 40, 41, 42, 44, 45, 46, 47, 48, 49});
  try {
    subsample_longtail(source, build_longtail_profile(10, 5, 1.0), 0);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("class 3"), std::string::npos) << e.what();
  }
}

TEST(MnistCifar, GeometryAndChannelReplication) {
  const auto p = build_longtail_profile(10, 6, 6.0);
  const auto d = small_concat(p);
  const auto& s = d.samples();
  EXPECT_EQ(s.images.sizes(), (std::vector<std::int64_t>{p.total(), 3, 64, 32}));
  auto top = s.images.index({Slice(), Slice(), Slice(0, 32), Slice()});
  EXPECT_TRUE(torch::equal(top.select(1, 0), top.select(1, 1)));
  EXPECT_TRUE(torch::equal(top.select(1, 0), top.select(1, 2)));
  EXPECT_EQ(s.class_counts(10), p.counts);
}

TEST(MnistCifar, PartsComeFromTheSameJointClassAndDigitsArePadded) {
  const auto d = small_concat(build_longtail_profile(10, 6, 6.0));
  const auto& s = d.samples();
  for (std::int64_t i = 0; i < s.size(); ++i) {
    const auto c = s.labels[static_cast<std::size_t>(i)];
    auto img = s.images[i];
    EXPECT_FLOAT_EQ(img.index({0, 16, 16}).item<float>(), static_cast<float>((c + 1) / 20.0));
    EXPECT_FLOAT_EQ(img.index({1, 48, 16}).item<float>(), static_cast<float>((c + 1) / 10.0));
    // Two-pixel zero margin around the 28x28 digit.
    EXPECT_EQ(img.index({Slice(), Slice(0, 2), Slice()}).abs().sum().item<float>(), 0.0F);
    EXPECT_EQ(img.index({Slice(), Slice(30, 32), Slice()}).abs().sum().item<float>(), 0.0F);
    EXPECT_EQ(img.index({Slice(), Slice(0, 32), Slice(0, 2)}).abs().sum().item<float>(), 0.0F);
  }
}

TEST(MnistCifar, RejectsWrongClassCount) {
  auto digits = test_support::constant_images(10, 6, 1, 28, 28, [](auto) { return 0.0; });
  auto objects = test_support::constant_images(10, 6, 3, 32, 32, [](auto) { return 0.0; });
  EXPECT_THROW(build_mnist_cifar_lt(digits, objects, build_longtail_profile(9, 6, 1.0), 0), InvalidArgument);
}

TEST(MnistCifar, EvalVariantsTouchOnlyTheirHalf) {
  const auto d = small_concat(build_longtail_profile(10, 6, 3.0));
  const auto& x = d.samples().images;
  const auto full = make_eval_variant(d, EvalVariant::kFull, 5);
  EXPECT_TRUE(torch::equal(full.samples().images, x));

  const auto mnist = make_eval_variant(d, EvalVariant::kMnistOnly, 5).samples().images;
  EXPECT_TRUE(torch::equal(mnist.index({Slice(), Slice(), Slice(0, 32)}), x.index({Slice(), Slice(), Slice(0, 32)})));
  EXPECT_FALSE(torch::equal(mnist.index({Slice(), Slice(), Slice(32, 64)}), x.index({Slice(), Slice(), Slice(32, 64)})));

  const auto cifar = make_eval_variant(d, EvalVariant::kCifarOnly, 5).samples().images;
  EXPECT_TRUE(torch::equal(cifar.index({Slice(), Slice(), Slice(32, 64)}), x.index({Slice(), Slice(), Slice(32, 64)})));
  auto fill = cifar.index({Slice(), Slice(), Slice(0, 32)});
  EXPECT_GE(fill.min().item<float>(), 0.0F);
  EXPECT_LE(fill.max().item<float>(), 1.0F);
  EXPECT_TRUE(torch::equal(cifar, make_eval_variant(d, EvalVariant::kCifarOnly, 5).samples().images));
  EXPECT_FALSE(torch::equal(cifar, make_eval_variant(d, EvalVariant::kCifarOnly, 6).samples().images));

  const auto zero = make_eval_variant(d, EvalVariant::kCifarOnly, 5, FillPolicy::kZero).samples().images;
  EXPECT_EQ(zero.index({Slice(), Slice(), Slice(0, 32)}).abs().sum().item<float>(), 0.0F);
  EXPECT_THROW(parse_variant("both"), InvalidArgument);
}

TEST(MnistCifar, OracleRandomizesDigitsPerSample) {
  const auto d = small_concat(build_longtail_profile(10, 6, 3.0));
  const auto o = make_oracle_train(d, 9).samples();
  const auto& x = d.samples();
  EXPECT_EQ(o.labels, x.labels);
  EXPECT_TRUE(torch::equal(o.images.index({Slice(), Slice(), Slice(32, 64)}),
                           x.images.index({Slice(), Slice(), Slice(32, 64)})));
  EXPECT_FALSE(torch::equal(o.images[0].index({Slice(), Slice(0, 32)}), o.images[1].index({Slice(), Slice(0, 32)})));
}

TEST(Groups, ThresholdsApplied) {
  const auto g = split_class_groups(LongTailProfile::from_counts({150, 50, 5}));
  EXPECT_EQ(g.assignment, (std::vector<Group>{Group::kMany, Group::kMedium, Group::kFew}));
  const auto edges = split_class_groups(LongTailProfile::from_counts({101, 100, 20, 19}));
  EXPECT_EQ(edges.assignment, (std::vector<Group>{Group::kMany, Group::kMedium, Group::kMedium, Group::kFew}));
  const auto all_many = split_class_groups(build_longtail_profile(10, 5000, 1.0));
  EXPECT_EQ(all_many.sizes()[0], 10);
}

TEST(Groups, Cifar100ProfileMapsPerThresholds) {
  const auto p = build_longtail_profile(100, 500, 100.0);
  const auto g = split_class_groups(p);
  ASSERT_EQ(g.num_classes(), 100);
  for (std::int64_t c = 0; c < 100; ++c) {
    const auto n = profile_oracle(c, 100, 500, 100.0);
    const auto expected = n > 100 ? Group::kMany : (n >= 20 ? Group::kMedium : Group::kFew);
    EXPECT_EQ(g.of(c), expected) << "class " << c;
  }
}

TEST(Groups, FixedSplitFor10Classes) {
  const auto g = make_groups(build_longtail_profile(10, 5000, 1.0), GroupScheme::kFixed343);
  EXPECT_EQ(g.sizes(), (std::array<std::int64_t, 3>{3, 4, 3}));
  EXPECT_EQ(g.of(2), Group::kMany);
  EXPECT_EQ(g.of(3), Group::kMedium);
  EXPECT_EQ(g.of(7), Group::kFew);
}

TEST(Augment, IdentityPipelineReturnsInput) {
  auto image = torch::rand({3, 32, 32});
  auto [x, xp] = two_view_augment(image, AugmentationPipeline::identity(), 1);
  EXPECT_TRUE(torch::equal(x, image));
  EXPECT_TRUE(torch::equal(xp, image));
}

TEST(Augment, DefaultPipelineIsReproducibleAndBounded) {
  auto image = torch::rand({3, 64, 32});
  const auto pipeline = AugmentationPipeline::moco_v2();
  auto [x1, y1] = two_view_augment(image, pipeline, 42);
  auto [x2, y2] = two_view_augment(image, pipeline, 42);
  EXPECT_TRUE(torch::equal(x1, x2));
  EXPECT_TRUE(torch::equal(y1, y2));
  EXPECT_FALSE(torch::equal(x1, y1));
  EXPECT_EQ(x1.sizes(), image.sizes());
  for (int s = 0; s < 20; ++s) {
    auto [a, b] = two_view_augment(image, pipeline, static_cast<std::uint64_t>(s));
    EXPECT_GE(a.min().item<float>(), 0.0F);
    EXPECT_LE(a.max().item<float>(), 1.0F);
    EXPECT_GE(b.min().item<float>(), 0.0F);
    EXPECT_LE(b.max().item<float>(), 1.0F);
  }
}

TEST(Augment, PipelineTextRoundTrip) {
  const auto p = AugmentationPipeline::moco_v2();
  const auto q = AugmentationPipeline::parse(p.to_string());
  EXPECT_EQ(q.to_string(), p.to_string());
  EXPECT_THROW(AugmentationPipeline::parse("warp:1"), InvalidArgument);
}

TEST(Augment, BatchViewsFollowIndicesAndAreOrderIndependent) {
  auto data = test_support::constant_images(4, 3, 3, 8, 8, [](auto c) { return c / 4.0; });
  const std::vector<std::int64_t> idx{5, 2, 7};
  const auto b = make_two_view_batch(data, idx, AugmentationPipeline::cifar(), 3, 1);
  EXPECT_EQ(b.x.size(0), 3);
  EXPECT_EQ(b.x_prime.sizes(), b.x.sizes());
  EXPECT_EQ(b.sample_ids, (std::vector<std::int64_t>{5, 2, 7}));
  const std::vector<std::int64_t> reversed{7, 2, 5};
  const auto r = make_two_view_batch(data, reversed, AugmentationPipeline::cifar(), 3, 1);
  EXPECT_TRUE(torch::equal(b.x[0], r.x[2]));
  EXPECT_TRUE(torch::equal(b.x_prime[2], r.x_prime[0]));
  EXPECT_EQ(b.labels[1].item<std::int64_t>(), data.labels[2]);
}

TEST(Sources, ManifestRoundTrip) {
  test_support::TempDir dir("manifest");
  auto data = test_support::constant_images(3, 2, 3, 5, 4, [](auto c) { return c / 2.0; });
  write_manifest(dir.path(), data, "m");
  const auto back = read_manifest(dir / "m.csv");
  EXPECT_EQ(back.labels, data.labels);
  EXPECT_EQ(back.sample_ids, data.sample_ids);
  EXPECT_TRUE(torch::allclose(back.images, data.images, 0.0, 1.0 / 255.0));
}

TEST(Synthetic, ShapesLabelsAndDeterminism) {
  const auto digits = synthetic_digits(3, 1);
  EXPECT_EQ(digits.images.sizes(), (std::vector<std::int64_t>{30, 1, 28, 28}));
  EXPECT_EQ(digits.class_counts(10), std::vector<std::int64_t>(10, 3));
  const auto objects = synthetic_objects(20, 2, 1);
  EXPECT_EQ(objects.images.sizes(), (std::vector<std::int64_t>{40, 3, 32, 32}));
  EXPECT_TRUE(torch::equal(objects.images, synthetic_objects(20, 2, 1).images));
  EXPECT_GE(objects.images.min().item<float>(), 0.0F);
  EXPECT_LE(objects.images.max().item<float>(), 1.0F);
}

TEST(Catalog, SyntheticMnistCifarBundle) {
  DatasetSpec spec;
  spec.name = "mnist-cifar-lt";
  spec.source = "synthetic";
  spec.n_max = 40;
  spec.beta = 10.0;
  spec.test_per_class = 4;
  const auto b = load_dataset(spec, std::nullopt);
  EXPECT_TRUE(b.concat);
  EXPECT_TRUE(b.synthetic);
  EXPECT_EQ(b.train.class_counts(10), b.profile.counts);
  EXPECT_EQ(b.test.class_counts(10), std::vector<std::int64_t>(10, 4));
  EXPECT_EQ(b.groups.sizes(), (std::array<std::int64_t, 3>{3, 4, 3}));
  EXPECT_THROW(load_dataset([] {
                 DatasetSpec s;
                 s.name = "imagenet-lt";
                 return s;
               }(),
                            std::nullopt),
               InvalidArgument);
}
