#include "lt3lssl/data/catalog.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/common/seed.hpp"
#include "lt3lssl/data/longtail.hpp"
#include "lt3lssl/data/sources.hpp"
#include "lt3lssl/data/synthetic.hpp"

namespace lt3lssl::data {
namespace {

constexpr std::int64_t kSyntheticTestPerClass = 100;
constexpr std::int64_t kRealConcatTestPerClass = 800;

std::uint64_t pool_seed(const DatasetSpec& spec, std::uint64_t which) {
  return derive_seed({spec.seed, tag(Stream::kSynthetic), which});
}

bool want_real(const DatasetSpec& spec, const std::optional<std::filesystem::path>& root) {
  if (spec.source == "synthetic") return false;
  if (spec.source == "real") {
    if (!root) throw DataError("source = real but LT3LSSL_DATA_ROOT is not set");
    return true;
  }
  if (spec.source != "auto") throw InvalidArgument("unknown data source '" + spec.source + "'");
  return root.has_value();
}

template <typename T>
T require(std::optional<T> v, const std::string& what, const std::filesystem::path& root) {
  if (!v) throw DataError(what + " not found under " + root.string());
  return std::move(*v);
}

GroupSplit resolve_groups(const DatasetSpec& spec, const LongTailProfile& profile, bool concat) {
  if (spec.groups == "thresholds") return make_groups(profile, GroupScheme::kThresholds);
  if (spec.groups == "fixed343") return make_groups(profile, GroupScheme::kFixed343);
  if (spec.groups != "auto") throw InvalidArgument("unknown group scheme '" + spec.groups + "'");
  return make_groups(profile, concat ? GroupScheme::kFixed343 : GroupScheme::kThresholds);
}

void load_concat(const DatasetSpec& spec, const std::optional<std::filesystem::path>& root, DatasetBundle& b) {
  b.num_classes = 10;
  b.concat = true;
  const auto n_max = spec.n_max > 0 ? spec.n_max : default_n_max(spec.name);
  b.profile = build_longtail_profile(10, n_max, spec.beta);
  LabeledImageSet digits_train, digits_test, objects_train, objects_test;
  std::int64_t test_per_class = spec.test_per_class;
  if (want_real(spec, root) && (spec.source == "real" || (load_mnist(*root, true) && load_cifar10(*root, true)))) {
    digits_train = require(load_mnist(*root, true), "MNIST train", *root);
    digits_test = require(load_mnist(*root, false), "MNIST test", *root);
    objects_train = require(load_cifar10(*root, true), "CIFAR-10 train", *root);
    objects_test = require(load_cifar10(*root, false), "CIFAR-10 test", *root);
    if (test_per_class <= 0) test_per_class = kRealConcatTestPerClass;
  } else {
    b.synthetic = true;
    if (test_per_class <= 0) test_per_class = kSyntheticTestPerClass;
    digits_train = synthetic_digits(n_max, pool_seed(spec, 0));
    objects_train = synthetic_objects(10, n_max, pool_seed(spec, 1));
    digits_test = synthetic_digits(test_per_class, pool_seed(spec, 2));
    objects_test = synthetic_objects(10, test_per_class, pool_seed(spec, 3));
  }
  auto train = build_mnist_cifar_lt(digits_train, objects_train, b.profile, spec.seed);
  if (spec.oracle) train = make_oracle_train(train, spec.seed);
  b.train = train.samples();
  auto balanced = build_longtail_profile(10, test_per_class, 1.0);
  b.test = build_mnist_cifar_lt(digits_test, objects_test, balanced, derive_seed({spec.seed, 1})).samples();
}

void load_cifar_lt(const DatasetSpec& spec, const std::optional<std::filesystem::path>& root, DatasetBundle& b,
                   std::int64_t num_classes) {
  b.num_classes = num_classes;
  const auto n_max = spec.n_max > 0 ? spec.n_max : default_n_max(spec.name);
  b.profile = build_longtail_profile(num_classes, n_max, spec.beta);
  auto loader = num_classes == 10 ? load_cifar10 : load_cifar100;
  const std::string label = num_classes == 10 ? "CIFAR-10" : "CIFAR-100";
  LabeledImageSet pool, test;
  if (want_real(spec, root) && (spec.source == "real" || loader(*root, true))) {
    pool = require(loader(*root, true), label + " train", *root);
    test = require(loader(*root, false), label + " test", *root);
    if (spec.test_per_class > 0) test = balanced_subset(test, num_classes, spec.test_per_class, spec.seed);
  } else {
    b.synthetic = true;
    const auto per_class = spec.test_per_class > 0 ? spec.test_per_class : kSyntheticTestPerClass;
    pool = synthetic_objects(num_classes, n_max, pool_seed(spec, 1));
    test = synthetic_objects(num_classes, per_class, pool_seed(spec, 3));
  }
  b.train = subsample_longtail(pool, b.profile, spec.seed);
  b.test = std::move(test);
}

void load_manifest_set(const DatasetSpec& spec, DatasetBundle& b) {
  if (spec.manifest.empty() || spec.test_manifest.empty())
    throw InvalidArgument("dataset 'manifest' needs both data.manifest and data.test_manifest");
  b.train = read_manifest(spec.manifest);
  b.test = read_manifest(spec.test_manifest);
  b.num_classes = std::max(b.train.max_label(), b.test.max_label()) + 1;
  b.profile = LongTailProfile::from_counts(b.train.class_counts(b.num_classes));
  b.concat = b.train.channels() == 3 && b.train.height() == ConcatDataset::kHeight &&
             b.train.width() == ConcatDataset::kWidth;
}

}  // namespace

std::int64_t default_n_max(const std::string& name) {
  if (name == "cifar100-lt") return 500;
  if (name == "mnist-cifar-lt" || name == "cifar10-lt") return 5000;
  throw InvalidArgument("unknown dataset '" + name + "'");
}

DatasetBundle load_dataset(const DatasetSpec& spec, const std::optional<std::filesystem::path>& data_root) {
  DatasetBundle b;
  b.spec = spec;
  if (spec.oracle && spec.name != "mnist-cifar-lt") throw InvalidArgument("the oracle variant needs mnist-cifar-lt");
  if (spec.name == "mnist-cifar-lt") {
    load_concat(spec, data_root, b);
  } else if (spec.name == "cifar10-lt") {
    load_cifar_lt(spec, data_root, b, 10);
  } else if (spec.name == "cifar100-lt") {
    load_cifar_lt(spec, data_root, b, 100);
  } else if (spec.name == "manifest") {
    load_manifest_set(spec, b);
  } else {
    throw InvalidArgument("unknown dataset '" + spec.name + "'");
  }
  b.groups = resolve_groups(spec, b.profile, b.concat);
  return b;
}

}  // namespace lt3lssl::data
