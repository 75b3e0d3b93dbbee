#include "lt3lssl/data/longtail.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/common/seed.hpp"

#include <algorithm>
#include <string>

namespace lt3lssl::data {

namespace {

// Source indices of each class, in source order.
std::vector<std::vector<std::int64_t>> indices_by_class(const LabeledImageSet& source, std::int64_t num_classes) {
  std::vector<std::vector<std::int64_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::int64_t i = 0; i < source.size(); ++i) {
    const auto y = source.labels[static_cast<std::size_t>(i)];
    if (y >= 0 && y < num_classes) by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  return by_class;
}

LabeledImageSet take_per_class(const LabeledImageSet& source, const std::vector<std::int64_t>& quota,
                               std::uint64_t seed, bool strict) {
  source.validate();
  const auto num_classes = static_cast<std::int64_t>(quota.size());
  auto by_class = indices_by_class(source, num_classes);
  std::vector<std::int64_t> chosen;
  for (std::int64_t c = 0; c < num_classes; ++c) {
    auto& pool = by_class[static_cast<std::size_t>(c)];
    const auto want = quota[static_cast<std::size_t>(c)];
    if (strict && static_cast<std::int64_t>(pool.size()) < want) {
      throw DataError("class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                      " samples but the profile needs " + std::to_string(want));
    }
    auto rng = make_rng({seed, tag(Stream::kSubsample), static_cast<std::uint64_t>(c)});
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto n = std::min<std::int64_t>(want, static_cast<std::int64_t>(pool.size()));
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + n);
  }
  std::sort(chosen.begin(), chosen.end());
  return source.select(chosen);
}

}  // namespace

LabeledImageSet subsample_longtail(const LabeledImageSet& source, const LongTailProfile& profile,
                                   std::uint64_t seed) {
  return take_per_class(source, profile.counts, seed, /*strict=*/true);
}

LabeledImageSet balanced_subset(const LabeledImageSet& source, std::int64_t num_classes, std::int64_t per_class,
                                std::uint64_t seed) {
  std::vector<std::int64_t> quota(static_cast<std::size_t>(num_classes), per_class);
  return take_per_class(source, quota, seed, /*strict=*/false);
}

}  // namespace lt3lssl::data
