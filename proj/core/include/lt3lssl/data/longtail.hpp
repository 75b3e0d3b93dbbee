#pragma once

#include "lt3lssl/data/image_set.hpp"
#include "lt3lssl/data/profile.hpp"

#include <cstdint>

namespace lt3lssl::data {

// Keeps exactly profile.counts[c] samples of each class c, chosen by a seeded
// shuffle. Output preserves source order. Throws DataError naming the first
// class with too few samples.
LabeledImageSet subsample_longtail(const LabeledImageSet& source, const LongTailProfile& profile,
                                   std::uint64_t seed);

// At most per_class samples of each class (seeded), e.g. a balanced probe set.
LabeledImageSet balanced_subset(const LabeledImageSet& source, std::int64_t num_classes,
                                std::int64_t per_class, std::uint64_t seed);

}  // namespace lt3lssl::data
