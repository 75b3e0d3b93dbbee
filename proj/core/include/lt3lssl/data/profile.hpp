#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lt3lssl::data {

// Per-class training-sample counts of a long-tailed split.
//
// Profiles produced by build_longtail_profile() decay exponentially from
// n_max (class 0) to round(n_max / beta) (class C-1). Profiles read from
// arbitrary datasets only guarantee positive counts; beta and n_max are then
// recovered as max/min and max.
struct LongTailProfile {
  std::int64_t num_classes = 0;
  std::vector<std::int64_t> counts;
  double beta = 1.0;
  std::int64_t n_max = 0;

  std::int64_t total() const;
  // N_c / sum_j N_j
  std::vector<double> priors() const;

  static LongTailProfile from_counts(std::vector<std::int64_t> counts);
};

// counts[c] = round(n_max * beta^(-c/(C-1))).
LongTailProfile build_longtail_profile(std::int64_t num_classes, std::int64_t n_max, double beta);

// CSV with header `class_index,count`.
void write_profile_csv(const std::filesystem::path& path, const LongTailProfile& profile);
LongTailProfile read_profile_csv(const std::filesystem::path& path);

}  // namespace lt3lssl::data
