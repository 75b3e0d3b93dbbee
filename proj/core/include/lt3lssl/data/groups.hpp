#pragma once

#include "lt3lssl/data/profile.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace lt3lssl::data {

enum class Group { kMany = 0, kMedium = 1, kFew = 2 };

std::string_view group_name(Group g);

struct GroupSplit {
  std::vector<Group> assignment;
  std::int64_t hi = 100;
  std::int64_t lo = 20;

  std::int64_t num_classes() const { return static_cast<std::int64_t>(assignment.size()); }
  Group of(std::int64_t class_index) const;
  std::array<std::int64_t, 3> sizes() const;
};

// Many: count > hi, Medium: lo <= count <= hi, Few: count < lo.
GroupSplit split_class_groups(const LongTailProfile& profile);

// Fixed split by class index: [0, head) Many, [head, head+medium) Medium,
// remainder Few. split_fixed(10, 3, 4) is the 3/4/3 split used for the
// 10-class concatenated dataset.
GroupSplit split_fixed(std::int64_t num_classes, std::int64_t head, std::int64_t medium);

enum class GroupScheme { kThresholds, kFixed343 };

GroupSplit make_groups(const LongTailProfile& profile, GroupScheme scheme);

}  // namespace lt3lssl::data
