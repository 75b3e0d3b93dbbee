#include "lt3lssl/data/groups.hpp"

#include "lt3lssl/common/error.hpp"

#include <string>

namespace lt3lssl::data {

std::string_view group_name(Group g) {
  switch (g) {
    case Group::kMany: return "Many";
    case Group::kMedium: return "Medium";
    case Group::kFew: return "Few";
  }
  return "?";
}

Group GroupSplit::of(std::int64_t class_index) const {
  if (class_index < 0 || class_index >= num_classes()) {
    throw InvalidArgument("class " + std::to_string(class_index) + " outside group split");
  }
  return assignment[static_cast<std::size_t>(class_index)];
}

std::array<std::int64_t, 3> GroupSplit::sizes() const {
  std::array<std::int64_t, 3> n{0, 0, 0};
  for (auto g : assignment) ++n[static_cast<std::size_t>(g)];
  return n;
}

GroupSplit split_class_groups(const LongTailProfile& profile) {
  GroupSplit split;
  split.assignment.reserve(profile.counts.size());
  for (auto count : profile.counts) {
    if (count > split.hi) {
      split.assignment.push_back(Group::kMany);
    } else if (count >= split.lo) {
      split.assignment.push_back(Group::kMedium);
    } else {
      split.assignment.push_back(Group::kFew);
    }
  }
  return split;
}

GroupSplit split_fixed(std::int64_t num_classes, std::int64_t head, std::int64_t medium) {
  if (head < 0 || medium < 0 || head + medium > num_classes) {
    throw InvalidArgument("fixed split sizes exceed the class count");
  }
  GroupSplit split;
  for (std::int64_t c = 0; c < num_classes; ++c) {
    split.assignment.push_back(c < head ? Group::kMany : (c < head + medium ? Group::kMedium : Group::kFew));
  }
  return split;
}

GroupSplit make_groups(const LongTailProfile& profile, GroupScheme scheme) {
  if (scheme == GroupScheme::kFixed343) {
    if (profile.num_classes != 10) throw InvalidArgument("the 3/4/3 split is defined for 10 classes");
    return split_fixed(10, 3, 4);
  }
  return split_class_groups(profile);
}

}  // namespace lt3lssl::data
