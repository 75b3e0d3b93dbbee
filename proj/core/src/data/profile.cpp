#include "lt3lssl/data/profile.hpp"

#include "lt3lssl/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace lt3lssl::data {

std::int64_t LongTailProfile::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::vector<double> LongTailProfile::priors() const {
  const double sum = static_cast<double>(total());
  std::vector<double> out;
  out.reserve(counts.size());
  for (auto n : counts) out.push_back(static_cast<double>(n) / sum);
  return out;
}

LongTailProfile LongTailProfile::from_counts(std::vector<std::int64_t> counts) {
  if (counts.empty()) throw InvalidArgument("profile needs at least one class");
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 1) {
      throw InvalidArgument("class " + std::to_string(c) + " has non-positive count " + std::to_string(counts[c]));
    }
  }
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  LongTailProfile p;
  p.num_classes = static_cast<std::int64_t>(counts.size());
  p.n_max = *hi;
  p.beta = static_cast<double>(*hi) / static_cast<double>(*lo);
  p.counts = std::move(counts);
  return p;
}

LongTailProfile build_longtail_profile(std::int64_t num_classes, std::int64_t n_max, double beta) {
  if (!(beta >= 1.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be >= 1, got " + std::to_string(beta));
  if (num_classes < 1) throw InvalidArgument("num_classes must be positive");
  if (n_max < 1) throw InvalidArgument("n_max must be positive");
  if (num_classes == 1 && beta != 1.0) throw InvalidArgument("a single-class profile requires beta == 1");

  LongTailProfile p;
  p.num_classes = num_classes;
  p.n_max = n_max;
  p.beta = beta;
  p.counts.reserve(static_cast<std::size_t>(num_classes));
  for (std::int64_t c = 0; c < num_classes; ++c) {
    const double exponent = num_classes == 1 ? 0.0 : -static_cast<double>(c) / static_cast<double>(num_classes - 1);
    const auto n = static_cast<std::int64_t>(std::llround(static_cast<double>(n_max) * std::pow(beta, exponent)));
    if (n < 1) {
      throw InvalidArgument("profile (n_max=" + std::to_string(n_max) + ", beta=" + std::to_string(beta) +
                            ") rounds class " + std::to_string(c) + " to zero samples");
    }
    p.counts.push_back(n);
  }
  return p;
}

void write_profile_csv(const std::filesystem::path& path, const LongTailProfile& profile) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write profile: " + path.string());
  out << "class_index,count\n";
  for (std::size_t c = 0; c < profile.counts.size(); ++c) out << c << ',' << profile.counts[c] << '\n';
  if (!out) throw IoError("failed writing profile: " + path.string());
}

LongTailProfile read_profile_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read profile: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("class_index,count", 0) != 0) {
    throw DataError(path.string() + ": expected header 'class_index,count'");
  }
  std::vector<std::int64_t> counts;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::int64_t index = 0;
    std::int64_t count = 0;
    char comma = 0;
    if (!(row >> index >> comma >> count) || comma != ',') {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    if (index != static_cast<std::int64_t>(counts.size())) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": class indices must be 0..C-1 in order");
    }
    counts.push_back(count);
  }
  return LongTailProfile::from_counts(std::move(counts));
}

}  // namespace lt3lssl::data
