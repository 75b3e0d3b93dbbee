#pragma once

#include "lt3lssl/data/groups.hpp"
#include "lt3lssl/data/image_set.hpp"
#include "lt3lssl/models/checkpoint.hpp"
#include "lt3lssl/models/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lt3lssl::eval {

// Top-1 accuracies in percent. Group accuracy is the mean over the samples
// of that group's classes; a group without evaluation samples is absent.
struct EvalReport {
  std::string variant = "full";
  double acc_all = 0.0;
  std::optional<double> acc_many;
  std::optional<double> acc_medium;
  std::optional<double> acc_few;
  std::vector<std::int64_t> per_class_count;
  std::vector<std::int64_t> per_class_correct;
  std::int64_t n_eval = 0;

  // Per-class accuracy in percent; NaN for classes without samples.
  std::vector<double> per_class() const;
  std::optional<double> group(data::Group g) const;
};

EvalReport evaluate_predictions(std::span<const std::int64_t> predictions, std::span<const std::int64_t> labels,
                                const data::GroupSplit& groups, const std::string& variant = "full");

// Count-weighted merge of reports over disjoint shards of one evaluation set.
EvalReport merge_reports(const EvalReport& a, const EvalReport& b, const data::GroupSplit& groups);

// Argmax of raw (unadjusted) classifier logits, in eval mode without
// gradients. The model's previous train/eval mode is restored.
std::vector<std::int64_t> predict(models::ModelBundle& model, const torch::Tensor& images,
                                  std::int64_t batch_size = 256);

EvalReport evaluate(models::ModelBundle& model, const data::LabeledImageSet& dataset, const data::GroupSplit& groups,
                    const std::string& variant = "full");
EvalReport evaluate(const models::Checkpoint& checkpoint, const data::LabeledImageSet& dataset,
                    const data::GroupSplit& groups, const std::string& variant = "full");

// Signed difference report - oracle per field; a field is absent when it is
// absent on either side. Throws InvalidArgument on a variant mismatch.
struct GapRecord {
  std::string variant;
  double all = 0.0;
  std::optional<double> many;
  std::optional<double> medium;
  std::optional<double> few;
};
GapRecord accuracy_gap(const EvalReport& report, const EvalReport& oracle_report);

std::string to_json(const EvalReport& report);
// Rows `name,variant,many,medium,few,all,n_eval`; absent fields are empty.
void write_reports_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, EvalReport>>& rows);

}  // namespace lt3lssl::eval
