#pragma once

#include "lt3lssl/data/catalog.hpp"
#include "lt3lssl/eval/report.hpp"
#include "lt3lssl/train/trainer.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace lt3lssl::train {

struct AblationEntry {
  std::string name;
  std::vector<std::pair<std::string, std::string>> overrides;  // config key -> value
};

// "table7": loss subsets; "table8": queue variants; "table9": mask stages.
std::vector<AblationEntry> ablation_matrix(std::string_view name);

struct AblationRow {
  AblationEntry entry;
  eval::EvalReport report;  // test set, "full" variant
  std::filesystem::path out_dir;
};

// Trains every entry on the same data and seed under base.out_dir/<index>
// and writes `setting,config,many,medium,few,all` to `csv`.
std::vector<AblationRow> run_ablation_suite(const TrainConfig& base, const std::vector<AblationEntry>& matrix,
                                            const data::DatasetBundle& bundle, const std::filesystem::path& csv,
                                            const TrainHooks& hooks = {});
std::vector<AblationRow> run_ablation_suite(const TrainConfig& base, const std::vector<AblationEntry>& matrix,
                                            const std::filesystem::path& csv, const TrainHooks& hooks = {});

}  // namespace lt3lssl::train
