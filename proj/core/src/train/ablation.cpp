#include "lt3lssl/train/ablation.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/data/sources.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace lt3lssl::train {

std::vector<AblationEntry> ablation_matrix(std::string_view name) {
  if (name == "table7") {
    return {{"#1", {{"ssl.losses", "ce"}}},
            {"#2", {{"ssl.losses", "ce,h"}}},
            {"#3", {{"ssl.losses", "ce,p"}}},
            {"#4", {{"ssl.losses", "ce,h,p"}}},
            {"#5", {{"ssl.losses", "ce,h,p,a"}}}};
  }
  if (name == "table8") {
    return {{"single", {{"ssl.losses", "ce,h,p,a"}, {"ssl.queue_variant", "single"}}},
            {"ctruth", {{"ssl.losses", "ce,h,p,a"}, {"ssl.queue_variant", "ctruth"}}},
            {"cprime", {{"ssl.losses", "ce,h,p,a"}, {"ssl.queue_variant", "cprime"}}}};
  }
  if (name == "table9") {
    return {{"stages1", {{"ssl.losses", "ce,h,p,a"}, {"ssl.mask_stages", "1"}}},
            {"stages2", {{"ssl.losses", "ce,h,p,a"}, {"ssl.mask_stages", "2"}}},
            {"stages3", {{"ssl.losses", "ce,h,p,a"}, {"ssl.mask_stages", "3"}}}};
  }
  throw InvalidArgument("unknown ablation matrix '" + std::string(name) + "' (table7, table8, table9)");
}

std::vector<AblationRow> run_ablation_suite(const TrainConfig& base, const std::vector<AblationEntry>& matrix,
                                            const data::DatasetBundle& bundle, const std::filesystem::path& csv,
                                            const TrainHooks& hooks) {
  if (matrix.empty()) throw InvalidArgument("ablation matrix is empty");
  // Validate every configuration before spending time on training.
  std::vector<TrainConfig> configs;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    auto cfg = base;
    apply_overrides(cfg, matrix[i].overrides);
    cfg.out_dir = (std::filesystem::path(base.out_dir) / ("run" + std::to_string(i + 1))).string();
    cfg.validate();
    configs.push_back(cfg);
  }

  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    auto result = run_training(configs[i], bundle, hooks);
    rows.push_back({matrix[i], result.test.at("full"), result.out_dir});
  }

  std::ofstream out(csv);
  if (!out) throw IoError("cannot write " + csv.string());
  auto field = [](const std::optional<double>& v) {
    std::ostringstream s;
    if (v) s << std::fixed << std::setprecision(4) << *v;
    return s.str();
  };
  out << "setting,config,many,medium,few,all\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i].report;
    out << rows[i].entry.name << ",\"" << losses_to_string(configs[i].losses) << ' '
        << queue_variant_name(configs[i].queue_variant) << " stages=" << configs[i].mask_stages << "\","
        << field(r.acc_many) << ',' << field(r.acc_medium) << ',' << field(r.acc_few) << ','
        << field(r.acc_all) << '\n';
  }
  if (!out) throw IoError("write failed: " + csv.string());
  return rows;
}

std::vector<AblationRow> run_ablation_suite(const TrainConfig& base, const std::vector<AblationEntry>& matrix,
                                            const std::filesystem::path& csv, const TrainHooks& hooks) {
  base.validate();
  const auto bundle = data::load_dataset(base.data, data::data_root_from_env());
  return run_ablation_suite(base, matrix, bundle, csv, hooks);
}

}  // namespace lt3lssl::train
