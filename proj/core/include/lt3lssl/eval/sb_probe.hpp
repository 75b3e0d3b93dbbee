#pragma once

#include "lt3lssl/data/catalog.hpp"
#include "lt3lssl/eval/report.hpp"
#include "lt3lssl/train/config.hpp"
#include "lt3lssl/train/trainer.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace lt3lssl::eval {

struct ProbeOptions {
  bool with_oracle = true;
  train::TrainHooks hooks;
};

struct ProbeReport {
  std::map<std::string, EvalReport> standard;  // full, mnist_only, cifar_only
  std::optional<EvalReport> oracle;           // cifar_only of the oracle model
  std::optional<GapRecord> gap;               // standard cifar_only - oracle cifar_only
  std::filesystem::path standard_dir;
  std::optional<std::filesystem::path> oracle_dir;
};

// Trains `cfg` on the concatenated long-tailed set (under cfg.out_dir/standard)
// and, optionally, the oracle control on randomized digit halves (under
// cfg.out_dir/oracle); writes cfg.out_dir/probe.csv.
ProbeReport sb_probe(const train::TrainConfig& cfg, const ProbeOptions& options = {});

// Rows full, mnist_only, cifar_only, cifar_only_oracle, gap; columns
// Head, Medium, Tail, All. Missing rows or fields are left empty.
void write_probe_csv(const std::filesystem::path& path, const ProbeReport& report);

}  // namespace lt3lssl::eval
