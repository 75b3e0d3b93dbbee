#include "lt3lssl/eval/sb_probe.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/data/sources.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace lt3lssl::eval {

ProbeReport sb_probe(const train::TrainConfig& cfg, const ProbeOptions& options) {
  if (cfg.data.name != "mnist-cifar-lt") throw InvalidArgument("the probe runs on mnist-cifar-lt");
  if (cfg.data.oracle) throw InvalidArgument("the probe trains the oracle itself; unset data.oracle");
  cfg.validate();
  const auto root = data::data_root_from_env();
  const std::filesystem::path out(cfg.out_dir);

  ProbeReport report;
  auto standard = cfg;
  standard.out_dir = (out / "standard").string();
  const auto bundle = data::load_dataset(standard.data, root);
  auto result = train::run_training(standard, bundle, options.hooks);
  report.standard = result.test;
  report.standard_dir = result.out_dir;

  if (options.with_oracle) {
    auto oracle = cfg;
    oracle.out_dir = (out / "oracle").string();
    oracle.data.oracle = true;
    const auto oracle_bundle = data::load_dataset(oracle.data, root);
    auto oracle_result = train::run_training(oracle, oracle_bundle, options.hooks);
    report.oracle = oracle_result.test.at("cifar_only");
    report.gap = accuracy_gap(report.standard.at("cifar_only"), *report.oracle);
    report.oracle_dir = oracle_result.out_dir;
  }
  write_probe_csv(out / "probe.csv", report);
  return report;
}

void write_probe_csv(const std::filesystem::path& path, const ProbeReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  auto field = [](const std::optional<double>& v) {
    std::ostringstream s;
    if (v) s << std::fixed << std::setprecision(2) << *v;
    return s.str();
  };
  auto row = [&](const std::string& name, const std::optional<double>& head, const std::optional<double>& medium,
                 const std::optional<double>& tail, const std::optional<double>& all) {
    out << name << ',' << field(head) << ',' << field(medium) << ',' << field(tail) << ',' << field(all) << '\n';
  };
  auto report_row = [&](const std::string& name, const EvalReport* r) {
    if (r) row(name, r->acc_many, r->acc_medium, r->acc_few, r->acc_all);
    else row(name, std::nullopt, std::nullopt, std::nullopt, std::nullopt);
  };
  auto find = [&](const std::string& v) -> const EvalReport* {
    auto it = report.standard.find(v);
    return it == report.standard.end() ? nullptr : &it->second;
  };
  out << "setting,Head,Medium,Tail,All\n";
  report_row("full", find("full"));
  report_row("mnist_only", find("mnist_only"));
  report_row("cifar_only", find("cifar_only"));
  report_row("cifar_only_oracle", report.oracle ? &*report.oracle : nullptr);
  if (report.gap) row("gap", report.gap->many, report.gap->medium, report.gap->few, report.gap->all);
  else row("gap", std::nullopt, std::nullopt, std::nullopt, std::nullopt);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace lt3lssl::eval
