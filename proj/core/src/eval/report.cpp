#include "lt3lssl/eval/report.hpp"

#include "lt3lssl/common/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace lt3lssl::eval {
namespace {

void fill_groups(EvalReport& r, const data::GroupSplit& groups) {
  std::array<std::int64_t, 3> n{};
  std::array<std::int64_t, 3> ok{};
  std::int64_t total_ok = 0;
  for (std::size_t c = 0; c < r.per_class_count.size(); ++c) {
    const auto g = static_cast<std::size_t>(groups.of(static_cast<std::int64_t>(c)));
    n[g] += r.per_class_count[c];
    ok[g] += r.per_class_correct[c];
    total_ok += r.per_class_correct[c];
  }
  auto pct = [](std::int64_t k, std::int64_t m) -> std::optional<double> {
    if (m == 0) return std::nullopt;
    return 100.0 * static_cast<double>(k) / static_cast<double>(m);
  };
  r.acc_all = r.n_eval == 0 ? 0.0 : 100.0 * static_cast<double>(total_ok) / static_cast<double>(r.n_eval);
  r.acc_many = pct(ok[0], n[0]);
  r.acc_medium = pct(ok[1], n[1]);
  r.acc_few = pct(ok[2], n[2]);
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string opt_csv(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s.precision(6);
  s << std::fixed << *v;
  return s.str();
}

}  // namespace

std::vector<double> EvalReport::per_class() const {
  std::vector<double> out(per_class_count.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < out.size(); ++c)
    if (per_class_count[c] > 0)
      out[c] = 100.0 * static_cast<double>(per_class_correct[c]) / static_cast<double>(per_class_count[c]);
  return out;
}

std::optional<double> EvalReport::group(data::Group g) const {
  switch (g) {
    case data::Group::kMany: return acc_many;
    case data::Group::kMedium: return acc_medium;
    case data::Group::kFew: return acc_few;
  }
  return std::nullopt;
}

EvalReport evaluate_predictions(std::span<const std::int64_t> predictions, std::span<const std::int64_t> labels,
                                const data::GroupSplit& groups, const std::string& variant) {
  if (predictions.size() != labels.size()) throw InvalidArgument("predictions and labels differ in length");
  const auto num_classes = groups.num_classes();
  EvalReport r;
  r.variant = variant;
  r.per_class_count.assign(static_cast<std::size_t>(num_classes), 0);
  r.per_class_correct.assign(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = labels[i];
    if (y < 0 || y >= num_classes) throw InvalidArgument("label " + std::to_string(y) + " not covered by groups");
    r.per_class_count[static_cast<std::size_t>(y)] += 1;
    r.per_class_correct[static_cast<std::size_t>(y)] += predictions[i] == y;
  }
  r.n_eval = static_cast<std::int64_t>(labels.size());
  fill_groups(r, groups);
  return r;
}

EvalReport merge_reports(const EvalReport& a, const EvalReport& b, const data::GroupSplit& groups) {
  if (a.variant != b.variant) throw InvalidArgument("cannot merge reports of different variants");
  if (a.per_class_count.size() != b.per_class_count.size()) throw InvalidArgument("class count mismatch");
  EvalReport r = a;
  for (std::size_t c = 0; c < r.per_class_count.size(); ++c) {
    r.per_class_count[c] += b.per_class_count[c];
    r.per_class_correct[c] += b.per_class_correct[c];
  }
  r.n_eval = a.n_eval + b.n_eval;
  fill_groups(r, groups);
  return r;
}

std::vector<std::int64_t> predict(models::ModelBundle& model, const torch::Tensor& images, std::int64_t batch_size) {
  if (images.dim() != 4) throw InvalidArgument("predict: expected images [N, C, H, W]");
  const bool was_training = model.encoder->is_training();
  model.eval();
  torch::NoGradGuard no_grad;
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(images.size(0)));
  for (std::int64_t s = 0; s < images.size(0); s += batch_size) {
    auto chunk = images.slice(0, s, std::min(images.size(0), s + batch_size));
    auto pooled = model.encoder->forward(chunk).pooled;
    auto pred = model.classifier->forward(pooled).argmax(1).contiguous();
    auto p = pred.data_ptr<std::int64_t>();
    out.insert(out.end(), p, p + pred.numel());
  }
  model.train(was_training);
  return out;
}

EvalReport evaluate(models::ModelBundle& model, const data::LabeledImageSet& dataset, const data::GroupSplit& groups,
                    const std::string& variant) {
  const auto preds = predict(model, dataset.images);
  return evaluate_predictions(preds, dataset.labels, groups, variant);
}

EvalReport evaluate(const models::Checkpoint& checkpoint, const data::LabeledImageSet& dataset,
                    const data::GroupSplit& groups, const std::string& variant) {
  auto model = checkpoint.restore();
  return evaluate(model, dataset, groups, variant);
}

GapRecord accuracy_gap(const EvalReport& report, const EvalReport& oracle_report) {
  if (report.variant != oracle_report.variant)
    throw InvalidArgument("accuracy_gap: variants differ ('" + report.variant + "' vs '" + oracle_report.variant + "')");
  auto diff = [](const std::optional<double>& a, const std::optional<double>& b) -> std::optional<double> {
    if (!a || !b) return std::nullopt;
    return *a - *b;
  };
  return {report.variant, report.acc_all - oracle_report.acc_all, diff(report.acc_many, oracle_report.acc_many),
          diff(report.acc_medium, oracle_report.acc_medium), diff(report.acc_few, oracle_report.acc_few)};
}

std::string to_json(const EvalReport& r) {
  nlohmann::json j;
  j["variant"] = r.variant;
  j["acc_all"] = r.acc_all;
  j["acc_many"] = opt(r.acc_many);
  j["acc_medium"] = opt(r.acc_medium);
  j["acc_few"] = opt(r.acc_few);
  j["n_eval"] = r.n_eval;
  j["per_class_count"] = r.per_class_count;
  j["per_class_correct"] = r.per_class_correct;
  return j.dump();
}

void write_reports_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "name,variant,many,medium,few,all,n_eval\n";
  for (const auto& [name, r] : rows) {
    out << name << ',' << r.variant << ',' << opt_csv(r.acc_many) << ',' << opt_csv(r.acc_medium) << ','
        << opt_csv(r.acc_few) << ',' << opt_csv(r.acc_all) << ',' << r.n_eval << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace lt3lssl::eval
