#include "lt3lssl/viz/exporters.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/ssl/cam.hpp"
#include "lt3lssl/viz/plot.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <limits>
#include <numeric>

namespace lt3lssl::viz {
namespace {

std::filesystem::path ensure_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
  return p;
}

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string shortest(float v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// Blue -> cyan -> yellow -> red ramp for overlays.
Rgb ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double r = std::clamp(1.5 - std::abs(4.0 * t - 3.0), 0.0, 1.0);
  const double g = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
  const double b = std::clamp(1.5 - std::abs(4.0 * t - 1.0), 0.0, 1.0);
  return {static_cast<std::uint8_t>(std::lround(255 * r)), static_cast<std::uint8_t>(std::lround(255 * g)),
          static_cast<std::uint8_t>(std::lround(255 * b))};
}

std::string stem_of(const std::string& name) {
  std::string s = name;
  for (auto& ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_')) ch = '_';
  return s.empty() ? "image" : s;
}

}  // namespace

void ExportManifest::check_complete() const {
  for (const auto& f : files) {
    std::error_code ec;
    if (!std::filesystem::exists(f.path, ec) || std::filesystem::file_size(f.path, ec) == 0 || ec)
      throw IoError("manifest lists missing or empty file " + f.path.string());
  }
}

std::string ExportManifest::to_json() const {
  nlohmann::ordered_json j;
  j["run_id"] = run_id;
  j["files"] = nlohmann::json::array();
  for (const auto& f : files) j["files"].push_back({{"path", f.path.string()}, {"kind", f.kind}});
  j["warnings"] = warnings;
  return j.dump(2);
}

void ExportManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Raster to_raster(const torch::Tensor& image) {
  if (image.dim() != 3 || (image.size(0) != 1 && image.size(0) != 3))
    throw InvalidArgument("to_raster: expected [1|3, H, W]");
  auto hwc = (image.detach().to(torch::kFloat).clamp(0.0, 1.0) * 255.0).round().to(torch::kUInt8).permute({1, 2, 0});
  hwc = hwc.contiguous();
  Raster r(image.size(2), image.size(1), image.size(0));
  std::copy_n(hwc.data_ptr<std::uint8_t>(), r.pixels.size(), r.pixels.begin());
  return r;
}

torch::Tensor from_raster(const Raster& raster) {
  if (raster.channels != 1 && raster.channels != 3) throw InvalidArgument("from_raster: expected gray or RGB");
  auto t = torch::from_blob(const_cast<std::uint8_t*>(raster.pixels.data()),
                            {raster.height, raster.width, raster.channels}, torch::kUInt8)
               .permute({2, 0, 1})
               .to(torch::kFloat)
               .div(255.0);
  if (raster.channels == 1) t = t.expand({3, raster.height, raster.width});
  return t.contiguous();
}

Raster heatmap_raster(const torch::Tensor& normalized) {
  if (normalized.dim() != 2) throw InvalidArgument("heatmap_raster: expected [H, W]");
  return to_raster(normalized.unsqueeze(0));
}

ExportManifest export_cam_heatmaps(models::ModelBundle& model, const std::vector<CamItem>& items,
                                   const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  ExportManifest manifest;
  manifest.run_id = out_dir.filename().string();
  const bool was_training = model.encoder->is_training();
  model.eval();
  torch::NoGradGuard no_grad;
  for (const auto& item : items) {
    auto image = item.image;
    if (image.dim() != 3 || image.size(0) != model.encoder->in_channels()) {
      manifest.warnings.push_back(item.name + ": expected " + std::to_string(model.encoder->in_channels()) +
                                  " channels, skipped");
      continue;
    }
    auto out = model.encoder->forward(image.unsqueeze(0));
    const auto cls = item.label ? *item.label : model.classifier->forward(out.pooled).argmax(1).item<std::int64_t>();
    auto cam = ssl::normalize_cam(ssl::compute_cam(out.feature_map[0], model.classifier->weight(), cls));
    auto up = ssl::upsample_mask(cam.unsqueeze(0), image.size(1), image.size(2))[0][0];

    const auto stem = stem_of(item.name);
    const auto input_png = out_dir / (stem + "_input.png");
    const auto cam_png = out_dir / (stem + "_cam.png");
    const auto overlay_png = out_dir / (stem + "_overlay.png");
    auto input = to_raster(image.size(0) == 1 ? image.expand({3, image.size(1), image.size(2)}) : image);
    auto heat = heatmap_raster(up);
    Raster colored(heat.width, heat.height, 3);
    for (std::int64_t y = 0; y < heat.height; ++y)
      for (std::int64_t x = 0; x < heat.width; ++x) {
        const auto c = ramp(heat.at(x, y) / 255.0);
        for (std::int64_t ch = 0; ch < 3; ++ch) colored.at(x, y, ch) = c[static_cast<std::size_t>(ch)];
      }
    write_png(input_png, input);
    write_png(cam_png, heat);
    write_png(overlay_png, blend(input, colored, 0.5));
    manifest.add(input_png, "image");
    manifest.add(cam_png, "heatmap");
    manifest.add(overlay_png, "heatmap");
  }
  model.train(was_training);
  manifest.write(out_dir / "manifest.json");
  return manifest;
}

ExportManifest export_cam_heatmaps(models::ModelBundle& model, const std::vector<std::filesystem::path>& images,
                                   const std::filesystem::path& out_dir) {
  std::vector<CamItem> items;
  std::vector<std::string> warnings;
  for (const auto& p : images) {
    try {
      items.push_back({p.stem().string(), from_raster(read_png(p)), std::nullopt});
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << p.string() << ": " << e.what() << '\n';
      warnings.push_back(p.string() + ": " + e.what());
    }
  }
  auto manifest = export_cam_heatmaps(model, items, out_dir);
  manifest.warnings.insert(manifest.warnings.begin(), warnings.begin(), warnings.end());
  manifest.write(out_dir / "manifest.json");
  return manifest;
}

QueueDistribution queue_distribution(const std::vector<std::int64_t>& labels, const data::LongTailProfile& profile) {
  const auto c = profile.num_classes;
  QueueDistribution d;
  d.order.resize(static_cast<std::size_t>(c));
  std::iota(d.order.begin(), d.order.end(), 0);
  std::stable_sort(d.order.begin(), d.order.end(), [&](auto a, auto b) {
    return profile.counts[static_cast<std::size_t>(a)] > profile.counts[static_cast<std::size_t>(b)];
  });
  d.counts.assign(static_cast<std::size_t>(c), 0);
  for (auto l : labels) {
    if (l < 0) continue;
    if (l >= c) throw DataError("queue label " + std::to_string(l) + " outside the profile's classes");
    ++d.counts[static_cast<std::size_t>(l)];
    ++d.occupied;
  }
  const auto total = static_cast<double>(profile.total());
  d.proportion.assign(static_cast<std::size_t>(c), 0.0);
  d.train_proportion.assign(static_cast<std::size_t>(c), 0.0);
  for (std::size_t k = 0; k < d.counts.size(); ++k) {
    if (d.occupied > 0) d.proportion[k] = static_cast<double>(d.counts[k]) / static_cast<double>(d.occupied);
    d.train_proportion[k] = static_cast<double>(profile.counts[k]) / total;
  }
  return d;
}

ExportManifest export_queue_distribution(const std::filesystem::path& snapshot_csv,
                                         const data::LongTailProfile& profile, const std::filesystem::path& out_dir) {
  std::ifstream in(snapshot_csv);
  if (!in) throw IoError("cannot read " + snapshot_csv.string());
  std::string line;
  std::getline(in, line);
  if (line != "slot,pseudo_label") throw DataError("unexpected queue snapshot header in " + snapshot_csv.string());
  std::vector<std::int64_t> labels;
  for (std::int64_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    std::int64_t v = 0;
    const char* b = line.data() + (comma == std::string::npos ? line.size() : comma + 1);
    auto [ptr, ec] = std::from_chars(b, line.data() + line.size(), v);
    if (comma == std::string::npos || ec != std::errc() || ptr != line.data() + line.size())
      throw DataError(snapshot_csv.string() + ":" + std::to_string(n) + ": malformed row");
    labels.push_back(v);
  }
  const auto d = queue_distribution(labels, profile);

  ensure_dir(out_dir);
  ExportManifest manifest;
  manifest.run_id = out_dir.filename().string();
  const auto csv = out_dir / "queue_distribution.csv";
  std::ofstream out(csv);
  if (!out) throw IoError("cannot write " + csv.string());
  out << "class_index,queue_count,queue_proportion,train_proportion,empty\n";
  std::vector<double> bars, ticks;
  for (auto k : d.order) {
    const auto i = static_cast<std::size_t>(k);
    out << k << ',' << d.counts[i] << ',' << shortest(d.proportion[i]) << ',' << shortest(d.train_proportion[i]) << ','
        << (d.empty() ? 1 : 0) << '\n';
    bars.push_back(d.proportion[i]);
    ticks.push_back(d.train_proportion[i]);
  }
  out.close();
  if (!out) throw IoError("write failed: " + csv.string());
  manifest.add(csv, "queue_csv");

  const double top = std::max(*std::max_element(bars.begin(), bars.end()),
                              *std::max_element(ticks.begin(), ticks.end()));
  const auto png = out_dir / "queue_distribution.png";
  write_png(png, bar_plot(bars, ticks, top > 0 ? top * 1.05 : 1.0));
  manifest.add(png, "plot");
  manifest.write(out_dir / "manifest.json");
  return manifest;
}

ExportManifest export_embeddings(models::ModelBundle& model, const data::LabeledImageSet& dataset,
                                 const std::filesystem::path& out_dir,
                                 const std::optional<std::string>& projection_command) {
  dataset.validate();
  ensure_dir(out_dir);
  ExportManifest manifest;
  manifest.run_id = out_dir.filename().string();
  const bool was_training = model.encoder->is_training();
  model.eval();
  const auto csv = out_dir / "embeddings.csv";
  std::ofstream out(csv);
  if (!out) throw IoError("cannot write " + csv.string());
  const auto d = model.feature_dim();
  out << "sample_id,label";
  for (std::int64_t k = 1; k <= d; ++k) out << ",e_" << k;
  out << '\n';
  {
    torch::NoGradGuard no_grad;
    for (std::int64_t s = 0; s < dataset.size(); s += 256) {
      const auto e = std::min(dataset.size(), s + 256);
      auto pooled = model.encoder->forward(dataset.images.slice(0, s, e)).pooled.contiguous();
      const float* p = pooled.data_ptr<float>();
      for (std::int64_t i = s; i < e; ++i) {
        out << dataset.sample_ids[static_cast<std::size_t>(i)] << ',' << dataset.labels[static_cast<std::size_t>(i)];
        for (std::int64_t k = 0; k < d; ++k) out << ',' << shortest(p[(i - s) * d + k]);
        out << '\n';
      }
    }
  }
  model.train(was_training);
  out.close();
  if (!out) throw IoError("write failed: " + csv.string());
  manifest.add(csv, "embedding_csv");

  if (projection_command) {
    const auto projected = out_dir / "embeddings_2d.csv";
    const auto cmd = *projection_command + " '" + csv.string() + "' '" + projected.string() + "'";
    const int rc = std::system(cmd.c_str());
    std::error_code ec;
    if (rc == 0 && std::filesystem::exists(projected, ec))
      manifest.add(projected, "embedding_csv");
    else
      manifest.warnings.push_back("projection command failed (status " + std::to_string(rc) + "): " + cmd);
  }
  manifest.write(out_dir / "manifest.json");
  return manifest;
}

ExportManifest export_learning_curves(const std::filesystem::path& metrics_jsonl,
                                      const std::filesystem::path& out_dir) {
  std::ifstream in(metrics_jsonl);
  if (!in) throw IoError("cannot read " + metrics_jsonl.string());
  std::vector<std::int64_t> epochs;
  std::vector<std::string> columns;
  std::vector<std::map<std::string, double>> rows;
  std::string line;
  for (std::int64_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(metrics_jsonl.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("epoch") || !j["epoch"].is_number_integer())
      throw DataError(metrics_jsonl.string() + ":" + std::to_string(n) + ": missing integer 'epoch'");
    std::map<std::string, double> row;
    for (const auto& [key, value] : j.items()) {
      if (key.rfind("acc_", 0) != 0) continue;
      if (std::find(columns.begin(), columns.end(), key) == columns.end()) columns.push_back(key);
      row[key] = value.is_number() ? value.get<double>() : std::numeric_limits<double>::quiet_NaN();
    }
    epochs.push_back(j["epoch"].get<std::int64_t>());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(metrics_jsonl.string() + ": empty metrics log");

  ensure_dir(out_dir);
  ExportManifest manifest;
  manifest.run_id = out_dir.filename().string();
  const auto csv = out_dir / "curves.csv";
  std::ofstream out(csv);
  if (!out) throw IoError("cannot write " + csv.string());
  out << "epoch";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  std::vector<std::vector<double>> series(columns.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << epochs[r];
    for (std::size_t c = 0; c < columns.size(); ++c) {
      auto it = rows[r].find(columns[c]);
      const double v = it == rows[r].end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
      series[c].push_back(v);
      out << ',';
      if (!std::isnan(v)) out << shortest(v);
    }
    out << '\n';
  }
  out.close();
  if (!out) throw IoError("write failed: " + csv.string());
  manifest.add(csv, "curve");
  const auto png = out_dir / "curves.png";
  write_png(png, line_plot(series, 0.0, 100.0));
  manifest.add(png, "curve");
  manifest.write(out_dir / "manifest.json");
  return manifest;
}

}  // namespace lt3lssl::viz
