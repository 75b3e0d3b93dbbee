#pragma once

#include "lt3lssl/common/png_io.hpp"
#include "lt3lssl/data/groups.hpp"
#include "lt3lssl/data/image_set.hpp"
#include "lt3lssl/data/profile.hpp"
#include "lt3lssl/models/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lt3lssl::viz {

// Kinds: heatmap, curve, queue_csv, embedding_csv, report_csv, image, plot.
struct ExportManifest {
  struct Entry {
    std::filesystem::path path;
    std::string kind;
  };
  std::string run_id;
  std::vector<Entry> files;
  std::vector<std::string> warnings;

  void add(const std::filesystem::path& path, const std::string& kind) { files.push_back({path, kind}); }
  // Throws IoError when a listed file is missing or empty.
  void check_complete() const;
  std::string to_json() const;
  void write(const std::filesystem::path& path) const;
};

// Tensor [C, H, W] in [0, 1] with C in {1, 3} to an 8-bit raster.
Raster to_raster(const torch::Tensor& image);
// Raster to a [3, H, W] float tensor (gray replicated to RGB).
torch::Tensor from_raster(const Raster& raster);
// 8-bit gray heatmap round(255 * m) of a normalized map [H, W].
Raster heatmap_raster(const torch::Tensor& normalized);

struct CamItem {
  std::string name;
  torch::Tensor image;                // [C, H, W] in [0, 1]
  std::optional<std::int64_t> label;  // predicted class when absent
};

// Per item writes <name>_input.png, <name>_cam.png (upsampled normalized CAM)
// and <name>_overlay.png into out_dir, plus manifest.json.
ExportManifest export_cam_heatmaps(models::ModelBundle& model, const std::vector<CamItem>& items,
                                   const std::filesystem::path& out_dir);
// PNG files; unreadable ones are skipped with a manifest warning.
ExportManifest export_cam_heatmaps(models::ModelBundle& model, const std::vector<std::filesystem::path>& images,
                                   const std::filesystem::path& out_dir);

struct QueueDistribution {
  std::vector<std::int64_t> order;  // classes head -> tail
  std::vector<std::int64_t> counts;
  std::vector<double> proportion;        // queue share per class (sentinels excluded)
  std::vector<double> train_proportion;  // profile share per class
  std::int64_t occupied = 0;
  bool empty() const { return occupied == 0; }
};
QueueDistribution queue_distribution(const std::vector<std::int64_t>& labels, const data::LongTailProfile& profile);

// queue_distribution.csv `class_index,queue_count,queue_proportion,train_proportion,empty`
// and queue_distribution.png (bars: queue share; ticks: training share).
ExportManifest export_queue_distribution(const std::filesystem::path& snapshot_csv,
                                         const data::LongTailProfile& profile, const std::filesystem::path& out_dir);

// embeddings.csv `sample_id,label,e_1..e_D` of pooled features. When
// `projection_command` is given it is run as `<command> <embeddings.csv>
// <embeddings_2d.csv>` and its output is recorded if produced.
ExportManifest export_embeddings(models::ModelBundle& model, const data::LabeledImageSet& dataset,
                                 const std::filesystem::path& out_dir,
                                 const std::optional<std::string>& projection_command = std::nullopt);

// curves.csv `epoch,<acc_* columns>` and curves.png. Throws DataError on a
// malformed line (with its number) or an empty log, before writing anything.
ExportManifest export_learning_curves(const std::filesystem::path& metrics_jsonl,
                                      const std::filesystem::path& out_dir);

}  // namespace lt3lssl::viz
