#include "fixtures.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/common/png_io.hpp"
#include "lt3lssl/data/profile.hpp"
#include "lt3lssl/models/model.hpp"
#include "lt3lssl/ssl/cam.hpp"
#include "lt3lssl/viz/exporters.hpp"
#include "lt3lssl/viz/plot.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

using namespace lt3lssl;
using namespace lt3lssl::viz;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

models::ModelBundle linear_model(std::int64_t width = 6) {
  models::ModelSpec spec;
  spec.backbone = {"linear", width};
  spec.num_classes = 10;
  spec.projector_hidden = 8;
  spec.embedding_dim = 4;
  return models::ModelBundle::create(spec, 0);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// Rows (y) where any pixel has the given colour.
std::vector<std::int64_t> rows_with(const Raster& r, const Rgb& c) {
  std::vector<std::int64_t> ys;
  for (std::int64_t y = 0; y < r.height; ++y)
    for (std::int64_t x = 0; x < r.width; ++x)
      if (r.at(x, y, 0) == c[0] && r.at(x, y, 1) == c[1] && r.at(x, y, 2) == c[2]) {
        ys.push_back(y);
        break;
      }
  return ys;
}

}  // namespace

TEST(Heatmap, PixelsAreRoundedScaledMap) {
  const auto r = heatmap_raster(torch::tensor({{0.0F, 0.25F}, {0.5F, 1.0F}}));
  ASSERT_EQ(r.width, 2);
  ASSERT_EQ(r.height, 2);
  EXPECT_EQ(r.channels, 1);
  EXPECT_EQ(r.pixels, (std::vector<std::uint8_t>{0, 64, 128, 255}));
}

TEST(Heatmap, ConstantCamIsBlack) {
  const auto r = heatmap_raster(ssl::normalize_cam(torch::full({4, 4}, 3.0F)));
  for (auto p : r.pixels) EXPECT_EQ(p, 0);
}

TEST(Heatmap, RasterConversionRoundTrip) {
  auto img = torch::tensor({0.0F, 1.0F, 0.5F}).view({3, 1, 1}).expand({3, 2, 3}).contiguous();
  const auto r = to_raster(img);
  EXPECT_EQ(r.width, 3);
  EXPECT_EQ(r.height, 2);
  EXPECT_EQ(r.at(1, 1, 1), 255);
  EXPECT_TRUE(torch::allclose(from_raster(r), img, 0.0, 1.0 / 255.0));
}

TEST(CamExport, WritesInputCamOverlayWithInputDimensions) {
  test_support::TempDir dir("cam");
  auto m = linear_model();
  std::vector<CamItem> items{{"a", torch::rand({3, 64, 32}), 1}, {"b", torch::rand({3, 32, 32}), std::nullopt}};
  const auto manifest = export_cam_heatmaps(m, items, dir.path());
  EXPECT_NO_THROW(manifest.check_complete());
  EXPECT_EQ(manifest.files.size(), 6u);
  for (const auto& [stem, h, w] : {std::tuple{"a", 64, 32}, std::tuple{"b", 32, 32}}) {
    for (const char* suffix : {"_input.png", "_cam.png", "_overlay.png"}) {
      const auto r = read_png(dir / (std::string(stem) + suffix));
      EXPECT_EQ(r.height, h);
      EXPECT_EQ(r.width, w);
    }
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
}

TEST(CamExport, ConstantCamGivesBlackHeatmap) {
  test_support::TempDir dir("cam_const");
  auto m = linear_model();
  {
    torch::NoGradGuard g;
    m.classifier->fc->weight.zero_();
  }
  export_cam_heatmaps(m, std::vector<CamItem>{{"z", torch::rand({3, 16, 16}), 0}}, dir.path());
  const auto r = read_png(dir / "z_cam.png");
  for (auto p : r.pixels) EXPECT_EQ(p, 0);
}

TEST(CamExport, UnreadableImagesAreSkippedWithWarning) {
  test_support::TempDir dir("cam_files");
  auto m = linear_model();
  write_png(dir / "ok.png", to_raster(torch::rand({3, 8, 8})));
  write_text(dir / "bad.png", "not a png");
  const auto manifest =
      export_cam_heatmaps(m, std::vector<std::filesystem::path>{dir / "ok.png", dir / "bad.png"}, dir / "out");
  EXPECT_EQ(manifest.files.size(), 3u);
  ASSERT_EQ(manifest.warnings.size(), 1u);
  EXPECT_NE(manifest.warnings[0].find("bad.png"), std::string::npos);
}

TEST(CamExport, RerunIsByteIdentical) {
  test_support::TempDir dir("cam_idem");
  auto m = linear_model();
  std::vector<CamItem> items{{"a", torch::rand({3, 16, 16}), 2}};
  const auto manifest = export_cam_heatmaps(m, items, dir.path());
  std::map<std::string, std::string> first;
  for (const auto& f : manifest.files) first[f.path.string()] = slurp(f.path);
  export_cam_heatmaps(m, items, dir.path());
  for (const auto& [path, bytes] : first) EXPECT_EQ(slurp(path), bytes) << path;
}

TEST(QueueExport, ProportionsExcludeSentinels) {
  const auto profile = data::build_longtail_profile(10, 100, 10.0);
  const auto d = queue_distribution({3, 3, 5, -1}, profile);
  EXPECT_EQ(d.occupied, 3);
  EXPECT_NEAR(d.proportion[3], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(d.proportion[5], 1.0 / 3.0, 1e-12);
  double sum = 0.0;
  double train_sum = 0.0;
  for (std::size_t c = 0; c < 10; ++c) {
    sum += d.proportion[c];
    train_sum += d.train_proportion[c];
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_NEAR(train_sum, 1.0, 1e-9);
  EXPECT_EQ(d.order.front(), 0);
  EXPECT_EQ(d.order.back(), 9);
}

TEST(QueueExport, CsvAndFlagForEmptySnapshot) {
  test_support::TempDir dir("queue_export");
  const auto profile = data::build_longtail_profile(10, 100, 10.0);
  write_text(dir / "q.csv", "slot,pseudo_label\n0,3\n1,3\n2,5\n3,-1\n");
  auto m = export_queue_distribution(dir / "q.csv", profile, dir / "out");
  EXPECT_NO_THROW(m.check_complete());
  auto rows = lines_of(dir / "out" / "queue_distribution.csv");
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_EQ(rows[0], "class_index,queue_count,queue_proportion,train_proportion,empty");
  EXPECT_EQ(rows[4].substr(0, 4), "3,2,");
  EXPECT_EQ(rows[4].back(), '0');
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "queue_distribution.png"));

  write_text(dir / "empty.csv", "slot,pseudo_label\n0,-1\n1,-1\n");
  export_queue_distribution(dir / "empty.csv", profile, dir / "out2");
  rows = lines_of(dir / "out2" / "queue_distribution.csv");
  ASSERT_EQ(rows.size(), 11u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i].back(), '1');
}

TEST(EmbeddingExport, RowsDimensionAndIdempotence) {
  test_support::TempDir dir("emb");
  auto m = linear_model(5);
  const auto set = test_support::constant_images(10, 2, 3, 8, 8, [](auto c) { return c / 10.0 + 0.05; });
  export_embeddings(m, set, dir.path());
  const auto rows = lines_of(dir / "embeddings.csv");
  ASSERT_EQ(rows.size(), 21u);
  EXPECT_EQ(rows[0], "sample_id,label,e_1,e_2,e_3,e_4,e_5");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(std::count(rows[i].begin(), rows[i].end(), ','), 6);
  const auto first = slurp(dir / "embeddings.csv");
  export_embeddings(m, set, dir.path());
  EXPECT_EQ(slurp(dir / "embeddings.csv"), first);
}

TEST(EmbeddingExport, ProjectionHookIsInvoked) {
  test_support::TempDir dir("emb_hook");
  auto m = linear_model(3);
  const auto set = test_support::constant_images(10, 1, 3, 4, 4, [](auto c) { return c / 10.0; });
  const auto manifest = export_embeddings(m, set, dir.path(), std::string("cp"));
  EXPECT_TRUE(std::filesystem::exists(dir / "embeddings_2d.csv"));
  EXPECT_EQ(manifest.files.size(), 2u);
}

TEST(CurvesExport, TwoHundredEpochLogGivesTwoHundredRows) {
  test_support::TempDir dir("curves");
  std::ostringstream log;
  for (int e = 0; e < 200; ++e)
    log << "{\"epoch\":" << e << ",\"sim1\":-0.5,\"acc_all\":" << e / 4.0 << ",\"acc_few\":null}\n";
  write_text(dir / "m.jsonl", log.str());
  const auto m = export_learning_curves(dir / "m.jsonl", dir / "out");
  EXPECT_NO_THROW(m.check_complete());
  const auto rows = lines_of(dir / "out" / "curves.csv");
  ASSERT_EQ(rows.size(), 201u);
  EXPECT_EQ(rows[0], "epoch,acc_all,acc_few");
  EXPECT_EQ(rows[3], "2,0.5,");
  EXPECT_EQ(rows[200], "199,49.75,");
}

TEST(CurvesExport, PlotFollowsValues) {
  const auto high = line_plot({{90.0, 90.0, 90.0}}, 0.0, 100.0);
  const auto low = line_plot({{10.0, 10.0, 10.0}}, 0.0, 100.0);
  const auto hy = rows_with(high, series_color(0));
  const auto ly = rows_with(low, series_color(0));
  ASSERT_EQ(hy.size(), 1u);
  ASSERT_EQ(ly.size(), 1u);
  EXPECT_LT(hy[0], high.height / 2);
  EXPECT_GT(ly[0], low.height / 2);
}

TEST(CurvesExport, EmptyOrMalformedLogWritesNothing) {
  test_support::TempDir dir("curves_bad");
  write_text(dir / "empty.jsonl", "");
  EXPECT_THROW(export_learning_curves(dir / "empty.jsonl", dir / "out"), DataError);
  EXPECT_FALSE(std::filesystem::exists(dir / "out"));

  write_text(dir / "bad.jsonl", "{\"epoch\":0,\"acc_all\":1}\n{\"epoch\":1,\"acc_all\":2}\n{oops\n");
  try {
    export_learning_curves(dir / "bad.jsonl", dir / "out");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "out"));
}

TEST(Manifest, CheckCompleteDetectsMissingOrEmptyFiles) {
  test_support::TempDir dir("manifest");
  ExportManifest m;
  write_text(dir / "a.csv", "x\n");
  m.add(dir / "a.csv", "report_csv");
  EXPECT_NO_THROW(m.check_complete());
  write_text(dir / "b.csv", "");
  m.add(dir / "b.csv", "report_csv");
  EXPECT_THROW(m.check_complete(), IoError);
}
