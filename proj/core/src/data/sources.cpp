#include "lt3lssl/data/sources.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/common/png_io.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace lt3lssl::data {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

torch::Tensor bytes_to_unit(const std::uint8_t* data, std::vector<std::int64_t> shape) {
  auto t = torch::from_blob(const_cast<std::uint8_t*>(data), shape, torch::kUInt8);
  return t.to(torch::kFloat32).div_(255.0);
}

}  // namespace

LabeledImageSet read_idx(const fs::path& images, const fs::path& labels) {
  const auto img = read_all(images);
  const auto lab = read_all(labels);
  if (img.size() < 16 || be32(img, 0) != 0x00000803) throw DataError(images.string() + ": not an IDX3 image file");
  if (lab.size() < 8 || be32(lab, 0) != 0x00000801) throw DataError(labels.string() + ": not an IDX1 label file");
  const std::int64_t n = be32(img, 4);
  const std::int64_t rows = be32(img, 8);
  const std::int64_t cols = be32(img, 12);
  if (static_cast<std::int64_t>(be32(lab, 4)) != n) throw DataError("IDX image/label counts differ");
  if (img.size() != static_cast<std::size_t>(16 + n * rows * cols) || lab.size() != static_cast<std::size_t>(8 + n)) {
    throw DataError(images.string() + ": truncated IDX payload");
  }
  LabeledImageSet out;
  out.images = bytes_to_unit(img.data() + 16, {n, 1, rows, cols});
  for (std::int64_t i = 0; i < n; ++i) {
    out.labels.push_back(lab[static_cast<std::size_t>(8 + i)]);
    out.sample_ids.push_back(i);
  }
  return out;
}

LabeledImageSet read_cifar_binary(const fs::path& file, CifarFlavor flavor, std::int64_t id_offset) {
  const auto bytes = read_all(file);
  const std::size_t label_bytes = flavor == CifarFlavor::kCifar10 ? 1 : 2;
  const std::size_t record = label_bytes + 3072;
  if (bytes.empty() || bytes.size() % record != 0) throw DataError(file.string() + ": size is not a whole number of records");
  const auto n = static_cast<std::int64_t>(bytes.size() / record);
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(n) * 3072);
  LabeledImageSet out;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto* rec = bytes.data() + static_cast<std::size_t>(i) * record;
    out.labels.push_back(rec[label_bytes - 1]);
    out.sample_ids.push_back(id_offset + i);
    std::copy(rec + label_bytes, rec + record, pixels.begin() + static_cast<std::ptrdiff_t>(i) * 3072);
  }
  out.images = bytes_to_unit(pixels.data(), {n, 3, 32, 32});
  return out;
}

std::optional<fs::path> data_root_from_env() {
  const char* root = std::getenv("LT3LSSL_DATA_ROOT");
  if (root == nullptr || *root == '\0') return std::nullopt;
  return fs::path(root);
}

std::optional<LabeledImageSet> load_mnist(const fs::path& root, bool train) {
  const std::string prefix = train ? "train" : "t10k";
  const auto images = root / "mnist" / (prefix + "-images-idx3-ubyte");
  const auto labels = root / "mnist" / (prefix + "-labels-idx1-ubyte");
  if (!fs::exists(images) || !fs::exists(labels)) return std::nullopt;
  return read_idx(images, labels);
}

std::optional<LabeledImageSet> load_cifar10(const fs::path& root, bool train) {
  const auto dir = root / "cifar-10-batches-bin";
  std::vector<fs::path> files;
  if (train) {
    for (int i = 1; i <= 5; ++i) files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
  } else {
    files.push_back(dir / "test_batch.bin");
  }
  std::vector<LabeledImageSet> parts;
  std::int64_t offset = 0;
  for (const auto& f : files) {
    if (!fs::exists(f)) return std::nullopt;
    parts.push_back(read_cifar_binary(f, CifarFlavor::kCifar10, offset));
    offset += parts.back().size();
  }
  return concat(parts);
}

std::optional<LabeledImageSet> load_cifar100(const fs::path& root, bool train) {
  const auto file = root / "cifar-100-binary" / (train ? "train.bin" : "test.bin");
  if (!fs::exists(file)) return std::nullopt;
  return read_cifar_binary(file, CifarFlavor::kCifar100);
}

void write_manifest(const fs::path& dir, const LabeledImageSet& data, const std::string& stem) {
  data.validate();
  const auto image_dir = dir / (stem + "_images");
  std::error_code ec;
  fs::create_directories(image_dir, ec);
  if (ec) throw IoError("cannot create " + image_dir.string() + ": " + ec.message());
  const auto csv_path = dir / (stem + ".csv");
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  csv << "sample_id,path,label\n";
  auto bytes = data.images.mul(255.0).round().clamp(0, 255).to(torch::kUInt8).permute({0, 2, 3, 1}).contiguous();
  const auto c = data.channels();
  const auto h = data.height();
  const auto w = data.width();
  const auto* src = bytes.data_ptr<std::uint8_t>();
  for (std::int64_t i = 0; i < data.size(); ++i) {
    Raster r(w, h, c);
    std::copy_n(src + i * h * w * c, h * w * c, r.pixels.begin());
    std::ostringstream name;
    name << std::setw(7) << std::setfill('0') << data.sample_ids[static_cast<std::size_t>(i)] << ".png";
    const auto rel = fs::path(stem + "_images") / name.str();
    write_png(dir / rel, r);
    csv << data.sample_ids[static_cast<std::size_t>(i)] << ',' << rel.generic_string() << ','
        << data.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!csv) throw IoError("failed writing " + csv_path.string());
}

LabeledImageSet read_manifest(const fs::path& manifest_csv) {
  std::ifstream in(manifest_csv);
  if (!in) throw IoError("cannot read manifest: " + manifest_csv.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("sample_id,path,label", 0) != 0) {
    throw DataError(manifest_csv.string() + ": expected header 'sample_id,path,label'");
  }
  const auto base = manifest_csv.parent_path();
  std::vector<torch::Tensor> images;
  LabeledImageSet out;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = line.rfind(',');
    if (a == std::string::npos || a == b) {
      throw DataError(manifest_csv.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    std::int64_t id = 0;
    std::int64_t label = 0;
    try {
      id = std::stoll(line.substr(0, a));
      label = std::stoll(line.substr(b + 1));
    } catch (const std::exception&) {
      throw DataError(manifest_csv.string() + ":" + std::to_string(line_no) + ": non-integer id or label");
    }
    const auto raster = read_png(base / line.substr(a + 1, b - a - 1));
    auto t = torch::from_blob(const_cast<std::uint8_t*>(raster.pixels.data()),
                              {raster.height, raster.width, raster.channels}, torch::kUInt8)
                 .permute({2, 0, 1})
                 .to(torch::kFloat32)
                 .div(255.0);
    if (!images.empty() && t.sizes() != images.front().sizes()) {
      throw DataError(manifest_csv.string() + ":" + std::to_string(line_no) + ": image size differs from the first image");
    }
    images.push_back(t);
    out.sample_ids.push_back(id);
    out.labels.push_back(label);
  }
  if (images.empty()) throw DataError(manifest_csv.string() + ": no samples");
  out.images = torch::stack(images);
  return out;
}

}  // namespace lt3lssl::data
