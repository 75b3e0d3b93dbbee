#pragma once

#include "lt3lssl/data/image_set.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace lt3lssl::data {

// Reads an MNIST-style IDX pair (images uint8 [N,28,28], labels uint8 [N]).
LabeledImageSet read_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Reads CIFAR binary batches. CIFAR-10 records are <1 label><3072 pixels>;
// CIFAR-100 records are <coarse><fine><3072 pixels> and the fine label is
// used.
enum class CifarFlavor { kCifar10, kCifar100 };
LabeledImageSet read_cifar_binary(const std::filesystem::path& file, CifarFlavor flavor,
                                  std::int64_t id_offset = 0);

// Directory holding the raw datasets; taken from LT3LSSL_DATA_ROOT.
std::optional<std::filesystem::path> data_root_from_env();

// Loaders for the conventional layouts under a data root:
//   mnist/{train,t10k}-{images-idx3,labels-idx1}-ubyte
//   cifar-10-batches-bin/{data_batch_[1-5],test_batch}.bin
//   cifar-100-binary/{train,test}.bin
// Return nullopt when the files are absent.
std::optional<LabeledImageSet> load_mnist(const std::filesystem::path& root, bool train);
std::optional<LabeledImageSet> load_cifar10(const std::filesystem::path& root, bool train);
std::optional<LabeledImageSet> load_cifar100(const std::filesystem::path& root, bool train);

// Manifest CSV `sample_id,path,label` with one 8-bit PNG per sample; paths
// are relative to the manifest's directory.
void write_manifest(const std::filesystem::path& dir, const LabeledImageSet& data,
                    const std::string& stem = "manifest");
LabeledImageSet read_manifest(const std::filesystem::path& manifest_csv);

}  // namespace lt3lssl::data
