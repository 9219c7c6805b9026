#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cleann {

/// Dense row-major float dataset.
struct Dataset {
  std::size_t dim = 0;
  std::vector<float> values;

  std::size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<const float> rows(std::size_t first, std::size_t count) const {
    return {values.data() + first * dim, count * dim};
  }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// All formats are little-endian.
//   fvecs: per row {i32 dim, f32[dim]}
//   bvecs: per row {i32 dim, u8[dim]}   (widened to float on load)
//   fbin : {i32 n, i32 dim, f32[n*dim]}
enum class VectorFormat { Fvecs, Bvecs, Fbin };

VectorFormat format_from_path(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& path, VectorFormat format);
Dataset load_dataset(const std::filesystem::path& path);

void write_dataset(const std::filesystem::path& path, const Dataset& data, VectorFormat format);

/// Ground truth: {u32 nq, u32 k}, then nq rows of k u32 ids.
struct GroundTruth {
  std::size_t k = 0;
  std::vector<std::vector<std::uint32_t>> rows;
};

void write_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_truth(const std::filesystem::path& path);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t dataset_hash(const Dataset& data);

}  // namespace cleann
