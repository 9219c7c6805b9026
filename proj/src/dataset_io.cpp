#include "cleann/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace cleann {

static_assert(std::endian::native == std::endian::little,
              "dataset formats assume a little-endian host");

namespace {

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <class T>
T read_at(const std::vector<char>& buf, std::size_t offset) {
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

Dataset parse_vecs(const std::vector<char>& buf, bool bytes) {
  if (buf.empty()) throw ParseError("empty vector file", 0);
  Dataset out;
  std::size_t off = 0;
  const std::size_t elem = bytes ? 1 : sizeof(float);
  while (off < buf.size()) {
    if (buf.size() - off < sizeof(std::int32_t)) throw ParseError("truncated row header", off);
    const auto d = read_at<std::int32_t>(buf, off);
    if (d <= 0) throw ParseError("non-positive dimension " + std::to_string(d), off);
    if (out.dim == 0) {
      out.dim = static_cast<std::size_t>(d);
    } else if (static_cast<std::size_t>(d) != out.dim) {
      throw ParseError("inconsistent dimension " + std::to_string(d) + " (expected " +
                           std::to_string(out.dim) + ")",
                       off);
    }
    off += sizeof(std::int32_t);
    if (buf.size() - off < out.dim * elem) throw ParseError("truncated row payload", off);
    if (bytes) {
      for (std::size_t i = 0; i < out.dim; ++i) {
        out.values.push_back(static_cast<float>(static_cast<std::uint8_t>(buf[off + i])));
      }
    } else {
      const auto first = out.values.size();
      out.values.resize(first + out.dim);
      std::memcpy(out.values.data() + first, buf.data() + off, out.dim * sizeof(float));
    }
    off += out.dim * elem;
  }
  return out;
}

Dataset parse_fbin(const std::vector<char>& buf) {
  if (buf.size() < 8) throw ParseError("truncated fbin header", 0);
  const auto n = read_at<std::int32_t>(buf, 0);
  const auto d = read_at<std::int32_t>(buf, 4);
  if (n < 0) throw ParseError("negative point count", 0);
  if (d <= 0) throw ParseError("non-positive dimension", 4);
  const std::size_t need = std::size_t(n) * std::size_t(d) * sizeof(float);
  if (buf.size() - 8 != need) {
    throw ParseError("payload size " + std::to_string(buf.size() - 8) + " does not match " +
                         std::to_string(n) + "x" + std::to_string(d),
                     8);
  }
  Dataset out;
  out.dim = static_cast<std::size_t>(d);
  out.values.resize(std::size_t(n) * out.dim);
  std::memcpy(out.values.data(), buf.data() + 8, need);
  return out;
}

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

VectorFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".fvecs") return VectorFormat::Fvecs;
  if (ext == ".bvecs") return VectorFormat::Bvecs;
  if (ext == ".fbin" || ext == ".bin") return VectorFormat::Fbin;
  throw std::invalid_argument("cannot infer vector format from " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path, VectorFormat format) {
  const auto buf = slurp(path);
  switch (format) {
    case VectorFormat::Fvecs: return parse_vecs(buf, false);
    case VectorFormat::Bvecs: return parse_vecs(buf, true);
    case VectorFormat::Fbin: return parse_fbin(buf);
  }
  throw std::invalid_argument("unknown format");
}

Dataset load_dataset(const std::filesystem::path& path) {
  return load_dataset(path, format_from_path(path));
}

void write_dataset(const std::filesystem::path& path, const Dataset& data, VectorFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto n = data.size();
  const auto d = static_cast<std::int32_t>(data.dim);
  switch (format) {
    case VectorFormat::Fvecs:
      for (std::size_t i = 0; i < n; ++i) {
        put(out, d);
        out.write(reinterpret_cast<const char*>(data.row(i).data()),
                  static_cast<std::streamsize>(data.dim * sizeof(float)));
      }
      break;
    case VectorFormat::Bvecs:
      for (std::size_t i = 0; i < n; ++i) {
        put(out, d);
        for (float f : data.row(i)) {
          if (f < 0.0f || f > 255.0f || f != static_cast<float>(static_cast<int>(f))) {
            throw std::invalid_argument("bvecs can only hold integers in [0, 255]");
          }
          put(out, static_cast<std::uint8_t>(f));
        }
      }
      break;
    case VectorFormat::Fbin:
      put(out, static_cast<std::int32_t>(n));
      put(out, d);
      out.write(reinterpret_cast<const char*>(data.values.data()),
                static_cast<std::streamsize>(data.values.size() * sizeof(float)));
      break;
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  put(out, static_cast<std::uint32_t>(truth.rows.size()));
  put(out, static_cast<std::uint32_t>(truth.k));
  for (const auto& row : truth.rows) {
    if (row.size() != truth.k) throw std::invalid_argument("truth row length differs from k");
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t)));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

GroundTruth read_truth(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  if (buf.size() < 8) throw ParseError("truncated truth header", 0);
  const auto nq = read_at<std::uint32_t>(buf, 0);
  const auto k = read_at<std::uint32_t>(buf, 4);
  const std::size_t need = std::size_t(nq) * k * sizeof(std::uint32_t);
  if (buf.size() - 8 != need) throw ParseError("truth payload size mismatch", 8);
  GroundTruth t;
  t.k = k;
  t.rows.resize(nq, std::vector<std::uint32_t>(k));
  for (std::size_t i = 0; i < nq; ++i) {
    std::memcpy(t.rows[i].data(), buf.data() + 8 + i * k * sizeof(std::uint32_t),
                k * sizeof(std::uint32_t));
  }
  return t;
}

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (auto b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t dataset_hash(const Dataset& data) {
  const std::uint64_t dim = data.dim;
  auto h = fnv1a(std::as_bytes(std::span{&dim, 1}));
  return fnv1a(std::as_bytes(std::span{data.values}), h);
}

}  // namespace cleann
