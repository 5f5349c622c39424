#include "ogdbench/mnist.hpp"

#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ogdbench/errors.hpp"

namespace ogdbench {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;  // idx3, unsigned byte
constexpr std::uint32_t kLabelsMagic = 0x00000801;  // idx1, unsigned byte

// Reads the whole file through zlib, which transparently handles both gzip
// streams and plain files.
std::vector<unsigned char> read_file(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw FormatError(path, "cannot open file");
  std::vector<unsigned char> bytes;
  unsigned char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) {
    bytes.insert(bytes.end(), buf, buf + n);
  }
  const bool read_error = n < 0;
  gzclose(f);
  if (read_error) throw FormatError(path, "read/decompress failed");
  return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

}  // namespace

Dataset load_idx_pair(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_file(images_path);
  if (img.size() < 16) throw FormatError(images_path, "truncated header");
  if (read_be32(img, 0) != kImagesMagic) {
    throw FormatError(images_path, "bad magic (expected idx3 image file)");
  }
  const std::uint32_t n = read_be32(img, 4);
  const std::uint32_t rows = read_be32(img, 8);
  const std::uint32_t cols = read_be32(img, 12);
  const std::size_t pixels = std::size_t(rows) * cols;
  if (img.size() != 16 + std::size_t(n) * pixels) {
    throw FormatError(images_path, "size does not match header counts");
  }

  const auto lab = read_file(labels_path);
  if (lab.size() < 8) throw FormatError(labels_path, "truncated header");
  if (read_be32(lab, 0) != kLabelsMagic) {
    throw FormatError(labels_path, "bad magic (expected idx1 label file)");
  }
  const std::uint32_t nl = read_be32(lab, 4);
  if (lab.size() != 8 + std::size_t(nl)) {
    throw FormatError(labels_path, "size does not match header count");
  }
  if (nl != n) {
    throw FormatError(labels_path, "label count " + std::to_string(nl) +
                                       " does not match image count " + std::to_string(n));
  }

  Dataset ds;
  ds.images.resize(n, static_cast<int>(pixels));
  ds.labels.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const unsigned char* src = img.data() + 16 + std::size_t(i) * pixels;
    double* dst = ds.images.data() + std::size_t(i) * pixels;
    for (std::size_t j = 0; j < pixels; ++j) dst[j] = src[j] / 255.0;
    const unsigned char y = lab[8 + i];
    if (y > 9) throw FormatError(labels_path, "label out of range [0,10)");
    ds.labels[i] = y;
  }
  return ds;
}

MnistData load_mnist(const std::string& train_images_path, const std::string& train_labels_path,
                     const std::string& test_images_path, const std::string& test_labels_path) {
  return {load_idx_pair(train_images_path, train_labels_path),
          load_idx_pair(test_images_path, test_labels_path)};
}

MnistData load_mnist_dir(const std::string& dir) {
  auto pick = [&dir](const std::string& stem) {
    namespace fs = std::filesystem;
    for (const char* suffix : {"", ".gz"}) {
      fs::path p = fs::path(dir) / (stem + suffix);
      if (fs::exists(p)) return p.string();
    }
    throw FormatError((std::filesystem::path(dir) / stem).string(), "file not found");
  };
  return load_mnist(pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"),
                    pick("t10k-images-idx3-ubyte"), pick("t10k-labels-idx1-ubyte"));
}

}  // namespace ogdbench
