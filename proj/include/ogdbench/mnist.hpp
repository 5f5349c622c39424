#pragma once

#include <Eigen/Dense>
#include <string>

#include "ogdbench/model.hpp"

namespace ogdbench {

// One labeled image set. Pixels are stored row-major (one image per matrix
// row) as raw_byte / 255 in [0, 1].
struct Dataset {
  RowMat images;           // N x (rows*cols)
  Eigen::VectorXi labels;  // N, values in [0, 10)

  int size() const { return static_cast<int>(images.rows()); }
};

struct MnistData {
  Dataset train;
  Dataset test;
};

// IDX readers. Files may be gzip-compressed (detected by the 1f 8b prefix);
// both forms decode to the same Dataset. Malformed input raises FormatError
// naming the offending file.
Dataset load_idx_pair(const std::string& images_path, const std::string& labels_path);

MnistData load_mnist(const std::string& train_images_path, const std::string& train_labels_path,
                     const std::string& test_images_path, const std::string& test_labels_path);

// Convenience: the four standard filenames under one directory, accepting
// either plain or .gz files.
MnistData load_mnist_dir(const std::string& dir);

}  // namespace ogdbench
