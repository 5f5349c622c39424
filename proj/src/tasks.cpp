#include "ogdbench/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ogdbench/errors.hpp"
#include "ogdbench/rng.hpp"

namespace ogdbench {

const char* to_string(SuiteKind kind) {
  switch (kind) {
    case SuiteKind::kPermuted: return "permuted";
    case SuiteKind::kRotated: return "rotated";
    case SuiteKind::kSplit: return "split";
  }
  return "?";
}

SuiteKind suite_kind_from_string(const std::string& name) {
  if (name == "permuted") return SuiteKind::kPermuted;
  if (name == "rotated") return SuiteKind::kRotated;
  if (name == "split") return SuiteKind::kSplit;
  throw InvalidSpec("unknown suite kind: " + name);
}

std::string TransformDesc::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kPermutation:
      os << "permutation(seed=" << seed << ",task=" << task_index << ")";
      break;
    case Kind::kRotation:
      os << "rotation(" << angle_degrees << "deg)";
      break;
    case Kind::kSplit: {
      os << "split({";
      for (std::size_t i = 0; i < labels.size(); ++i) os << (i ? "," : "") << labels[i];
      os << "})";
      break;
    }
  }
  return os.str();
}

void SuiteSpec::validate() const {
  if (num_tasks < 1) throw InvalidSpec("suite: num_tasks must be >= 1");
  switch (suite) {
    case SuiteKind::kPermuted:
      break;
    case SuiteKind::kRotated:
      if (static_cast<int>(angles.size()) != num_tasks) {
        throw InvalidSpec("rotated suite: need one angle per task");
      }
      for (double a : angles) {
        if (!std::isfinite(a)) throw InvalidSpec("rotated suite: non-finite angle");
      }
      break;
    case SuiteKind::kSplit: {
      if (static_cast<int>(partitions.size()) != num_tasks) {
        throw InvalidSpec("split suite: need one label set per task");
      }
      std::set<int> seen;
      for (const auto& part : partitions) {
        if (part.empty()) throw InvalidSpec("split suite: empty label set");
        for (int label : part) {
          if (label < 0 || label > 9) throw InvalidSpec("split suite: label out of range");
          if (!seen.insert(label).second) {
            throw InvalidSpec("split suite: label " + std::to_string(label) +
                              " appears in more than one partition");
          }
        }
      }
      break;
    }
  }
}

std::string SuiteSpec::str() const {
  std::ostringstream os;
  os << to_string(suite) << ";tasks=" << num_tasks << ";seed=" << seed;
  if (suite == SuiteKind::kRotated) {
    os << ";angles=";
    for (std::size_t i = 0; i < angles.size(); ++i) os << (i ? "," : "") << angles[i];
  }
  if (suite == SuiteKind::kSplit) {
    os << ";partitions=";
    for (std::size_t i = 0; i < partitions.size(); ++i) {
      os << (i ? "|" : "");
      for (std::size_t j = 0; j < partitions[i].size(); ++j) {
        os << (j ? "," : "") << partitions[i][j];
      }
    }
  }
  return os.str();
}

std::vector<int> pixel_permutation(int n_pixels, std::uint64_t seed, int task_index) {
  std::vector<int> perm(n_pixels);
  for (int i = 0; i < n_pixels; ++i) perm[i] = i;
  Rng rng(mix_seed(seed, 0x5065726dULL + static_cast<std::uint64_t>(task_index)));
  rng.shuffle(perm);
  return perm;
}

namespace {

RowMat apply_permutation(const RowMat& images, const std::vector<int>& perm) {
  RowMat out(images.rows(), images.cols());
  for (Eigen::Index r = 0; r < images.rows(); ++r) {
    const double* src = images.data() + r * images.cols();
    double* dst = out.data() + r * images.cols();
    for (std::size_t j = 0; j < perm.size(); ++j) dst[j] = src[perm[j]];
  }
  return out;
}

std::map<int, int> identity_label_map() {
  std::map<int, int> m;
  for (int i = 0; i < 10; ++i) m[i] = i;
  return m;
}

}  // namespace

Vec rotate_image(const Vec& image, int rows, int cols, double angle_degrees) {
  if (image.size() != rows * cols) throw InvalidInput("rotate_image: shape mismatch");
  if (angle_degrees == 0.0) return image;
  const double rad = angle_degrees * M_PI / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cy = (rows - 1) / 2.0, cx = (cols - 1) / 2.0;
  Vec out(rows * cols);
  for (int r = 0; r < rows; ++r) {
    for (int col = 0; col < cols; ++col) {
      // inverse map: sample the source at the un-rotated position
      const double dx = col - cx, dy = r - cy;
      const double sx = c * dx + s * dy + cx;
      const double sy = -s * dx + c * dy + cy;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double wx = sx - x0, wy = sy - y0;
      auto at = [&](int y, int x) -> double {
        if (y < 0 || y >= rows || x < 0 || x >= cols) return 0.0;
        return image[y * cols + x];
      };
      double v = (1 - wy) * ((1 - wx) * at(y0, x0) + wx * at(y0, x0 + 1)) +
                 wy * ((1 - wx) * at(y0 + 1, x0) + wx * at(y0 + 1, x0 + 1));
      out[r * cols + col] = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

std::vector<TaskDataset> make_permuted_suite(const MnistData& base, int num_tasks,
                                             std::uint64_t seed,
                                             const std::vector<std::vector<int>>& forced_perms) {
  if (num_tasks < 1) throw InvalidSpec("permuted suite: num_tasks must be >= 1");
  const int n_pixels = static_cast<int>(base.train.images.cols());
  std::vector<TaskDataset> tasks;
  tasks.reserve(num_tasks);
  for (int t = 0; t < num_tasks; ++t) {
    std::vector<int> perm = t < static_cast<int>(forced_perms.size()) && !forced_perms[t].empty()
                                ? forced_perms[t]
                                : pixel_permutation(n_pixels, seed, t);
    if (static_cast<int>(perm.size()) != n_pixels) {
      throw InvalidSpec("permuted suite: permutation length mismatch");
    }
    TaskDataset task;
    task.task_id = t;
    task.head = 0;
    task.label_map = identity_label_map();
    task.transform = {TransformDesc::Kind::kPermutation, seed, t, 0.0, {}};
    task.train.images = apply_permutation(base.train.images, perm);
    task.train.labels = base.train.labels;
    task.test.images = apply_permutation(base.test.images, perm);
    task.test.labels = base.test.labels;
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::vector<TaskDataset> make_rotated_suite(const MnistData& base,
                                            const std::vector<double>& angles) {
  const int n_pixels = static_cast<int>(base.train.images.cols());
  const int side = static_cast<int>(std::lround(std::sqrt(double(n_pixels))));
  if (side * side != n_pixels) throw InvalidSpec("rotated suite: images are not square");
  std::vector<TaskDataset> tasks;
  tasks.reserve(angles.size());
  auto rotate_all = [&](const Dataset& src, double angle) {
    Dataset out;
    out.labels = src.labels;
    if (angle == 0.0) {
      out.images = src.images;
      return out;
    }
    out.images.resize(src.images.rows(), n_pixels);
    for (Eigen::Index r = 0; r < src.images.rows(); ++r) {
      out.images.row(r) = rotate_image(src.images.row(r).transpose(), side, side, angle);
    }
    return out;
  };
  for (std::size_t t = 0; t < angles.size(); ++t) {
    if (!std::isfinite(angles[t])) throw InvalidSpec("rotated suite: non-finite angle");
    TaskDataset task;
    task.task_id = static_cast<int>(t);
    task.head = 0;
    task.label_map = identity_label_map();
    task.transform = {TransformDesc::Kind::kRotation, 0, 0, angles[t], {}};
    task.train = rotate_all(base.train, angles[t]);
    task.test = rotate_all(base.test, angles[t]);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::vector<TaskDataset> make_split_suite(const MnistData& base,
                                          const std::vector<std::vector<int>>& partitions) {
  SuiteSpec check;
  check.suite = SuiteKind::kSplit;
  check.num_tasks = static_cast<int>(partitions.size());
  check.partitions = partitions;
  check.validate();

  std::vector<TaskDataset> tasks;
  tasks.reserve(partitions.size());
  for (std::size_t t = 0; t < partitions.size(); ++t) {
    std::vector<int> sorted = partitions[t];
    std::sort(sorted.begin(), sorted.end());
    TaskDataset task;
    task.task_id = static_cast<int>(t);
    task.head = static_cast<int>(t);
    for (std::size_t i = 0; i < sorted.size(); ++i) task.label_map[sorted[i]] = static_cast<int>(i);
    task.transform = {TransformDesc::Kind::kSplit, 0, 0, 0.0, sorted};

    auto filter = [&task](const Dataset& src) {
      std::vector<int> rows;
      for (int i = 0; i < src.size(); ++i) {
        if (task.label_map.count(src.labels[i])) rows.push_back(i);
      }
      Dataset out;
      out.images.resize(static_cast<int>(rows.size()), src.images.cols());
      out.labels.resize(static_cast<int>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        out.images.row(static_cast<int>(i)) = src.images.row(rows[i]);
        out.labels[static_cast<int>(i)] = src.labels[rows[i]];
      }
      return out;
    };
    task.train = filter(base.train);
    task.test = filter(base.test);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::vector<TaskDataset> build_suite(const MnistData& base, const SuiteSpec& spec) {
  spec.validate();
  switch (spec.suite) {
    case SuiteKind::kPermuted: return make_permuted_suite(base, spec.num_tasks, spec.seed);
    case SuiteKind::kRotated: return make_rotated_suite(base, spec.angles);
    case SuiteKind::kSplit: return make_split_suite(base, spec.partitions);
  }
  throw InvalidSpec("unreachable suite kind");
}

}  // namespace ogdbench
