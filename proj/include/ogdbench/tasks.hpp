#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ogdbench/mnist.hpp"

namespace ogdbench {

enum class SuiteKind { kPermuted, kRotated, kSplit };

const char* to_string(SuiteKind kind);
SuiteKind suite_kind_from_string(const std::string& name);

// How one task's images were derived from the base data.
struct TransformDesc {
  enum class Kind { kPermutation, kRotation, kSplit } kind;
  std::uint64_t seed = 0;          // permutation
  int task_index = 0;              // permutation
  double angle_degrees = 0.0;      // rotation
  std::vector<int> labels;         // split
  std::string str() const;
};

struct TaskDataset {
  int task_id = 0;
  Dataset train;
  Dataset test;
  int head = 0;
  std::map<int, int> label_map;  // original label -> head-local index
  TransformDesc transform;
};

struct SuiteSpec {
  SuiteKind suite = SuiteKind::kPermuted;
  int num_tasks = 5;
  std::vector<double> angles;                // rotated
  std::vector<std::vector<int>> partitions;  // split
  std::uint64_t seed = 0;

  void validate() const;
  // Stable textual form used for hashing and run identification.
  std::string str() const;
};

// Deterministic pixel permutation for (seed, task_index).
std::vector<int> pixel_permutation(int n_pixels, std::uint64_t seed, int task_index);

// Rotation about the image center by `angle_degrees`, bilinear interpolation,
// zero fill outside the source, output clamped to [0,1]. angle 0 returns the
// input bit-for-bit.
Vec rotate_image(const Vec& image, int rows, int cols, double angle_degrees);

std::vector<TaskDataset> make_permuted_suite(const MnistData& base, int num_tasks,
                                             std::uint64_t seed,
                                             const std::vector<std::vector<int>>& forced_perms = {});
std::vector<TaskDataset> make_rotated_suite(const MnistData& base,
                                            const std::vector<double>& angles);
std::vector<TaskDataset> make_split_suite(const MnistData& base,
                                          const std::vector<std::vector<int>>& partitions);

std::vector<TaskDataset> build_suite(const MnistData& base, const SuiteSpec& spec);

}  // namespace ogdbench
