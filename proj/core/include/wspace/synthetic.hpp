#pragma once

#include <cstdint>
#include <string>

#include "wspace/measure.hpp"

namespace wspace {

enum class Generator { kBlurredBlobs, kRandomDirichlet };

Generator parse_generator(const std::string& s);
std::string to_string(Generator g);

struct SyntheticSpec {
  int rows = 8;
  int cols = 8;
  double p = 2.0;
  int n_train = 100;
  int n_test = 20;
  Generator generator = Generator::kBlurredBlobs;
  std::uint64_t seed = 0;
  /// blurred-blobs: class c puts its blobs around anchor c (classes 0 and 1
  /// sit in opposite corners).
  int classes = 2;
  /// random-dirichlet: concentration of the symmetric Dirichlet law.
  double alpha = 1.0;
};

/// Deterministic in the spec (including the seed). Labels are filled for the
/// blob generator.
MeasureDataset make_synthetic_dataset(const SyntheticSpec& spec);

/// Reads an IDX image file (unsigned byte, 3 dimensions) and turns the first
/// n_train + n_test nonzero images into measures on the image grid.
MeasureDataset convert_idx(const std::string& images_path, int n_train, int n_test, double p = 2.0,
                           const std::string& labels_path = "");

}  // namespace wspace
