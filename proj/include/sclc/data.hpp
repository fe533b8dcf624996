#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sclc/tensor.hpp"

namespace sclc {

struct Dataset {
  RealTensor4 images;       // (N, C, H, W), pixel values in [0, 1]
  std::vector<int> labels;  // class index per image
  int class_count = 0;
  std::string name;

  int size() const { return images.vec().empty() ? 0 : images.shape().s; }
  void validate() const;  // throws FormatError on broken invariants
};

// Gathers the given sample indices into a contiguous batch.
RealTensor4 gather_images(const Dataset& d, const std::vector<int>& idx);
std::vector<int> gather_labels(const Dataset& d, const std::vector<int>& idx);

// First n samples (for desk-scale subsets).
Dataset take(const Dataset& d, int n);

// IDX files (big-endian magic 2051 images / 2049 labels); 28x28 images are
// zero-padded to 32x32 for the power-of-two FFT path. Pixels divided by 255.
Dataset load_mnist(const std::string& dir, const std::string& split);

// CIFAR-10 binary batches: 3073-byte records, label byte + 3x32x32 planes.
Dataset load_cifar10(const std::string& dir, const std::string& split);

// Box-filter downsample or zero-insertion upsample to side x side.
Dataset resample(const Dataset& d, int side);

// Deterministic 10-class synthetic image set in CIFAR-10 layout, used when
// no real dataset directory is available. Classes differ in low-frequency
// structure (linear evidence) and grating energy (nonlinear evidence);
// high-frequency noise is added on top.
void write_synthetic_cifar(const std::string& dir, int train_count,
                           int test_count, std::uint64_t seed);

}  // namespace sclc
