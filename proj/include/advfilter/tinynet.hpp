#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "advfilter/frame.hpp"

namespace advfilter {

struct Prediction {
  std::vector<double> logits;         // 10
  std::vector<double> probabilities;  // 10, sums to 1
  int label = 0;                      // argmax, ties toward the lowest index
};

// Compact fixed-architecture CNN used as the attack target. All weights are
// derived deterministically from a seed, so every build classifies identically.
//
// Input is a 3x64x64 planar tensor in [0,1]. Layers:
//   conv 3->8 (3x3, pad 1) . ReLU . avgpool 2x2
//   conv 8->16 (3x3, pad 1) . ReLU . avgpool 2x2
//   flatten (16*16*16 = 4096) . dense -> 10 . softmax
class TinyNet {
 public:
  static constexpr int kInput = 64;
  static constexpr int kClasses = 10;
  static constexpr std::size_t kInputSize = 3ull * kInput * kInput;

  explicit TinyNet(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  // Box-average resample of an RGB frame to the 3x64x64 planar input tensor
  // (channel-major: tensor[c][y][x]).
  static std::vector<double> resample_input(const Frame& frame);

  // Full forward pass: logits, stable softmax probabilities, argmax label.
  Prediction predict(const std::vector<double>& input) const;

  // Cross-entropy loss -log p[target].
  double loss(const std::vector<double>& input, int target) const;

  // Exact reverse-mode gradient of the loss with respect to the input tensor.
  std::vector<double> input_gradient(const std::vector<double>& input, int target) const;

  const std::vector<double>& conv1_w() const { return conv1_w_; }
  const std::vector<double>& conv1_b() const { return conv1_b_; }
  const std::vector<double>& conv2_w() const { return conv2_w_; }
  const std::vector<double>& conv2_b() const { return conv2_b_; }
  const std::vector<double>& dense_w() const { return dense_w_; }
  const std::vector<double>& dense_b() const { return dense_b_; }

  // Mutable access so tests can probe parameter sensitivity.
  std::vector<double>& mutable_dense_w() { return dense_w_; }

  // Binary parameter dump: seed as u64 LE, then each tensor's doubles LE in
  // declaration order (conv1_w, conv1_b, conv2_w, conv2_b, dense_w, dense_b).
  void dump(const std::filesystem::path& path) const;
  static TinyNet load(const std::filesystem::path& path);

 private:
  TinyNet() = default;

  std::uint64_t seed_ = 0;
  std::vector<double> conv1_w_;  // [8][3][3][3]
  std::vector<double> conv1_b_;  // [8]
  std::vector<double> conv2_w_;  // [16][8][3][3]
  std::vector<double> conv2_b_;  // [16]
  std::vector<double> dense_w_;  // [10][4096]
  std::vector<double> dense_b_;  // [10]
};

}  // namespace advfilter
