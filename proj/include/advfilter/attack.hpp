#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "advfilter/frame.hpp"
#include "advfilter/tinynet.hpp"

namespace advfilter {

struct AttackConfig {
  std::vector<double> epsilons = {0.01, 0.02, 0.05, 0.1, 0.2};
  double clip_min = 0.0;
  double clip_max = 1.0;
  std::uint64_t seed = 42;  // model seed

  // Epsilons must be strictly positive, strictly increasing, each <= 1.
  void validate() const;
};

// Sign of the loss gradient, evaluated at the model's 64x64 input resolution
// against the model's own predicted label, then upsampled nearest-neighbor to
// frame resolution. Entries are -1, 0, or +1 per pixel per channel.
std::vector<double> fgsm_sign_map(const TinyNet& net, const Frame& frame);

// out = clamp(in + epsilon * sign, clip_min..clip_max), elementwise.
Frame apply_sign_map(const Frame& frame, const std::vector<double>& sign_map, double epsilon,
                     double clip_min = 0.0, double clip_max = 1.0);

// Single-frame FGSM perturbation: fgsm(f, eps) = apply(f, sign_map(f), eps).
Frame fgsm(const TinyNet& net, const Frame& frame, double epsilon);

// Reads every clean frame of `manifest` from `in_dir`, writes it plus one
// perturbed variant per epsilon into `out_dir`, and returns the combined
// manifest (sorted; |clean| * (1 + |epsilons|) entries). The sign map is
// computed once per frame and shared across epsilons. Frames are processed
// in parallel across `workers`; files and manifest entries always appear in
// index order.
DatasetManifest attack_dataset(const DatasetManifest& manifest,
                               const std::filesystem::path& in_dir,
                               const std::filesystem::path& out_dir, const AttackConfig& config,
                               int workers = 1);

}  // namespace advfilter
