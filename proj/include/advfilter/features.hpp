#pragma once

#include <filesystem>
#include <vector>

#include "advfilter/frame.hpp"

namespace advfilter {

// Fixed feature layout: for each scale in {1, 2, 4} (box downsample factor),
// for each channel in {R, G, B}: mean, population variance, mean absolute
// neighbor difference (horizontal + vertical pairs). 27 values, scale-major,
// then one temporal term: stat_diff against the previous frame (0.0 when
// there is none). 28 total.
constexpr int kFeatureDim = 28;

// Sum of squared deviations from the mean of a, minus the same for b, taken
// over every pixel of every channel. Antisymmetric; 0 for identical frames.
double stat_diff(const Frame& a, const Frame& b);

// prev == nullptr means "no previous frame" (feature 27 becomes 0.0).
// Throws FrameTooSmall when width or height < 4.
std::vector<double> extract_features(const Frame& frame, const Frame* prev);

// Debug dump: header "index,f00,...,f27", one row per vector, full precision.
void write_feature_csv(const std::vector<std::vector<double>>& rows,
                       const std::filesystem::path& path);

}  // namespace advfilter
