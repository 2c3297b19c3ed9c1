#include "advfilter/features.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "advfilter/errors.hpp"

namespace advfilter {

double stat_diff(const Frame& a, const Frame& b) {
  if (!a.same_size(b)) {
    throw DimensionMismatch("stat_diff requires frames of identical dimensions");
  }
  auto sum_sq_dev = [](const Frame& f) {
    double mean = 0.0;
    for (double v : f.pixels) mean += v;
    mean /= static_cast<double>(f.pixels.size());
    double ss = 0.0;
    for (double v : f.pixels) ss += (v - mean) * (v - mean);
    return ss;
  };
  return sum_sq_dev(a) - sum_sq_dev(b);
}

namespace {

// Box downsample by integer factor: full blocks only, remainder rows/columns
// dropped. Returns a single-channel plane.
std::vector<double> downsample_channel(const Frame& f, int channel, int scale, int* out_w,
                                       int* out_h) {
  int w = f.width / scale;
  int h = f.height / scale;
  std::vector<double> plane(static_cast<std::size_t>(w) * h);
  double inv = 1.0 / (static_cast<double>(scale) * scale);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      for (int dy = 0; dy < scale; ++dy) {
        for (int dx = 0; dx < scale; ++dx) {
          sum += f.at(x * scale + dx, y * scale + dy, channel);
        }
      }
      plane[static_cast<std::size_t>(y) * w + x] = sum * inv;
    }
  }
  *out_w = w;
  *out_h = h;
  return plane;
}

struct PlaneStats {
  double mean, variance, neighbor_diff;
};

PlaneStats plane_stats(const std::vector<double>& plane, int w, int h) {
  double mean = 0.0;
  for (double v : plane) mean += v;
  mean /= static_cast<double>(plane.size());

  double var = 0.0;
  for (double v : plane) var += (v - mean) * (v - mean);
  var /= static_cast<double>(plane.size());

  // Mean |difference| over all horizontally and vertically adjacent pairs.
  double diff_sum = 0.0;
  std::size_t pairs = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      diff_sum += std::abs(plane[static_cast<std::size_t>(y) * w + x + 1] -
                           plane[static_cast<std::size_t>(y) * w + x]);
      ++pairs;
    }
  }
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x < w; ++x) {
      diff_sum += std::abs(plane[static_cast<std::size_t>(y + 1) * w + x] -
                           plane[static_cast<std::size_t>(y) * w + x]);
      ++pairs;
    }
  }
  double ndiff = pairs == 0 ? 0.0 : diff_sum / static_cast<double>(pairs);
  return {mean, var, ndiff};
}

}  // namespace

std::vector<double> extract_features(const Frame& frame, const Frame* prev) {
  if (frame.width < 4 || frame.height < 4) {
    throw FrameTooSmall("feature extraction needs at least 4x4 frames, got " +
                        std::to_string(frame.width) + "x" + std::to_string(frame.height));
  }
  std::vector<double> features;
  features.reserve(kFeatureDim);
  for (int scale : {1, 2, 4}) {
    for (int channel = 0; channel < 3; ++channel) {
      int w, h;
      auto plane = downsample_channel(frame, channel, scale, &w, &h);
      PlaneStats s = plane_stats(plane, w, h);
      features.push_back(s.mean);
      features.push_back(s.variance);
      features.push_back(s.neighbor_diff);
    }
  }
  features.push_back(prev ? stat_diff(frame, *prev) : 0.0);
  return features;
}

void write_feature_csv(const std::vector<std::vector<double>>& rows,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "index";
  for (int i = 0; i < kFeatureDim; ++i) {
    char col[8];
    std::snprintf(col, sizeof col, ",f%02d", i);
    out << col;
  }
  out << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << r;
    for (double v : rows[r]) {
      char buf[40];
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace advfilter
