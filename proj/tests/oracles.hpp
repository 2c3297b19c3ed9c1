#pragma once

// Independent reference implementations the main code is checked against.

#include <cmath>
#include <vector>

#include "advfilter/tinynet.hpp"

namespace testutil {

// Direct-convolution forward pass written with explicit zero-padded buffers
// and a different loop structure than the production kernel. Returns logits.
inline std::vector<double> oracle_logits(const advfilter::TinyNet& net,
                                         const std::vector<double>& input) {
  auto pad = [](const std::vector<double>& planes, int channels, int n) {
    int pn = n + 2;
    std::vector<double> out(static_cast<std::size_t>(channels) * pn * pn, 0.0);
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          out[(static_cast<std::size_t>(c) * pn + (y + 1)) * pn + (x + 1)] =
              planes[(static_cast<std::size_t>(c) * n + y) * n + x];
    return out;
  };
  auto conv = [&](const std::vector<double>& in, int cin, int n, const std::vector<double>& w,
                  const std::vector<double>& b, int cout) {
    auto padded = pad(in, cin, n);
    int pn = n + 2;
    std::vector<double> out(static_cast<std::size_t>(cout) * n * n);
    for (int o = 0; o < cout; ++o) {
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          double acc = b[static_cast<std::size_t>(o)];
          for (int i = 0; i < cin; ++i) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                acc += w[(((static_cast<std::size_t>(o) * cin + i) * 3 + ky) * 3 + kx)] *
                       padded[(static_cast<std::size_t>(i) * pn + y + ky) * pn + x + kx];
              }
            }
          }
          out[(static_cast<std::size_t>(o) * n + y) * n + x] = acc;
        }
      }
    }
    return out;
  };
  auto relu_pool = [](const std::vector<double>& in, int channels, int n) {
    int m = n / 2;
    std::vector<double> out(static_cast<std::size_t>(channels) * m * m);
    for (int c = 0; c < channels; ++c) {
      for (int y = 0; y < m; ++y) {
        for (int x = 0; x < m; ++x) {
          double s = 0.0;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              double v = in[(static_cast<std::size_t>(c) * n + 2 * y + dy) * n + 2 * x + dx];
              s += std::max(v, 0.0);
            }
          }
          out[(static_cast<std::size_t>(c) * m + y) * m + x] = s / 4.0;
        }
      }
    }
    return out;
  };

  auto h1 = relu_pool(conv(input, 3, 64, net.conv1_w(), net.conv1_b(), 8), 8, 64);
  auto h2 = relu_pool(conv(h1, 8, 32, net.conv2_w(), net.conv2_b(), 16), 16, 32);
  std::vector<double> logits(10);
  for (int k = 0; k < 10; ++k) {
    double acc = net.dense_b()[static_cast<std::size_t>(k)];
    for (std::size_t j = 0; j < h2.size(); ++j) acc += net.dense_w()[k * h2.size() + j] * h2[j];
    logits[static_cast<std::size_t>(k)] = acc;
  }
  return logits;
}

// Central finite difference of the loss along one input coordinate.
inline double finite_diff(const advfilter::TinyNet& net, std::vector<double> input, int target,
                          std::size_t coord, double h = 1e-4) {
  input[coord] += h;
  double up = net.loss(input, target);
  input[coord] -= 2 * h;
  double down = net.loss(input, target);
  return (up - down) / (2 * h);
}

inline double relative_error(double a, double b) {
  double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / scale;
}

// Central difference with step-size refinement: when [x-h, x+h] straddles a
// ReLU kink the two step sizes disagree, so shrink until the estimate is
// self-consistent. The result converges to the true one-point derivative
// regardless of what the analytic code claims, so it stays a valid oracle.
inline double finite_diff_adaptive(const advfilter::TinyNet& net, const std::vector<double>& input,
                                   int target, std::size_t coord, bool* converged = nullptr) {
  double estimate = 0.0;
  for (double h : {1e-4, 1e-5, 1e-6, 1e-7}) {
    double coarse = finite_diff(net, input, target, coord, h);
    estimate = finite_diff(net, input, target, coord, h / 2);
    if (relative_error(coarse, estimate) <= 1e-4) {
      if (converged) *converged = true;
      return estimate;
    }
  }
  if (converged) *converged = false;
  return estimate;
}

}  // namespace testutil
