#include "advfilter/tinynet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "advfilter/errors.hpp"
#include "advfilter/rng.hpp"

namespace advfilter {

namespace {

constexpr int kN = TinyNet::kInput;  // 64
constexpr int kC1 = 8, kC2 = 16;
constexpr int kP1 = kN / 2;   // 32
constexpr int kP2 = kP1 / 2;  // 16
constexpr std::size_t kFlat = static_cast<std::size_t>(kC2) * kP2 * kP2;  // 4096

void draw_uniform(SplitMix64& rng, std::vector<double>& w, double bound) {
  for (double& v : w) v = rng.next_symmetric(bound);
}

// conv 3x3, stride 1, zero pad 1; fixed accumulation order for determinism.
void conv3x3(const double* in, int channels_in, int n, const double* w, const double* b,
             int channels_out, double* out) {
  for (int o = 0; o < channels_out; ++o) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        double acc = b[o];
        for (int i = 0; i < channels_in; ++i) {
          const double* wf = w + ((static_cast<std::size_t>(o) * channels_in + i) * 9);
          const double* plane = in + static_cast<std::size_t>(i) * n * n;
          for (int ky = 0; ky < 3; ++ky) {
            int sy = y + ky - 1;
            if (sy < 0 || sy >= n) continue;
            for (int kx = 0; kx < 3; ++kx) {
              int sx = x + kx - 1;
              if (sx < 0 || sx >= n) continue;
              acc += wf[ky * 3 + kx] * plane[static_cast<std::size_t>(sy) * n + sx];
            }
          }
        }
        out[(static_cast<std::size_t>(o) * n + y) * n + x] = acc;
      }
    }
  }
}

// Gradient of conv3x3 with respect to its input, written as a gather so the
// result is independent of iteration schedule.
void conv3x3_backward_input(const double* dout, int channels_out, int n, const double* w,
                            int channels_in, double* din) {
  for (int i = 0; i < channels_in; ++i) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        double acc = 0.0;
        for (int o = 0; o < channels_out; ++o) {
          const double* wf = w + ((static_cast<std::size_t>(o) * channels_in + i) * 9);
          const double* dplane = dout + static_cast<std::size_t>(o) * n * n;
          for (int ky = 0; ky < 3; ++ky) {
            int oy = y - ky + 1;
            if (oy < 0 || oy >= n) continue;
            for (int kx = 0; kx < 3; ++kx) {
              int ox = x - kx + 1;
              if (ox < 0 || ox >= n) continue;
              acc += wf[ky * 3 + kx] * dplane[static_cast<std::size_t>(oy) * n + ox];
            }
          }
        }
        din[(static_cast<std::size_t>(i) * n + y) * n + x] = acc;
      }
    }
  }
}

void relu(std::vector<double>& v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

void avgpool2(const double* in, int channels, int n, double* out) {
  int m = n / 2;
  for (int c = 0; c < channels; ++c) {
    const double* plane = in + static_cast<std::size_t>(c) * n * n;
    double* oplane = out + static_cast<std::size_t>(c) * m * m;
    for (int y = 0; y < m; ++y) {
      for (int x = 0; x < m; ++x) {
        double s = plane[static_cast<std::size_t>(2 * y) * n + 2 * x] +
                   plane[static_cast<std::size_t>(2 * y) * n + 2 * x + 1] +
                   plane[static_cast<std::size_t>(2 * y + 1) * n + 2 * x] +
                   plane[static_cast<std::size_t>(2 * y + 1) * n + 2 * x + 1];
        oplane[static_cast<std::size_t>(y) * m + x] = s * 0.25;
      }
    }
  }
}

// Backward of avgpool: spread grad/4, then apply the ReLU mask of the
// pre-pool activation z (strict z > 0).
void unpool2_relu(const double* dpool, const std::vector<double>& z, int channels, int n,
                  double* dz) {
  int m = n / 2;
  for (int c = 0; c < channels; ++c) {
    const double* dplane = dpool + static_cast<std::size_t>(c) * m * m;
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        std::size_t zi = (static_cast<std::size_t>(c) * n + y) * n + x;
        double g = dplane[static_cast<std::size_t>(y / 2) * m + x / 2] * 0.25;
        dz[zi] = z[zi] > 0.0 ? g : 0.0;
      }
    }
  }
}

struct Activations {
  std::vector<double> z1, p1, z2, p2, logits, probs;
};

}  // namespace

TinyNet::TinyNet(std::uint64_t seed) : seed_(seed) {
  conv1_w_.resize(static_cast<std::size_t>(kC1) * 3 * 9);
  conv1_b_.assign(kC1, 0.0);
  conv2_w_.resize(static_cast<std::size_t>(kC2) * kC1 * 9);
  conv2_b_.assign(kC2, 0.0);
  dense_w_.resize(static_cast<std::size_t>(kClasses) * kFlat);
  dense_b_.assign(kClasses, 0.0);

  SplitMix64 rng(seed);
  draw_uniform(rng, conv1_w_, std::sqrt(6.0 / (3 * 9 + kC1 * 9)));
  draw_uniform(rng, conv2_w_, std::sqrt(6.0 / (kC1 * 9 + kC2 * 9)));
  draw_uniform(rng, dense_w_, std::sqrt(6.0 / (double(kFlat) + kClasses)));
}

std::vector<double> TinyNet::resample_input(const Frame& frame) {
  frame.validate();
  std::vector<double> tensor(kInputSize);
  for (int c = 0; c < 3; ++c) {
    for (int ty = 0; ty < kN; ++ty) {
      int y0 = ty * frame.height / kN;
      int y1 = std::max(y0 + 1, (ty + 1) * frame.height / kN);
      for (int tx = 0; tx < kN; ++tx) {
        int x0 = tx * frame.width / kN;
        int x1 = std::max(x0 + 1, (tx + 1) * frame.width / kN);
        double sum = 0.0;
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            sum += frame.at(x, y, c);
          }
        }
        tensor[(static_cast<std::size_t>(c) * kN + ty) * kN + tx] =
            sum / (static_cast<double>(y1 - y0) * (x1 - x0));
      }
    }
  }
  return tensor;
}

namespace {

Activations run_forward(const TinyNet& net, const std::vector<double>& input) {
  if (input.size() != TinyNet::kInputSize) {
    throw ShapeMismatch("model input must be 3*64*64 values");
  }
  Activations a;
  a.z1.resize(static_cast<std::size_t>(kC1) * kN * kN);
  conv3x3(input.data(), 3, kN, net.conv1_w().data(), net.conv1_b().data(), kC1, a.z1.data());
  std::vector<double> r1 = a.z1;
  relu(r1);
  a.p1.resize(static_cast<std::size_t>(kC1) * kP1 * kP1);
  avgpool2(r1.data(), kC1, kN, a.p1.data());

  a.z2.resize(static_cast<std::size_t>(kC2) * kP1 * kP1);
  conv3x3(a.p1.data(), kC1, kP1, net.conv2_w().data(), net.conv2_b().data(), kC2, a.z2.data());
  std::vector<double> r2 = a.z2;
  relu(r2);
  a.p2.resize(kFlat);
  avgpool2(r2.data(), kC2, kP1, a.p2.data());

  a.logits.resize(TinyNet::kClasses);
  for (int k = 0; k < TinyNet::kClasses; ++k) {
    double acc = net.dense_b()[k];
    const double* row = net.dense_w().data() + static_cast<std::size_t>(k) * kFlat;
    for (std::size_t j = 0; j < kFlat; ++j) acc += row[j] * a.p2[j];
    a.logits[k] = acc;
  }

  double mx = *std::max_element(a.logits.begin(), a.logits.end());
  a.probs.resize(TinyNet::kClasses);
  double z = 0.0;
  for (int k = 0; k < TinyNet::kClasses; ++k) {
    a.probs[k] = std::exp(a.logits[k] - mx);
    z += a.probs[k];
  }
  for (double& p : a.probs) p /= z;
  return a;
}

}  // namespace

Prediction TinyNet::predict(const std::vector<double>& input) const {
  Activations a = run_forward(*this, input);
  Prediction pred;
  pred.label = 0;
  for (int k = 1; k < kClasses; ++k) {
    if (a.logits[k] > a.logits[pred.label]) pred.label = k;
  }
  pred.logits = std::move(a.logits);
  pred.probabilities = std::move(a.probs);
  return pred;
}

double TinyNet::loss(const std::vector<double>& input, int target) const {
  if (target < 0 || target >= kClasses) throw ShapeMismatch("target label out of range");
  Activations a = run_forward(*this, input);
  return -std::log(a.probs[target]);
}

std::vector<double> TinyNet::input_gradient(const std::vector<double>& input, int target) const {
  if (target < 0 || target >= kClasses) throw ShapeMismatch("target label out of range");
  Activations a = run_forward(*this, input);

  // d(-log p[t])/dlogits = probs - onehot(t)
  std::vector<double> dlogits = a.probs;
  dlogits[target] -= 1.0;

  std::vector<double> dp2(kFlat);
  for (std::size_t j = 0; j < kFlat; ++j) {
    double acc = 0.0;
    for (int k = 0; k < kClasses; ++k) {
      acc += dlogits[k] * dense_w_[static_cast<std::size_t>(k) * kFlat + j];
    }
    dp2[j] = acc;
  }

  std::vector<double> dz2(static_cast<std::size_t>(kC2) * kP1 * kP1);
  unpool2_relu(dp2.data(), a.z2, kC2, kP1, dz2.data());

  std::vector<double> dp1(static_cast<std::size_t>(kC1) * kP1 * kP1);
  conv3x3_backward_input(dz2.data(), kC2, kP1, conv2_w_.data(), kC1, dp1.data());

  std::vector<double> dz1(static_cast<std::size_t>(kC1) * kN * kN);
  unpool2_relu(dp1.data(), a.z1, kC1, kN, dz1.data());

  std::vector<double> din(kInputSize);
  conv3x3_backward_input(dz1.data(), kC1, kN, conv1_w_.data(), 3, din.data());
  return din;
}

// --- serialization --------------------------------------------------------------

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (in.gcount() != 8) throw SerializationError("truncated parameter file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

double get_f64(std::istream& in) {
  std::uint64_t v = get_u64(in);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void TinyNet::dump(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  put_u64(out, seed_);
  for (const auto* tensor : {&conv1_w_, &conv1_b_, &conv2_w_, &conv2_b_, &dense_w_, &dense_b_}) {
    for (double v : *tensor) put_f64(out, v);
  }
  if (!out) throw IoError("short write to " + path.string());
}

TinyNet TinyNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  TinyNet net;
  net.seed_ = get_u64(in);
  net.conv1_w_.resize(static_cast<std::size_t>(kC1) * 3 * 9);
  net.conv1_b_.resize(kC1);
  net.conv2_w_.resize(static_cast<std::size_t>(kC2) * kC1 * 9);
  net.conv2_b_.resize(kC2);
  net.dense_w_.resize(static_cast<std::size_t>(kClasses) * kFlat);
  net.dense_b_.resize(kClasses);
  for (auto* tensor : {&net.conv1_w_, &net.conv1_b_, &net.conv2_w_, &net.conv2_b_, &net.dense_w_,
                       &net.dense_b_}) {
    for (double& v : *tensor) v = get_f64(in);
  }
  return net;
}

}  // namespace advfilter
