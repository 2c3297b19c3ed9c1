#include "advfilter/tinynet.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

#include "advfilter/errors.hpp"
#include "advfilter/rng.hpp"

using namespace advfilter;

namespace {

std::vector<double> random_input(std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> input(TinyNet::kInputSize);
  for (double& v : input) v = rng.next_unit();
  return input;
}

}  // namespace

TEST_CASE("construction is deterministic and seed-sensitive") {
  TinyNet a(42), b(42), c(43);
  CHECK(a.conv1_w() == b.conv1_w());
  CHECK(a.conv2_w() == b.conv2_w());
  CHECK(a.dense_w() == b.dense_w());
  CHECK(a.conv1_w() != c.conv1_w());
}

TEST_CASE("initial weights respect the per-layer uniform bounds, biases zero") {
  TinyNet net(42);
  const double bound1 = std::sqrt(6.0 / (27 + 72));    // 3*9 in, 8*9 out
  const double bound2 = std::sqrt(6.0 / (72 + 144));   // 8*9 in, 16*9 out
  const double bound3 = std::sqrt(6.0 / (4096 + 10));
  CHECK(net.conv1_w().size() == 216);
  CHECK(net.conv2_w().size() == 1152);
  CHECK(net.dense_w().size() == 40960);
  for (double w : net.conv1_w()) CHECK(std::abs(w) <= bound1);
  for (double w : net.conv2_w()) CHECK(std::abs(w) <= bound2);
  for (double w : net.dense_w()) CHECK(std::abs(w) <= bound3);
  for (double b : net.conv1_b()) CHECK(b == 0.0);
  for (double b : net.conv2_b()) CHECK(b == 0.0);
  for (double b : net.dense_b()) CHECK(b == 0.0);
}

TEST_CASE("all-zero input flows to uniform probabilities") {
  TinyNet net(7);
  std::vector<double> zeros(TinyNet::kInputSize, 0.0);
  auto pred = net.predict(zeros);
  for (int k = 0; k < 10; ++k) {
    CHECK(pred.logits[static_cast<std::size_t>(k)] == 0.0);
    CHECK(pred.probabilities[static_cast<std::size_t>(k)] == doctest::Approx(0.1).epsilon(1e-12));
  }
  CHECK(pred.label == 0);  // tie broken toward the lowest index
  CHECK(net.loss(zeros, 3) == doctest::Approx(-std::log(0.1)).epsilon(1e-12));
}

TEST_CASE("probabilities are a proper distribution") {
  TinyNet net(9);
  for (std::uint64_t s : {1ull, 2ull, 3ull}) {
    auto pred = net.predict(random_input(s));
    double sum = 0.0;
    for (double p : pred.probabilities) {
      CHECK(p > 0.0);
      CHECK(p < 1.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(pred.label == static_cast<int>(std::max_element(pred.probabilities.begin(),
                                                          pred.probabilities.end()) -
                                         pred.probabilities.begin()));
  }
}

TEST_CASE("forward pass matches the naive direct-convolution reference") {
  TinyNet net(42);
  for (std::uint64_t s : {11ull, 12ull, 13ull}) {
    auto input = random_input(s);
    auto logits = net.predict(input).logits;
    auto expected = testutil::oracle_logits(net, input);
    for (int k = 0; k < 10; ++k) {
      CAPTURE(s);
      CAPTURE(k);
      CHECK(std::abs(logits[static_cast<std::size_t>(k)] -
                     expected[static_cast<std::size_t>(k)]) <= 1e-6);
    }
  }
}

TEST_CASE("analytic input gradient matches finite differences") {
  // 5 nets x a handful of coordinates here; the acceptance suite runs the
  // full 64-coordinate sweep.
  for (std::uint64_t seed : {101ull, 102ull, 103ull, 104ull, 105ull}) {
    TinyNet net(seed);
    auto input = random_input(seed * 31 + 1);
    int target = static_cast<int>(seed % 10);
    auto grad = net.input_gradient(input, target);

    SplitMix64 pick(seed);
    for (int k = 0; k < 8; ++k) {
      std::size_t coord = pick.next_index(input.size());
      double fd = testutil::finite_diff_adaptive(net, input, target, coord);
      CAPTURE(seed);
      CAPTURE(coord);
      CHECK(testutil::relative_error(grad[coord], fd) <= 1e-3);
    }
  }
}

TEST_CASE("gradient is not degenerate and reacts to the dense layer") {
  TinyNet net(55);
  auto input = random_input(5);
  auto grad = net.input_gradient(input, 2);
  double norm = 0.0;
  for (double g : grad) norm += g * g;
  CHECK(norm > 0.0);

  TinyNet doubled(55);
  for (double& w : doubled.mutable_dense_w()) w *= 2.0;
  auto grad2 = doubled.input_gradient(input, 2);
  CHECK(grad != grad2);
}

TEST_CASE("softmax stays finite under large inputs") {
  TinyNet net(3);
  auto input = random_input(77);
  for (double& v : input) v *= 1000.0;
  auto pred = net.predict(input);
  for (double p : pred.probabilities) CHECK(std::isfinite(p));
  CHECK(std::isfinite(net.loss(input, 0)));
}

TEST_CASE("shape violations are typed errors") {
  TinyNet net(1);
  std::vector<double> wrong(100, 0.0);
  CHECK_THROWS_AS(net.predict(wrong), ShapeMismatch);
  CHECK_THROWS_AS(net.loss(std::vector<double>(TinyNet::kInputSize, 0.0), 11), ShapeMismatch);
}

TEST_CASE("resampling: 64x64 frames pass through unchanged") {
  Frame f = testutil::synthetic_clean_frame(0, 64, 64);
  auto tensor = TinyNet::resample_input(f);
  REQUIRE(tensor.size() == TinyNet::kInputSize);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      for (int c = 0; c < 3; ++c) {
        CHECK(tensor[(static_cast<std::size_t>(c) * 64 + y) * 64 + x] == f.at(x, y, c));
      }
    }
  }
}

TEST_CASE("resampling: constant frames stay constant at any size") {
  for (auto [w, h] : {std::pair{128, 96}, {31, 17}, {200, 64}}) {
    Frame f = testutil::constant_frame(w, h, 0.25);
    auto tensor = TinyNet::resample_input(f);
    for (double v : tensor) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("resampling: 128x128 box average of 2x2 blocks") {
  Frame f = testutil::make_frame(128, 128, [](int x, int y, int) {
    return ((x / 2 + y / 2) % 2) == 0 ? 0.2 : 0.6;
  });
  // Each 2x2 source block is constant, so the target pixel equals it exactly.
  auto tensor = TinyNet::resample_input(f);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      double expected = ((x + y) % 2) == 0 ? 0.2 : 0.6;
      CHECK(tensor[(static_cast<std::size_t>(0) * 64 + y) * 64 + x] ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("parameter dump/load round trip is bitwise") {
  auto dir = testutil::temp_dir("tinynet");
  TinyNet net(42);
  net.dump(dir / "params.bin");
  TinyNet back = TinyNet::load(dir / "params.bin");
  CHECK(back.seed() == net.seed());
  CHECK(back.conv1_w() == net.conv1_w());
  CHECK(back.conv1_b() == net.conv1_b());
  CHECK(back.conv2_w() == net.conv2_w());
  CHECK(back.conv2_b() == net.conv2_b());
  CHECK(back.dense_w() == net.dense_w());
  CHECK(back.dense_b() == net.dense_b());

  auto input = random_input(4);
  CHECK(net.predict(input).logits == back.predict(input).logits);

  SUBCASE("truncated file is a typed error") {
    auto bytes = testutil::read_file_bytes(dir / "params.bin");
    bytes.resize(bytes.size() / 2);
    testutil::write_file_bytes(dir / "cut.bin", bytes);
    CHECK_THROWS_AS(TinyNet::load(dir / "cut.bin"), SerializationError);
  }
}
