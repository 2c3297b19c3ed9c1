// Compares the serial reference path (workers=1) against the OpenMP path for
// the three hot kernels: FGSM perturbation, feature extraction, and forest
// scoring. Prints frames/sec and speedup per stage.
//
// Usage: bench [frames] [width] [height] [workers]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "advfilter/attack.hpp"
#include "advfilter/features.hpp"
#include "advfilter/isoforest.hpp"
#include "advfilter/parallel.hpp"
#include "advfilter/rng.hpp"
#include "advfilter/tinynet.hpp"

using namespace advfilter;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<Frame> make_frames(std::size_t n, int w, int h) {
  std::vector<Frame> frames(n);
  for (std::size_t i = 0; i < n; ++i) {
    Frame& f = frames[i];
    f.index = i;
    f.width = w;
    f.height = h;
    f.pixels.resize(static_cast<std::size_t>(w) * h * 3);
    SplitMix64 rng(1000 + i);
    for (auto& p : f.pixels) p = 0.25 + 0.5 * rng.next_unit();
  }
  return frames;
}

struct StageResult {
  double serial_s = 0;
  double parallel_s = 0;
};

}  // namespace

int main(int argc, char** argv) {
  std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 120;
  int w = argc > 2 ? std::atoi(argv[2]) : 96;
  int h = argc > 3 ? std::atoi(argv[3]) : 80;
  int workers = argc > 4 ? std::atoi(argv[4])
                         : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;

  std::printf("bench: %zu frames %dx%d, %d workers\n", n, w, h, workers);
  auto frames = make_frames(n, w, h);
  TinyNet net(42);

  auto run_attack_stage = [&](int wk) {
    std::vector<Frame> out(frames.size());
    parallel_for(frames.size(), wk, [&](std::size_t i) { out[i] = fgsm(net, frames[i], 0.1); });
    return out;
  };
  auto run_feature_stage = [&](int wk) {
    std::vector<std::vector<double>> out(frames.size());
    parallel_for(frames.size(), wk, [&](std::size_t i) {
      out[i] = extract_features(frames[i], i > 0 ? &frames[i - 1] : nullptr);
    });
    return out;
  };

  // Attack
  StageResult attack_r;
  auto t0 = Clock::now();
  auto serial_adv = run_attack_stage(1);
  attack_r.serial_s = seconds_since(t0);
  t0 = Clock::now();
  auto parallel_adv = run_attack_stage(workers);
  attack_r.parallel_s = seconds_since(t0);
  bool attack_match = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (serial_adv[i].pixels != parallel_adv[i].pixels) attack_match = false;
  }

  // Features
  StageResult feature_r;
  t0 = Clock::now();
  auto serial_features = run_feature_stage(1);
  feature_r.serial_s = seconds_since(t0);
  t0 = Clock::now();
  auto parallel_features = run_feature_stage(workers);
  feature_r.parallel_s = seconds_since(t0);
  bool feature_match = serial_features == parallel_features;

  // Forest fit + score
  ForestParams params;
  params.psi = 64;
  StageResult forest_r;
  t0 = Clock::now();
  auto forest1 = IsoForest::fit(serial_features, params, 1);
  auto scores1 = forest1.score_all(serial_features, 1);
  forest_r.serial_s = seconds_since(t0);
  t0 = Clock::now();
  auto forestN = IsoForest::fit(serial_features, params, workers);
  auto scoresN = forestN.score_all(serial_features, workers);
  forest_r.parallel_s = seconds_since(t0);
  bool forest_match = scores1 == scoresN;

  std::printf("%-20s serial %8.2f f/s   parallel %8.2f f/s   speedup %.2fx   identical %s\n",
              "fgsm", n / attack_r.serial_s, n / attack_r.parallel_s,
              attack_r.serial_s / attack_r.parallel_s, attack_match ? "yes" : "NO");
  std::printf("%-20s serial %8.2f f/s   parallel %8.2f f/s   speedup %.2fx   identical %s\n",
              "features", n / feature_r.serial_s, n / feature_r.parallel_s,
              feature_r.serial_s / feature_r.parallel_s, feature_match ? "yes" : "NO");
  std::printf("%-20s serial %8.2f f/s   parallel %8.2f f/s   speedup %.2fx   identical %s\n",
              "forest fit+score", n / forest_r.serial_s, n / forest_r.parallel_s,
              forest_r.serial_s / forest_r.parallel_s, forest_match ? "yes" : "NO");

  return (attack_match && feature_match && forest_match) ? 0 : 1;
}
