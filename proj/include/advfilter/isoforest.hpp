#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace advfilter {

struct IsoNode {
  std::int32_t feature = -1;  // -1 marks an external (leaf) node
  double split = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t size = 0;  // leaf only: training points that landed here
};

struct IsoTree {
  std::uint32_t height_limit = 0;
  std::vector<IsoNode> nodes;  // nodes[0] is the root
};

struct ForestParams {
  int trees = 100;
  int psi = 256;  // subsample size, clamped to the dataset size at fit time
  double contamination = 0.1;
  std::uint64_t seed = 42;

  void validate() const;
};

// Isolation forest: anomalies isolate in fewer random splits, so short mean
// path lengths map to scores near 1 and deep ones to scores near 0.
class IsoForest {
 public:
  // Average unsuccessful-search depth c(m) = 2(ln(m-1) + gamma) - 2(m-1)/m
  // for m >= 2, else 0. Normalizes path lengths.
  static double c_factor(std::size_t m);

  // Depth of the leaf x lands in, plus c(leaf size).
  static double path_length(const IsoTree& tree, const std::vector<double>& x);

  // Builds `params.trees` trees, each on its own PRNG substream over a
  // without-replacement subsample of min(params.psi, n) rows. Tree t is fully
  // determined by substream t, so the result is identical for any `workers`.
  static IsoForest fit(const std::vector<std::vector<double>>& data, const ForestParams& params,
                       int workers = 1);

  double score(const std::vector<double>& x) const;
  std::vector<double> score_all(const std::vector<std::vector<double>>& data,
                                int workers = 1) const;

  // threshold = (1 - contamination)-quantile of the training scores, linear
  // interpolation between order statistics. Stored; returned for convenience.
  double calibrate_threshold(const std::vector<double>& training_scores);

  bool fitted() const { return !trees_.empty(); }
  std::optional<double> threshold() const { return threshold_; }
  bool flagged(double score_value) const;  // strict: score > threshold

  std::size_t dim() const { return dim_; }
  int psi() const { return psi_; }
  const std::vector<IsoTree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }

  // Versioned little-endian binary, magic "ISOF1".
  void save(const std::filesystem::path& path) const;
  static IsoForest load(const std::filesystem::path& path);

 private:
  ForestParams params_;
  std::size_t dim_ = 0;
  int psi_ = 0;
  std::vector<IsoTree> trees_;
  std::optional<double> threshold_;
};

// p-quantile with linear interpolation at rank p*(n-1); input need not be
// sorted. Exposed for direct testing.
double quantile(std::vector<double> values, double p);

}  // namespace advfilter
