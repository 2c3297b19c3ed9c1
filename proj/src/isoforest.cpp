#include "advfilter/isoforest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "advfilter/errors.hpp"
#include "advfilter/parallel.hpp"
#include "advfilter/rng.hpp"

namespace advfilter {

namespace {
constexpr double kEulerGamma = 0.5772156649;
}

void ForestParams::validate() const {
  if (trees < 1) throw SchemaViolation("forest needs at least 1 tree");
  if (psi < 2) throw SchemaViolation("subsample size must be at least 2");
  if (!(contamination > 0.0 && contamination <= 0.5)) {
    throw SchemaViolation("contamination must lie in (0, 0.5]");
  }
}

double IsoForest::c_factor(std::size_t m) {
  if (m < 2) return 0.0;
  double dm = static_cast<double>(m);
  return 2.0 * (std::log(dm - 1.0) + kEulerGamma) - 2.0 * (dm - 1.0) / dm;
}

double IsoForest::path_length(const IsoTree& tree, const std::vector<double>& x) {
  std::uint32_t node = 0;
  double depth = 0.0;
  while (tree.nodes[node].feature >= 0) {
    const IsoNode& n = tree.nodes[node];
    node = x[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right;
    depth += 1.0;
  }
  return depth + c_factor(tree.nodes[node].size);
}

namespace {

std::uint32_t height_limit_for(int psi) {
  std::uint32_t h = 0;
  int span = 1;
  while (span < psi) {
    span *= 2;
    ++h;
  }
  return h;  // ceil(log2(psi))
}

// Recursive tree induction over the rows in [begin, end) of `rows`.
// Partitioning happens in place; RNG draws occur in a fixed pre-order walk.
std::uint32_t build_node(IsoTree& tree, const std::vector<std::vector<double>>& data,
                         std::vector<std::uint32_t>& rows, std::size_t begin, std::size_t end,
                         std::uint32_t depth, SplitMix64& rng) {
  std::uint32_t id = static_cast<std::uint32_t>(tree.nodes.size());
  tree.nodes.emplace_back();

  auto make_leaf = [&](std::uint32_t node_id) {
    tree.nodes[node_id].feature = -1;
    tree.nodes[node_id].size = static_cast<std::uint32_t>(end - begin);
    return node_id;
  };

  if (depth >= tree.height_limit || end - begin <= 1) return make_leaf(id);

  const std::size_t dim = data[rows[begin]].size();
  // Only dimensions with an actual spread can host a split.
  std::vector<std::uint32_t> candidates;
  std::vector<double> lo(dim), hi(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    lo[d] = hi[d] = data[rows[begin]][d];
  }
  for (std::size_t r = begin + 1; r < end; ++r) {
    for (std::size_t d = 0; d < dim; ++d) {
      double v = data[rows[r]][d];
      lo[d] = std::min(lo[d], v);
      hi[d] = std::max(hi[d], v);
    }
  }
  for (std::size_t d = 0; d < dim; ++d) {
    if (hi[d] > lo[d]) candidates.push_back(static_cast<std::uint32_t>(d));
  }
  if (candidates.empty()) return make_leaf(id);  // all points identical

  std::uint32_t d = candidates[rng.next_index(candidates.size())];
  double split = lo[d] + (hi[d] - lo[d]) * rng.next_open_unit();

  auto mid_it = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                               rows.begin() + static_cast<std::ptrdiff_t>(end),
                               [&](std::uint32_t r) { return data[r][d] < split; });
  std::size_t mid = static_cast<std::size_t>(mid_it - rows.begin());

  tree.nodes[id].feature = static_cast<std::int32_t>(d);
  tree.nodes[id].split = split;
  std::uint32_t left = build_node(tree, data, rows, begin, mid, depth + 1, rng);
  std::uint32_t right = build_node(tree, data, rows, mid, end, depth + 1, rng);
  tree.nodes[id].left = left;
  tree.nodes[id].right = right;
  return id;
}

IsoTree build_tree(const std::vector<std::vector<double>>& data, int psi, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const std::size_t n = data.size();

  // Partial Fisher-Yates: first psi entries become the subsample.
  std::vector<std::uint32_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0u);
  for (int i = 0; i < psi; ++i) {
    std::size_t j = static_cast<std::size_t>(i) + rng.next_index(n - static_cast<std::size_t>(i));
    std::swap(rows[static_cast<std::size_t>(i)], rows[j]);
  }
  rows.resize(static_cast<std::size_t>(psi));

  IsoTree tree;
  tree.height_limit = height_limit_for(psi);
  tree.nodes.reserve(static_cast<std::size_t>(psi) * 2);
  build_node(tree, data, rows, 0, rows.size(), 0, rng);
  return tree;
}

}  // namespace

IsoForest IsoForest::fit(const std::vector<std::vector<double>>& data, const ForestParams& params,
                         int workers) {
  params.validate();
  if (data.size() < 2) throw TooFewPoints("isolation forest needs at least 2 points");
  const std::size_t dim = data[0].size();
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (data[r].size() != dim) {
      throw DimensionMismatch("row " + std::to_string(r) + " has " +
                              std::to_string(data[r].size()) + " features, expected " +
                              std::to_string(dim));
    }
    for (std::size_t d = 0; d < dim; ++d) {
      if (!std::isfinite(data[r][d])) {
        throw NonFiniteFeature("row " + std::to_string(r) + ", dimension " + std::to_string(d));
      }
    }
  }

  IsoForest forest;
  forest.params_ = params;
  forest.dim_ = dim;
  forest.psi_ = std::min<int>(params.psi, static_cast<int>(data.size()));
  forest.trees_.resize(static_cast<std::size_t>(params.trees));

  // One pre-generated substream seed per tree keeps the build independent of
  // scheduling.
  auto seeds = SplitMix64::substream_seeds(params.seed, static_cast<std::size_t>(params.trees));
  parallel_for(forest.trees_.size(), workers, [&](std::size_t t) {
    forest.trees_[t] = build_tree(data, forest.psi_, seeds[t]);
  });
  return forest;
}

double IsoForest::score(const std::vector<double>& x) const {
  if (!fitted()) throw NotFitted("score requires a fitted forest");
  if (x.size() != dim_) {
    throw DimensionMismatch("input has " + std::to_string(x.size()) + " features, forest expects " +
                            std::to_string(dim_));
  }
  double total = 0.0;
  for (const auto& tree : trees_) total += path_length(tree, x);
  double mean_path = total / static_cast<double>(trees_.size());
  return std::exp2(-mean_path / c_factor(static_cast<std::size_t>(psi_)));
}

std::vector<double> IsoForest::score_all(const std::vector<std::vector<double>>& data,
                                         int workers) const {
  std::vector<double> scores(data.size());
  parallel_for(data.size(), workers, [&](std::size_t i) { scores[i] = score(data[i]); });
  return scores;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw EmptyDataset("quantile of empty sample");
  std::sort(values.begin(), values.end());
  double rank = p * static_cast<double>(values.size() - 1);
  std::size_t lo = static_cast<std::size_t>(rank);
  std::size_t hi = std::min(lo + 1, values.size() - 1);
  double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double IsoForest::calibrate_threshold(const std::vector<double>& training_scores) {
  if (!fitted()) throw NotFitted("calibrate_threshold requires a fitted forest");
  double t = quantile(training_scores, 1.0 - params_.contamination);
  threshold_ = t;
  return t;
}

bool IsoForest::flagged(double score_value) const {
  if (!threshold_) throw NotFitted("no threshold calibrated");
  return score_value > *threshold_;
}

// --- serialization ----------------------------------------------------------

namespace {

constexpr char kMagic[5] = {'I', 'S', 'O', 'F', '1'};

template <class T>
void put_le(std::ostream& out, T v) {
  static_assert(std::is_integral_v<T>);
  unsigned char b[sizeof(T)];
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  static_assert(std::is_integral_v<T>);
  unsigned char b[sizeof(T)];
  in.read(reinterpret_cast<char*>(b), sizeof(T));
  if (static_cast<std::size_t>(in.gcount()) != sizeof(T)) {
    throw SerializationError("truncated forest file");
  }
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(b[i]) << (8 * i);
  return static_cast<T>(u);
}

void put_f64(std::ostream& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_le<std::uint64_t>(out, v);
}

double get_f64(std::istream& in) {
  std::uint64_t v = get_le<std::uint64_t>(in);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void IsoForest::save(const std::filesystem::path& path) const {
  if (!fitted()) throw NotFitted("cannot save an unfitted forest");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof kMagic);
  put_le<std::uint8_t>(out, threshold_ ? 1 : 0);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(trees_.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(psi_));
  put_le<std::uint64_t>(out, params_.seed);
  put_f64(out, params_.contamination);
  if (threshold_) put_f64(out, *threshold_);
  for (const auto& tree : trees_) {
    put_le<std::uint32_t>(out, tree.height_limit);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tree.nodes.size()));
    for (const auto& node : tree.nodes) {
      put_le<std::int32_t>(out, node.feature);
      put_f64(out, node.split);
      put_le<std::uint32_t>(out, node.left);
      put_le<std::uint32_t>(out, node.right);
      put_le<std::uint32_t>(out, node.size);
    }
  }
  if (!out) throw IoError("short write to " + path.string());
}

IsoForest IsoForest::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[5];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw SerializationError("not a forest file (bad magic)");
  }
  IsoForest forest;
  bool has_threshold = get_le<std::uint8_t>(in) != 0;
  forest.dim_ = get_le<std::uint32_t>(in);
  std::uint32_t n_trees = get_le<std::uint32_t>(in);
  forest.psi_ = static_cast<int>(get_le<std::uint32_t>(in));
  forest.params_.seed = get_le<std::uint64_t>(in);
  forest.params_.contamination = get_f64(in);
  forest.params_.trees = static_cast<int>(n_trees);
  forest.params_.psi = forest.psi_;
  if (has_threshold) forest.threshold_ = get_f64(in);
  if (n_trees == 0 || forest.dim_ == 0 || forest.psi_ < 2) {
    throw SerializationError("forest file has inconsistent header fields");
  }
  forest.trees_.resize(n_trees);
  for (auto& tree : forest.trees_) {
    tree.height_limit = get_le<std::uint32_t>(in);
    std::uint32_t count = get_le<std::uint32_t>(in);
    if (count == 0) throw SerializationError("tree with no nodes");
    tree.nodes.resize(count);
    for (auto& node : tree.nodes) {
      node.feature = get_le<std::int32_t>(in);
      node.split = get_f64(in);
      node.left = get_le<std::uint32_t>(in);
      node.right = get_le<std::uint32_t>(in);
      node.size = get_le<std::uint32_t>(in);
      if (node.feature >= 0 && (node.left >= count || node.right >= count)) {
        throw SerializationError("tree node child out of range");
      }
      if (node.feature >= 0 && static_cast<std::size_t>(node.feature) >= forest.dim_) {
        throw SerializationError("tree split dimension out of range");
      }
    }
  }
  return forest;
}

}  // namespace advfilter
