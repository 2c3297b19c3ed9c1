#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "advfilter/frame.hpp"
#include "advfilter/isoforest.hpp"

namespace advfilter {

enum class Truth { attacked, clean, unknown };

std::string to_string(Truth t);
Truth truth_from_string(const std::string& s);
Truth truth_from_role(Role role);

// One verdict per dataset row. In batch mode and post-warmup stream rows,
// flagged == (score > threshold); warmup rows are presumed clean and carry
// flagged == false regardless of score.
struct DetectionRecord {
  std::size_t frame_index = 0;
  double score = 0.0;
  double threshold = 0.0;
  bool flagged = false;
  Truth truth = Truth::unknown;
  std::optional<double> epsilon;

  bool operator==(const DetectionRecord&) const = default;
};

enum class PipelineMode { batch, stream };

struct PipelineConfig {
  PipelineMode mode = PipelineMode::batch;
  int warmup = 50;       // stream mode: frames presumed clean, used for fitting
  int refit_every = 0;   // stream mode: 0 = never refit
  int workers = 1;
  int trees = 100;
  int psi = 256;
  double contamination = 0.1;
  std::uint64_t seed = 42;  // forest seed
};

struct PipelineResult {
  std::vector<DetectionRecord> records;
  IsoForest forest;
  std::vector<std::vector<double>> features;
};

// A frame plus whatever ground truth the caller has for it.
struct StreamItem {
  Frame frame;
  Truth truth = Truth::unknown;
  std::optional<double> epsilon;
};

// Fits the forest on every row of the dataset (clean and adversarial alike),
// thresholds at the contamination quantile, and emits one record per row in
// manifest order. Frame i's features pair it with row i-1.
PipelineResult run_batch(const DatasetManifest& manifest, const std::filesystem::path& dir,
                         const PipelineConfig& config);
PipelineResult run_batch_items(const std::vector<StreamItem>& items, const PipelineConfig& config);

// Batch scoring against an already-fitted (and calibrated) forest.
PipelineResult run_batch_with_forest(const DatasetManifest& manifest,
                                     const std::filesystem::path& dir, IsoForest forest,
                                     const PipelineConfig& config);

// Streaming detection: fit and threshold on the first `warmup` items (emitted
// unflagged), then score each later item as it arrives — record i depends
// only on items <= i. With refit_every = k > 0, the forest and threshold are
// rebuilt from the trailing `warmup` feature window after every k scored
// frames.
PipelineResult run_stream(const std::vector<StreamItem>& items, const PipelineConfig& config);
PipelineResult run_stream(const DatasetManifest& manifest, const std::filesystem::path& dir,
                          const PipelineConfig& config);

// Copies the frames whose record is unflagged into out_dir (byte-identical
// copies) and writes the surviving manifest there. Records align with
// manifest entries by position.
DatasetManifest filter_frames(const std::vector<DetectionRecord>& records,
                              const DatasetManifest& manifest, const std::filesystem::path& in_dir,
                              const std::filesystem::path& out_dir);

// detections.csv: header frame_index,score,threshold,flagged,truth,epsilon;
// reals printed as fixed-point with 9 decimals; epsilon empty when absent.
void write_detections_csv(const std::vector<DetectionRecord>& records,
                          const std::filesystem::path& path);
std::vector<DetectionRecord> read_detections_csv(const std::filesystem::path& path);

}  // namespace advfilter
