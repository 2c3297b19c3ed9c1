#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "advfilter/eval.hpp"
#include "advfilter/pipeline.hpp"

namespace advfilter {

// All charts are fixed 960x540 SVGs, deterministic byte-for-byte for
// identical inputs, with no external references.
enum class ChartKind {
  distribution_bars,   // five headline counts of a detection run
  timeline,            // flagged (cross) vs clean (circle) over frame order
  actual_vs_detected,  // truth row vs verdict row plus a summary line
  threshold_line,      // score & threshold series with outcome markers
  confusion_heatmap,   // 2x2 counts on a monotone color ramp
};

std::string render_chart(ChartKind kind, const std::string& title,
                         const std::vector<DetectionRecord>& records);
// confusion_heatmap needs the matrix instead of records.
std::string render_chart(ChartKind kind, const std::string& title, const ConfusionMatrix& matrix);

// Writes distribution.svg, timeline.svg, actual_vs_detected.svg,
// thresholds.svg, confusion.svg into out_dir; returns the paths written.
std::vector<std::filesystem::path> write_report(const std::vector<DetectionRecord>& records,
                                                const ConfusionMatrix& matrix,
                                                const std::filesystem::path& out_dir);

// Re-writes every frame with a 5-pixel status border: green for a correctly
// flagged attack, red for a wrong verdict (false positive or miss), none for
// a correctly passed clean frame. Records align with manifest entries by
// position; returns the number of frames written.
std::size_t decorate_frames(const std::vector<DetectionRecord>& records,
                            const DatasetManifest& manifest, const std::filesystem::path& in_dir,
                            const std::filesystem::path& out_dir, int workers = 1);

}  // namespace advfilter
