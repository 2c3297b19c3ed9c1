#include "advfilter/pipeline.hpp"

#include <cstdio>
#include <cstring>
#include <deque>
#include <fstream>

#include "advfilter/errors.hpp"
#include "advfilter/features.hpp"
#include "advfilter/frame_io.hpp"
#include "advfilter/parallel.hpp"

namespace advfilter {

std::string to_string(Truth t) {
  switch (t) {
    case Truth::attacked: return "attacked";
    case Truth::clean: return "clean";
    default: return "unknown";
  }
}

Truth truth_from_string(const std::string& s) {
  if (s == "attacked") return Truth::attacked;
  if (s == "clean") return Truth::clean;
  if (s == "unknown") return Truth::unknown;
  throw SchemaViolation("unknown truth value: " + s);
}

Truth truth_from_role(Role role) {
  return role == Role::adversarial ? Truth::attacked : Truth::clean;
}

namespace {

void check_config(const PipelineConfig& config) {
  if (config.workers < 1) throw SchemaViolation("workers must be >= 1");
  if (config.mode == PipelineMode::stream && config.warmup < 2) {
    throw WarmupTooShort("stream mode needs a warmup of at least 2 frames, got " +
                         std::to_string(config.warmup));
  }
}

std::vector<StreamItem> load_items(const DatasetManifest& manifest,
                                   const std::filesystem::path& dir, int workers) {
  std::vector<StreamItem> items(manifest.entries.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    items[i].frame = read_ppm_file(dir / entry.path);
    items[i].frame.index = entry.index;
    items[i].truth = truth_from_role(entry.role);
    items[i].epsilon = entry.epsilon;
  });
  return items;
}

std::vector<std::vector<double>> all_features(const std::vector<StreamItem>& items, int workers) {
  std::vector<std::vector<double>> features(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    features[i] = extract_features(items[i].frame, i > 0 ? &items[i - 1].frame : nullptr);
  });
  return features;
}

ForestParams forest_params(const PipelineConfig& config) {
  ForestParams params;
  params.trees = config.trees;
  params.psi = config.psi;
  params.contamination = config.contamination;
  params.seed = config.seed;
  return params;
}

DetectionRecord make_record(const StreamItem& item, double score, double threshold,
                            bool flagged) {
  DetectionRecord rec;
  rec.frame_index = item.frame.index;
  rec.score = score;
  rec.threshold = threshold;
  rec.flagged = flagged;
  rec.truth = item.truth;
  rec.epsilon = item.epsilon;
  return rec;
}

}  // namespace

PipelineResult run_batch_items(const std::vector<StreamItem>& items,
                               const PipelineConfig& config) {
  check_config(config);
  if (items.empty()) throw EmptyDataset("no frames to score");

  PipelineResult result;
  result.features = all_features(items, config.workers);
  result.forest = IsoForest::fit(result.features, forest_params(config), config.workers);
  auto scores = result.forest.score_all(result.features, config.workers);
  double threshold = result.forest.calibrate_threshold(scores);

  result.records.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    result.records.push_back(
        make_record(items[i], scores[i], threshold, scores[i] > threshold));
  }
  return result;
}

PipelineResult run_batch(const DatasetManifest& manifest, const std::filesystem::path& dir,
                         const PipelineConfig& config) {
  check_config(config);
  return run_batch_items(load_items(manifest, dir, config.workers), config);
}

PipelineResult run_batch_with_forest(const DatasetManifest& manifest,
                                     const std::filesystem::path& dir, IsoForest forest,
                                     const PipelineConfig& config) {
  check_config(config);
  if (!forest.fitted() || !forest.threshold()) {
    throw NotFitted("reused forest must be fitted and calibrated");
  }
  auto items = load_items(manifest, dir, config.workers);
  if (items.empty()) throw EmptyDataset("no frames to score");

  PipelineResult result;
  result.features = all_features(items, config.workers);
  auto scores = forest.score_all(result.features, config.workers);
  double threshold = *forest.threshold();
  result.records.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    result.records.push_back(
        make_record(items[i], scores[i], threshold, scores[i] > threshold));
  }
  result.forest = std::move(forest);
  return result;
}

PipelineResult run_stream(const std::vector<StreamItem>& items, const PipelineConfig& config) {
  PipelineConfig cfg = config;
  cfg.mode = PipelineMode::stream;
  check_config(cfg);
  const std::size_t warmup = static_cast<std::size_t>(cfg.warmup);
  if (items.size() < warmup) {
    throw WarmupTooShort("stream has " + std::to_string(items.size()) +
                         " frames, warmup needs " + std::to_string(warmup));
  }

  PipelineResult result;
  result.features.reserve(items.size());

  // Trailing window of feature vectors for optional refits.
  std::deque<std::vector<double>> window;
  auto push_window = [&](const std::vector<double>& f) {
    window.push_back(f);
    if (window.size() > warmup) window.pop_front();
  };

  // Warmup: extract sequentially, then fit once.
  for (std::size_t i = 0; i < warmup; ++i) {
    result.features.push_back(
        extract_features(items[i].frame, i > 0 ? &items[i - 1].frame : nullptr));
    push_window(result.features.back());
  }
  std::vector<std::vector<double>> warmup_features(window.begin(), window.end());
  result.forest = IsoForest::fit(warmup_features, forest_params(cfg), cfg.workers);
  {
    auto warmup_scores = result.forest.score_all(warmup_features, cfg.workers);
    double threshold = result.forest.calibrate_threshold(warmup_scores);
    for (std::size_t i = 0; i < warmup; ++i) {
      // Warmup frames are presumed clean: never flagged.
      result.records.push_back(make_record(items[i], warmup_scores[i], threshold, false));
    }
  }

  // Live phase: score each frame as it arrives.
  std::size_t scored_since_refit = 0;
  for (std::size_t i = warmup; i < items.size(); ++i) {
    result.features.push_back(extract_features(items[i].frame, &items[i - 1].frame));
    push_window(result.features.back());

    double score = result.forest.score(result.features.back());
    double threshold = *result.forest.threshold();
    result.records.push_back(make_record(items[i], score, threshold, score > threshold));

    ++scored_since_refit;
    if (cfg.refit_every > 0 && scored_since_refit == static_cast<std::size_t>(cfg.refit_every)) {
      scored_since_refit = 0;
      std::vector<std::vector<double>> window_features(window.begin(), window.end());
      result.forest = IsoForest::fit(window_features, forest_params(cfg), cfg.workers);
      result.forest.calibrate_threshold(result.forest.score_all(window_features, cfg.workers));
    }
  }
  return result;
}

PipelineResult run_stream(const DatasetManifest& manifest, const std::filesystem::path& dir,
                          const PipelineConfig& config) {
  return run_stream(load_items(manifest, dir, config.workers), config);
}

DatasetManifest filter_frames(const std::vector<DetectionRecord>& records,
                              const DatasetManifest& manifest, const std::filesystem::path& in_dir,
                              const std::filesystem::path& out_dir) {
  if (records.size() != manifest.entries.size()) {
    throw ShapeMismatch("record count " + std::to_string(records.size()) +
                        " does not match manifest entries " +
                        std::to_string(manifest.entries.size()));
  }
  std::filesystem::create_directories(out_dir);
  DatasetManifest passed;
  passed.source = manifest.source;
  passed.fps_num = manifest.fps_num;
  passed.fps_den = manifest.fps_den;
  passed.width = manifest.width;
  passed.height = manifest.height;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].flagged) continue;
    const auto& entry = manifest.entries[i];
    std::error_code ec;
    std::filesystem::copy_file(in_dir / entry.path, out_dir / entry.path,
                               std::filesystem::copy_options::overwrite_existing, ec);
    if (ec) {
      throw IoError("copy " + (in_dir / entry.path).string() + ": " + ec.message());
    }
    passed.entries.push_back(entry);
  }
  write_manifest(passed, out_dir / "manifest.json");
  return passed;
}

// --- detections.csv ---------------------------------------------------------

void write_detections_csv(const std::vector<DetectionRecord>& records,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "frame_index,score,threshold,flagged,truth,epsilon\n";
  for (const auto& r : records) {
    char buf[160];
    if (r.epsilon) {
      std::snprintf(buf, sizeof buf, "%zu,%.9f,%.9f,%s,%s,%.9f\n", r.frame_index, r.score,
                    r.threshold, r.flagged ? "true" : "false", to_string(r.truth).c_str(),
                    *r.epsilon);
    } else {
      std::snprintf(buf, sizeof buf, "%zu,%.9f,%.9f,%s,%s,\n", r.frame_index, r.score,
                    r.threshold, r.flagged ? "true" : "false", to_string(r.truth).c_str());
    }
    out << buf;
  }
  if (!out) throw IoError("short write to " + path.string());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_real(const std::string& s, const std::string& where) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty()) {
    throw SchemaViolation(where + ": not a number: '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<DetectionRecord> read_detections_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaViolation("empty detections file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame_index,score,threshold,flagged,truth,epsilon") {
    throw SchemaViolation("unexpected detections header: " + line);
  }
  std::vector<DetectionRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    std::string where = "detections line " + std::to_string(lineno);
    if (fields.size() != 6) {
      throw SchemaViolation(where + ": expected 6 fields, got " + std::to_string(fields.size()));
    }
    DetectionRecord r;
    r.frame_index = static_cast<std::size_t>(parse_real(fields[0], where));
    r.score = parse_real(fields[1], where);
    r.threshold = parse_real(fields[2], where);
    if (fields[3] == "true") {
      r.flagged = true;
    } else if (fields[3] == "false") {
      r.flagged = false;
    } else {
      throw SchemaViolation(where + ": flagged must be true/false, got '" + fields[3] + "'");
    }
    r.truth = truth_from_string(fields[4]);
    if (!fields[5].empty()) r.epsilon = parse_real(fields[5], where);
    records.push_back(r);
  }
  return records;
}

}  // namespace advfilter
