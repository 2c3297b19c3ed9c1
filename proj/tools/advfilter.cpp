// advfilter: generate FGSM-perturbed video frames, detect them with an
// isolation forest over multi-scale frame statistics, and report the results.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "advfilter/attack.hpp"
#include "advfilter/errors.hpp"
#include "advfilter/eval.hpp"
#include "advfilter/features.hpp"
#include "advfilter/frame_io.hpp"
#include "advfilter/isoforest.hpp"
#include "advfilter/pipeline.hpp"
#include "advfilter/report.hpp"
#include "advfilter/rng.hpp"
#include "advfilter/tinynet.hpp"

namespace fs = std::filesystem;
using namespace advfilter;

namespace {

int default_workers() {
  const char* env = std::getenv("ADVFILTER_WORKERS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 4096) return 1;
  return static_cast<int>(v);
}

void log_header(const std::string& sub, std::uint64_t seed, int workers) {
  std::printf("[advfilter] %s seed=%llu workers=%d\n", sub.c_str(),
              static_cast<unsigned long long>(seed), workers);
}

// --- extract ----------------------------------------------------------------

struct ExtractArgs {
  std::string input;
  std::string out;
  std::size_t limit = 0;  // 0 = all frames
};

int run_extract(const ExtractArgs& args) {
  log_header("extract", 0, 1);
  std::ifstream in(args.input, std::ios::binary);
  if (!in) throw IoError("cannot open " + args.input);
  auto [manifest, frames] = parse_y4m(in, fs::path(args.input).filename().string());
  if (args.limit > 0 && frames.size() > args.limit) {
    frames.resize(args.limit);
    manifest.entries.resize(args.limit);
  }
  if (frames.empty()) throw EmptyDataset("no frames in " + args.input);
  fs::create_directories(args.out);
  for (const auto& frame : frames) {
    write_ppm_file(frame, fs::path(args.out) / clean_frame_name(frame.index));
  }
  write_manifest(manifest, fs::path(args.out) / "manifest.json");
  std::printf("[advfilter] extracted %zu frames (%dx%d @ %d/%d fps) -> %s\n", frames.size(),
              manifest.width, manifest.height, manifest.fps_num, manifest.fps_den,
              args.out.c_str());
  return 0;
}

// --- attack -----------------------------------------------------------------

struct AttackArgs {
  std::string input;
  std::string out;
  std::vector<double> epsilons = {0.01, 0.02, 0.05, 0.1, 0.2};
  std::uint64_t seed = 42;
  int workers = 1;
};

int run_attack(const AttackArgs& args) {
  log_header("attack", args.seed, args.workers);
  auto manifest = load_manifest(fs::path(args.input) / "manifest.json");
  AttackConfig config;
  config.epsilons = args.epsilons;
  config.seed = args.seed;
  auto result = attack_dataset(manifest, args.input, args.out, config, args.workers);
  std::printf("[advfilter] wrote %zu frames (%zu clean + variants at %zu epsilons) -> %s\n",
              result.entries.size(), manifest.entries.size(), args.epsilons.size(),
              args.out.c_str());
  return 0;
}

// --- detect -------------------------------------------------------------------

struct DetectArgs {
  std::string input;
  std::string out;
  std::string mode = "batch";
  int warmup = 50;
  int refit_every = 0;
  int trees = 100;
  int psi = 256;
  double contamination = 0.1;
  std::uint64_t seed = 42;
  int workers = 1;
  std::string forest;      // reuse a saved forest (batch only)
  std::string filter_out;  // write passed frames here
};

int run_detect(const DetectArgs& args) {
  log_header("detect", args.seed, args.workers);
  auto manifest = load_manifest(fs::path(args.input) / "manifest.json");

  PipelineConfig config;
  config.mode = args.mode == "stream" ? PipelineMode::stream : PipelineMode::batch;
  config.warmup = args.warmup;
  config.refit_every = args.refit_every;
  config.workers = args.workers;
  config.trees = args.trees;
  config.psi = args.psi;
  config.contamination = args.contamination;
  config.seed = args.seed;

  PipelineResult result;
  bool reused = false;
  if (!args.forest.empty()) {
    if (config.mode != PipelineMode::batch) {
      throw SchemaViolation("--forest applies to batch mode only");
    }
    result = run_batch_with_forest(manifest, args.input, IsoForest::load(args.forest), config);
    reused = true;
  } else if (config.mode == PipelineMode::stream) {
    result = run_stream(manifest, args.input, config);
  } else {
    result = run_batch(manifest, args.input, config);
  }

  fs::create_directories(args.out);
  write_detections_csv(result.records, fs::path(args.out) / "detections.csv");
  write_feature_csv(result.features, fs::path(args.out) / "features.csv");
  if (!reused) result.forest.save(fs::path(args.out) / "forest.isof");

  std::size_t flagged = 0;
  for (const auto& r : result.records)
    if (r.flagged) ++flagged;
  std::printf("[advfilter] scored %zu frames, flagged %zu -> %s\n", result.records.size(), flagged,
              args.out.c_str());

  if (!args.filter_out.empty()) {
    auto kept = filter_frames(result.records, manifest, args.input, args.filter_out);
    std::printf("[advfilter] passed %zu frames -> %s\n", kept.entries.size(),
                args.filter_out.c_str());
  }
  return 0;
}

// --- eval ---------------------------------------------------------------------

struct EvalArgs {
  std::string detections;
  std::string positive = "attacked";
  std::string json;
};

MetricsReport eval_records(const std::vector<DetectionRecord>& records, PositiveClass positive,
                           ConfusionMatrix* matrix_out) {
  auto matrix = confusion(records, positive);
  auto report = metrics(matrix);
  try {
    report.auc = roc(records).auc;
  } catch (const SingleClass&) {
    // Undefined with one class present; leave absent.
  }
  if (matrix_out) *matrix_out = matrix;
  return report;
}

void print_metrics(const ConfusionMatrix& m, const MetricsReport& r) {
  std::printf("positive_class=%s\n", to_string(m.positive).c_str());
  std::printf("tp=%zu\nfp=%zu\ntn=%zu\nfn=%zu\n", m.tp, m.fp, m.tn, m.fn);
  std::printf("err=%.6f\nacc=%.6f\nsn=%.6f\nsp=%.6f\nprec=%.6f\nfpr=%.6f\nf1=%.6f\n", r.err, r.acc,
              r.sn, r.sp, r.prec, r.fpr, r.f1);
  if (r.auc) std::printf("auc=%.6f\n", *r.auc);
  if (r.degenerate) std::printf("degenerate=true\n");
}

int run_eval(const EvalArgs& args) {
  auto records = read_detections_csv(args.detections);
  ConfusionMatrix matrix;
  auto report = eval_records(records, positive_class_from_string(args.positive), &matrix);
  print_metrics(matrix, report);
  if (!args.json.empty()) write_metrics_json(matrix, report, args.json);
  return 0;
}

// --- report ---------------------------------------------------------------------

struct ReportArgs {
  std::string detections;
  std::string out;
  std::string positive = "attacked";
  std::string frames_in;  // also decorate these frames
  int workers = 1;
};

int run_report(const ReportArgs& args) {
  auto records = read_detections_csv(args.detections);
  auto matrix = confusion(records, positive_class_from_string(args.positive));
  auto paths = write_report(records, matrix, args.out);
  std::printf("[advfilter] wrote %zu charts -> %s\n", paths.size(), args.out.c_str());
  if (!args.frames_in.empty()) {
    auto manifest = load_manifest(fs::path(args.frames_in) / "manifest.json");
    auto count = decorate_frames(records, manifest, args.frames_in,
                                 fs::path(args.out) / "decorated", args.workers);
    std::printf("[advfilter] decorated %zu frames -> %s\n", count,
                (fs::path(args.out) / "decorated").string().c_str());
  }
  return 0;
}

// --- run-all ----------------------------------------------------------------------

struct RunAllArgs {
  std::string input;
  std::string out;
  std::vector<double> epsilons = {0.01, 0.02, 0.05, 0.1, 0.2};
  double contamination = 0.1;
  std::uint64_t seed = 42;
  int workers = 1;
  std::string positive = "attacked";
  std::size_t limit = 0;
};

int run_all(const RunAllArgs& args) {
  log_header("run-all", args.seed, args.workers);
  fs::path out(args.out);

  ExtractArgs extract;
  extract.input = args.input;
  extract.out = (out / "frames").string();
  extract.limit = args.limit;
  run_extract(extract);

  AttackArgs attack;
  attack.input = extract.out;
  attack.out = (out / "attacked").string();
  attack.epsilons = args.epsilons;
  attack.seed = args.seed;
  attack.workers = args.workers;
  run_attack(attack);

  DetectArgs detect;
  detect.input = attack.out;
  detect.out = (out / "detect").string();
  detect.contamination = args.contamination;
  detect.seed = args.seed;
  detect.workers = args.workers;
  run_detect(detect);

  auto records = read_detections_csv(fs::path(detect.out) / "detections.csv");
  for (auto positive : {PositiveClass::attacked, PositiveClass::clean}) {
    ConfusionMatrix matrix;
    auto report = eval_records(records, positive, &matrix);
    write_metrics_json(matrix, report,
                       out / ("metrics_" + to_string(positive) + ".json"));
  }
  ConfusionMatrix matrix;
  auto report = eval_records(records, positive_class_from_string(args.positive), &matrix);
  print_metrics(matrix, report);
  write_metrics_json(matrix, report, out / "metrics.json");

  ReportArgs rep;
  rep.detections = (fs::path(detect.out) / "detections.csv").string();
  rep.out = (out / "report").string();
  rep.positive = args.positive;
  rep.frames_in = attack.out;
  rep.workers = args.workers;
  run_report(rep);

  std::printf("%s\n", (out / "metrics.json").string().c_str());
  return 0;
}

// --- selftest ---------------------------------------------------------------------

bool selftest_gradient() {
  TinyNet net(42);
  Frame frame = [] {
    Frame f;
    f.width = 64;
    f.height = 64;
    f.pixels.resize(64 * 64 * 3);
    SplitMix64 rng(7);
    for (auto& p : f.pixels) p = rng.next_unit();
    return f;
  }();
  auto input = TinyNet::resample_input(frame);
  int label = net.predict(input).label;
  auto grad = net.input_gradient(input, label);

  SplitMix64 pick(99);
  double worst = 0.0;
  for (int k = 0; k < 16; ++k) {
    std::size_t i = pick.next_index(input.size());
    // Central difference with step halving: accept the finer estimate once
    // two steps agree, so ReLU kinks cannot masquerade as gradient bugs.
    double fd = 0.0;
    bool converged = false;
    for (double h : {1e-4, 1e-5, 1e-6}) {
      auto eval = [&](double step) {
        auto probe = input;
        probe[i] += step;
        return net.loss(probe, label);
      };
      double coarse = (eval(h) - eval(-h)) / (2.0 * h);
      double fine = (eval(h / 2) - eval(-h / 2)) / h;
      double denom = std::max({std::abs(coarse), std::abs(fine), 1e-6});
      if (std::abs(coarse - fine) / denom <= 1e-4) {
        fd = fine;
        converged = true;
        break;
      }
      fd = fine;
    }
    if (!converged) continue;  // kinked coordinate; the remaining ones decide
    double denom = std::max({std::abs(grad[i]), std::abs(fd), 1e-6});
    worst = std::max(worst, std::abs(grad[i] - fd) / denom);
  }
  return worst <= 1e-3;
}

bool selftest_isolation() {
  if (std::abs(IsoForest::c_factor(2) - 0.15443133) > 1e-7) return false;
  std::vector<std::vector<double>> data(50, {0.0});
  data.push_back({1000.0});
  ForestParams params;
  params.trees = 50;
  params.psi = 51;
  auto forest = IsoForest::fit(data, params);
  return forest.score({1000.0}) > forest.score({0.0});
}

bool selftest_metrics() {
  ConfusionMatrix m;
  m.tp = 109;
  m.fp = 0;
  m.tn = 77;
  m.fn = 13;
  m.positive = PositiveClass::clean;
  auto r = metrics(m);
  return std::abs(r.acc - 0.935) <= 0.001 && std::abs(r.err - 0.065) <= 0.001 &&
         std::abs(r.sn - 0.893) <= 0.001 && r.sp == 1.0 && r.prec == 1.0 &&
         std::abs(r.f1 - 0.943) <= 0.001;
}

int run_selftest() {
  log_header("selftest", 42, 1);
  struct Check {
    const char* name;
    bool (*fn)();
  };
  const Check checks[] = {
      {"gradient finite-difference agreement", selftest_gradient},
      {"isolation forest outlier ranking", selftest_isolation},
      {"reference metric reproduction", selftest_metrics},
  };
  bool all_ok = true;
  for (const auto& check : checks) {
    bool ok = check.fn();
    std::printf("selftest %s: %s\n", check.name, ok ? "ok" : "FAILED");
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FGSM perturbation generator and isolation-forest frame filter"};
  app.require_subcommand(1);
  int workers = default_workers();

  ExtractArgs extract;
  auto* extract_cmd = app.add_subcommand("extract", "Decode a Y4M video into PPM frames");
  extract_cmd->add_option("--input", extract.input, "Y4M input file")->required();
  extract_cmd->add_option("--out", extract.out, "output frame directory")->required();
  extract_cmd->add_option("--limit", extract.limit, "keep at most this many frames");

  AttackArgs attack;
  attack.workers = workers;
  auto* attack_cmd = app.add_subcommand("attack", "Write FGSM-perturbed variants of clean frames");
  attack_cmd->add_option("--input", attack.input, "frame directory with manifest.json")
      ->required();
  attack_cmd->add_option("--out", attack.out, "output directory")->required();
  attack_cmd->add_option("--epsilons", attack.epsilons, "comma-separated L-inf budgets")
      ->delimiter(',');
  attack_cmd->add_option("--seed", attack.seed, "model seed");
  attack_cmd->add_option("--workers", attack.workers, "parallel workers");

  DetectArgs detect;
  detect.workers = workers;
  auto* detect_cmd = app.add_subcommand("detect", "Score frames with an isolation forest");
  detect_cmd->add_option("--input", detect.input, "frame directory with manifest.json")
      ->required();
  detect_cmd->add_option("--out", detect.out, "output directory")->required();
  detect_cmd->add_option("--mode", detect.mode, "batch or stream")
      ->check(CLI::IsMember({"batch", "stream"}));
  detect_cmd->add_option("--warmup", detect.warmup, "stream mode: frames used for fitting");
  detect_cmd->add_option("--refit-every", detect.refit_every,
                         "stream mode: refit cadence (0 = never)");
  detect_cmd->add_option("--trees", detect.trees, "forest size");
  detect_cmd->add_option("--psi", detect.psi, "subsample size per tree");
  detect_cmd->add_option("--contamination", detect.contamination,
                         "expected anomaly share in (0, 0.5]");
  detect_cmd->add_option("--seed", detect.seed, "forest seed");
  detect_cmd->add_option("--workers", detect.workers, "parallel workers");
  detect_cmd->add_option("--forest", detect.forest, "reuse a saved forest (batch only)");
  detect_cmd->add_option("--filter-out", detect.filter_out, "copy passed frames here");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compute metrics from a detections.csv");
  eval_cmd->add_option("--detections", eval.detections, "detections.csv path")->required();
  eval_cmd->add_option("--positive", eval.positive, "positive class")
      ->check(CLI::IsMember({"attacked", "clean"}));
  eval_cmd->add_option("--json", eval.json, "also write metrics JSON here");

  ReportArgs report;
  report.workers = workers;
  auto* report_cmd = app.add_subcommand("report", "Render SVG charts from a detections.csv");
  report_cmd->add_option("--detections", report.detections, "detections.csv path")->required();
  report_cmd->add_option("--out", report.out, "output directory")->required();
  report_cmd->add_option("--positive", report.positive, "positive class for the heatmap")
      ->check(CLI::IsMember({"attacked", "clean"}));
  report_cmd->add_option("--frames-in", report.frames_in,
                         "frame directory to decorate (writes <out>/decorated)");
  report_cmd->add_option("--workers", report.workers, "parallel workers");

  RunAllArgs all;
  all.workers = workers;
  auto* all_cmd =
      app.add_subcommand("run-all", "extract -> attack -> detect -> eval -> report pipeline");
  all_cmd->add_option("--input", all.input, "Y4M input file")->required();
  all_cmd->add_option("--out", all.out, "output tree")->required();
  all_cmd->add_option("--epsilons", all.epsilons, "comma-separated L-inf budgets")
      ->delimiter(',');
  all_cmd->add_option("--contamination", all.contamination, "expected anomaly share");
  all_cmd->add_option("--seed", all.seed, "model and forest seed");
  all_cmd->add_option("--workers", all.workers, "parallel workers");
  all_cmd->add_option("--positive", all.positive, "positive class for metrics.json")
      ->check(CLI::IsMember({"attacked", "clean"}));
  all_cmd->add_option("--limit", all.limit, "keep at most this many input frames");

  auto* selftest_cmd = app.add_subcommand("selftest", "Run the built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }

  try {
    if (extract_cmd->parsed()) return run_extract(extract);
    if (attack_cmd->parsed()) return run_attack(attack);
    if (detect_cmd->parsed()) return run_detect(detect);
    if (eval_cmd->parsed()) return run_eval(eval);
    if (report_cmd->parsed()) return run_report(report);
    if (all_cmd->parsed()) return run_all(all);
    if (selftest_cmd->parsed()) return run_selftest();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
