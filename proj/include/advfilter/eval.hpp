#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "advfilter/pipeline.hpp"

namespace advfilter {

// A flagged frame is a prediction of "attacked". Which class counts as
// positive is an explicit choice: swapping it swaps tp<->tn and fp<->fn.
enum class PositiveClass { attacked, clean };

std::string to_string(PositiveClass p);
PositiveClass positive_class_from_string(const std::string& s);

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  PositiveClass positive = PositiveClass::attacked;

  std::size_t total() const { return tp + fp + tn + fn; }
};

struct MetricsReport {
  double err = 0, acc = 0, sn = 0, sp = 0, prec = 0, fpr = 0, f1 = 0;
  std::optional<double> auc;
  bool degenerate = false;  // some metric hit a 0/0 denominator
};

ConfusionMatrix confusion(const std::vector<DetectionRecord>& records, PositiveClass positive);

// ERR=(FP+FN)/total, ACC=(TP+TN)/total, SN=TP/(TP+FN), SP=TN/(TN+FP),
// PREC=TP/(TP+FP), FPR=FP/(TN+FP), F1=2*PREC*SN/(PREC+SN). A 0/0 denominator
// yields 1.0 for SN/SP/PREC (0.0 for FPR and F1) and sets `degenerate`.
MetricsReport metrics(const ConfusionMatrix& m);

struct RocPoint {
  double fpr = 0, tpr = 0;
};

struct RocResult {
  std::vector<RocPoint> points;  // (0,0) ... (1,1)
  double auc = 0;
};

// Attacked frames are the positive class; higher score must mean "more
// likely attacked". Thresholds sweep the distinct scores descending (ties
// grouped); AUC by trapezoid.
RocResult roc(const std::vector<DetectionRecord>& records);

void write_metrics_json(const ConfusionMatrix& m, const MetricsReport& r,
                        const std::filesystem::path& path);

}  // namespace advfilter
