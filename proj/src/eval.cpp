#include "advfilter/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "advfilter/errors.hpp"

namespace advfilter {

std::string to_string(PositiveClass p) {
  return p == PositiveClass::attacked ? "attacked" : "clean";
}

PositiveClass positive_class_from_string(const std::string& s) {
  if (s == "attacked") return PositiveClass::attacked;
  if (s == "clean") return PositiveClass::clean;
  throw SchemaViolation("positive class must be attacked or clean, got '" + s + "'");
}

ConfusionMatrix confusion(const std::vector<DetectionRecord>& records, PositiveClass positive) {
  ConfusionMatrix m;
  m.positive = positive;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.truth == Truth::unknown) {
      throw UnknownTruth("record " + std::to_string(i) + " (frame " +
                         std::to_string(r.frame_index) + ") has unknown truth");
    }
    // flagged is a prediction of "attacked"
    bool truth_positive = (r.truth == Truth::attacked) == (positive == PositiveClass::attacked);
    bool predicted_positive = r.flagged == (positive == PositiveClass::attacked);
    if (truth_positive && predicted_positive) ++m.tp;
    if (truth_positive && !predicted_positive) ++m.fn;
    if (!truth_positive && predicted_positive) ++m.fp;
    if (!truth_positive && !predicted_positive) ++m.tn;
  }
  return m;
}

MetricsReport metrics(const ConfusionMatrix& m) {
  if (m.total() == 0) throw EmptyMatrix("confusion matrix has no counts");
  MetricsReport r;
  double tp = static_cast<double>(m.tp), fp = static_cast<double>(m.fp);
  double tn = static_cast<double>(m.tn), fn = static_cast<double>(m.fn);
  double total = tp + fp + tn + fn;

  r.err = (fp + fn) / total;
  r.acc = (tp + tn) / total;

  // 0/0 ratios resolve to 1.0 (0.0 for rates of wrong predictions) and mark
  // the report degenerate rather than aborting on one-class slices.
  auto ratio = [&r](double num, double den, double empty_value) {
    if (den == 0.0) {
      r.degenerate = true;
      return empty_value;
    }
    return num / den;
  };
  r.sn = ratio(tp, tp + fn, 1.0);
  r.sp = ratio(tn, tn + fp, 1.0);
  r.prec = ratio(tp, tp + fp, 1.0);
  r.fpr = ratio(fp, tn + fp, 0.0);
  r.f1 = ratio(2.0 * r.prec * r.sn, r.prec + r.sn, 0.0);
  return r;
}

RocResult roc(const std::vector<DetectionRecord>& records) {
  std::size_t positives = 0, negatives = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].truth == Truth::unknown) {
      throw UnknownTruth("record " + std::to_string(i) + " has unknown truth");
    }
    if (!std::isfinite(records[i].score)) {
      throw NonFiniteFeature("record " + std::to_string(i) + " has a non-finite score");
    }
    (records[i].truth == Truth::attacked ? positives : negatives) += 1;
  }
  if (positives == 0 || negatives == 0) {
    throw SingleClass("ROC needs both truth classes (" + std::to_string(positives) +
                      " attacked, " + std::to_string(negatives) + " clean)");
  }

  // Sort by score descending; sweep thresholds at each distinct score so tied
  // scores enter the curve together.
  std::vector<const DetectionRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const DetectionRecord* a, const DetectionRecord* b) {
                     return a->score > b->score;
                   });

  RocResult result;
  result.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  double auc = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  while (i < sorted.size()) {
    double score = sorted[i]->score;
    while (i < sorted.size() && sorted[i]->score == score) {
      (sorted[i]->truth == Truth::attacked ? tp : fp) += 1;
      ++i;
    }
    double tpr = static_cast<double>(tp) / static_cast<double>(positives);
    double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
    result.points.push_back({fpr, tpr});
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  result.auc = auc;
  return result;
}

void write_metrics_json(const ConfusionMatrix& m, const MetricsReport& r,
                        const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["positive_class"] = to_string(m.positive);
  doc["tp"] = m.tp;
  doc["fp"] = m.fp;
  doc["tn"] = m.tn;
  doc["fn"] = m.fn;
  doc["err"] = r.err;
  doc["acc"] = r.acc;
  doc["sn"] = r.sn;
  doc["sp"] = r.sp;
  doc["prec"] = r.prec;
  doc["fpr"] = r.fpr;
  doc["f1"] = r.f1;
  if (r.auc) {
    doc["auc"] = *r.auc;
  } else {
    doc["auc"] = nullptr;
  }
  doc["degenerate"] = r.degenerate;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace advfilter
