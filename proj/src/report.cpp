#include "advfilter/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>

#include "advfilter/errors.hpp"
#include "advfilter/frame_io.hpp"
#include "advfilter/parallel.hpp"

namespace advfilter {

namespace {

constexpr int kW = 960, kH = 540;
constexpr int kLeft = 80, kRight = 30, kTop = 60, kBottom = 70;
constexpr int kPlotW = kW - kLeft - kRight;
constexpr int kPlotH = kH - kTop - kBottom;

constexpr const char* kBlue = "#4472c4";
constexpr const char* kRed = "#e15759";
constexpr const char* kGreen = "#59a14f";
constexpr const char* kGray = "#8f9499";
constexpr const char* kYellow = "#e0b400";

std::string esc(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

struct Svg {
  std::string body;

  explicit Svg(const std::string& title) {
    body += fmt(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
        "viewBox=\"0 0 %d %d\">\n",
        kW, kH, kW, kH);
    body += fmt("<rect x=\"0\" y=\"0\" width=\"%d\" height=\"%d\" fill=\"#ffffff\"/>\n", kW, kH);
    body += fmt(
        "<text x=\"%d\" y=\"32\" font-family=\"sans-serif\" font-size=\"20\" "
        "text-anchor=\"middle\" fill=\"#202124\">%s</text>\n",
        kW / 2, esc(title).c_str());
  }

  void line(double x1, double y1, double x2, double y2, const char* color, double width = 1.0) {
    body += fmt(
        "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" "
        "stroke-width=\"%.2f\"/>\n",
        x1, y1, x2, y2, color, width);
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const char* stroke = nullptr) {
    body += fmt("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\"", x, y, w,
                h, fill.c_str());
    if (stroke) body += fmt(" stroke=\"%s\"", stroke);
    body += "/>\n";
  }

  void circle(double cx, double cy, double r, const char* fill) {
    body += fmt("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\"/>\n", cx, cy, r, fill);
  }

  void cross(double cx, double cy, double r, const char* color) {
    line(cx - r, cy - r, cx + r, cy + r, color, 1.6);
    line(cx - r, cy + r, cx + r, cy - r, color, 1.6);
  }

  void text(double x, double y, const std::string& s, const char* anchor = "middle",
            int size = 14, const char* color = "#202124") {
    body += fmt(
        "<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"%d\" "
        "text-anchor=\"%s\" fill=\"%s\">%s</text>\n",
        x, y, size, anchor, color, esc(s).c_str());
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color,
                double width = 1.5) {
    if (pts.empty()) return;
    body += fmt("<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"%.2f\" points=\"", color,
                width);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      body += fmt(i == 0 ? "%.2f,%.2f" : " %.2f,%.2f", pts[i].first, pts[i].second);
    }
    body += "\"/>\n";
  }

  void axes() {
    line(kLeft, kTop, kLeft, kTop + kPlotH, "#202124", 1.2);
    line(kLeft, kTop + kPlotH, kLeft + kPlotW, kTop + kPlotH, "#202124", 1.2);
  }

  std::string finish() {
    return body + "</svg>\n";
  }
};

double map_x(std::size_t i, std::size_t n) {
  if (n <= 1) return kLeft + kPlotW / 2.0;
  return kLeft + (static_cast<double>(i) / static_cast<double>(n - 1)) * kPlotW;
}

double map_score_y(double score) {
  return kTop + (1.0 - std::clamp(score, 0.0, 1.0)) * kPlotH;
}

// Outcome shorthand used by markers and borders; truth must be known.
enum class Outcome { tp, fp, fn, tn };

Outcome outcome_of(const DetectionRecord& r, std::size_t position) {
  if (r.truth == Truth::unknown) {
    throw UnknownTruth("record " + std::to_string(position) + " has unknown truth");
  }
  bool attacked = r.truth == Truth::attacked;
  if (r.flagged) return attacked ? Outcome::tp : Outcome::fp;
  return attacked ? Outcome::fn : Outcome::tn;
}

std::string render_distribution(const std::string& title,
                                const std::vector<DetectionRecord>& records) {
  std::size_t actual_attacked = 0, detected = 0, undetected = 0, passed = 0, actual_clean = 0;
  for (const auto& r : records) {
    bool attacked = r.truth == Truth::attacked;
    if (attacked) ++actual_attacked;
    if (r.truth == Truth::clean) ++actual_clean;
    if (r.flagged) ++detected;
    if (!r.flagged) ++passed;
    if (attacked && !r.flagged) ++undetected;
  }
  struct Bar {
    const char* label;
    std::size_t value;
    const char* color;
  };
  const Bar bars[5] = {
      {"attacked (actual)", actual_attacked, kRed},
      {"detected", detected, kBlue},
      {"undetected", undetected, kYellow},
      {"passed", passed, kGray},
      {"clean (actual)", actual_clean, kGreen},
  };
  std::size_t max_value = 1;
  for (const auto& b : bars) max_value = std::max(max_value, b.value);

  Svg svg(title);
  svg.axes();
  double slot = static_cast<double>(kPlotW) / 5.0;
  for (int i = 0; i < 5; ++i) {
    double h = (static_cast<double>(bars[i].value) / static_cast<double>(max_value)) * kPlotH;
    double x = kLeft + slot * i + slot * 0.2;
    double w = slot * 0.6;
    double y = kTop + kPlotH - h;
    svg.rect(x, y, w, h, bars[i].color);
    svg.text(x + w / 2, y - 6, std::to_string(bars[i].value));
    svg.text(x + w / 2, kTop + kPlotH + 22, bars[i].label, "middle", 12);
  }
  svg.text(kLeft, kH - 16,
           fmt("%zu frames, %zu flagged", records.size(), detected), "start", 12, "#5f6368");
  return svg.finish();
}

std::string render_timeline(const std::string& title,
                            const std::vector<DetectionRecord>& records) {
  Svg svg(title);
  svg.axes();
  const double flagged_y = kTop + kPlotH * 0.3;
  const double clean_y = kTop + kPlotH * 0.7;
  svg.text(kLeft - 8, flagged_y + 4, "flagged", "end", 12);
  svg.text(kLeft - 8, clean_y + 4, "passed", "end", 12);
  svg.text(kLeft + kPlotW / 2.0, kTop + kPlotH + 34, "frame", "middle", 12);
  for (std::size_t i = 0; i < records.size(); ++i) {
    double x = map_x(i, records.size());
    if (records[i].flagged) {
      svg.cross(x, flagged_y, 4.0, kRed);
    } else {
      svg.circle(x, clean_y, 3.0, kGreen);
    }
  }
  svg.text(kLeft, kH - 16, fmt("%zu frames", records.size()), "start", 12, "#5f6368");
  return svg.finish();
}

std::string render_actual_vs_detected(const std::string& title,
                                      const std::vector<DetectionRecord>& records) {
  std::size_t actual_attacked = 0, detected = 0, agree = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.truth == Truth::unknown) {
      throw UnknownTruth("record " + std::to_string(i) + " has unknown truth");
    }
    bool attacked = r.truth == Truth::attacked;
    if (attacked) ++actual_attacked;
    if (r.flagged) ++detected;
    if (r.flagged == attacked) ++agree;
  }
  double accuracy =
      records.empty() ? 1.0 : static_cast<double>(agree) / static_cast<double>(records.size());

  Svg svg(title);
  svg.axes();
  const double actual_y = kTop + kPlotH * 0.32;
  const double detected_y = kTop + kPlotH * 0.68;
  svg.text(kLeft - 8, actual_y + 4, "actual", "end", 12);
  svg.text(kLeft - 8, detected_y + 4, "detected", "end", 12);
  svg.text(kLeft + kPlotW / 2.0, kTop + kPlotH + 34, "frame", "middle", 12);
  for (std::size_t i = 0; i < records.size(); ++i) {
    double x = map_x(i, records.size());
    if (records[i].truth == Truth::attacked) {
      svg.rect(x - 3, actual_y - 3, 6, 6, kRed);
    } else {
      svg.circle(x, actual_y, 2.0, kGray);
    }
    if (records[i].flagged) {
      svg.rect(x - 3, detected_y - 3, 6, 6, kBlue);
    } else {
      svg.circle(x, detected_y, 2.0, kGray);
    }
  }
  svg.text(kLeft + kPlotW / 2.0, kH - 16,
           fmt("actual attacked %zu, detected %zu, accuracy %.2f%%", actual_attacked, detected,
               accuracy * 100.0),
           "middle", 14);
  return svg.finish();
}

std::string render_threshold_line(const std::string& title,
                                  const std::vector<DetectionRecord>& records) {
  Svg svg(title);
  svg.axes();
  for (int tick = 0; tick <= 4; ++tick) {
    double v = tick * 0.25;
    double y = map_score_y(v);
    svg.line(kLeft - 4, y, kLeft, y, "#202124", 1.0);
    svg.text(kLeft - 8, y + 4, fmt("%.2f", v), "end", 11);
  }
  svg.text(kLeft + kPlotW / 2.0, kTop + kPlotH + 34, "frame", "middle", 12);

  std::vector<std::pair<double, double>> score_pts, threshold_pts;
  for (std::size_t i = 0; i < records.size(); ++i) {
    double x = map_x(i, records.size());
    score_pts.push_back({x, map_score_y(records[i].score)});
    threshold_pts.push_back({x, map_score_y(records[i].threshold)});
  }
  svg.polyline(threshold_pts, kGray, 1.2);
  svg.polyline(score_pts, kBlue, 1.4);
  for (std::size_t i = 0; i < records.size(); ++i) {
    double x = map_x(i, records.size());
    double y = map_score_y(records[i].score);
    switch (outcome_of(records[i], i)) {
      case Outcome::tp: svg.circle(x, y, 3.0, kGreen); break;   // accurate detection
      case Outcome::fp: svg.circle(x, y, 3.0, kRed); break;     // false detection
      case Outcome::fn: svg.circle(x, y, 3.0, kYellow); break;  // undetected attack
      case Outcome::tn: break;
    }
  }
  svg.text(kLeft, kH - 16, "score (blue), threshold (gray); accurate / false / undetected markers",
           "start", 12, "#5f6368");
  return svg.finish();
}

std::string ramp_color(double t) {
  // Light steel to deep blue, monotone in t.
  int r = static_cast<int>(std::lround(235 + t * (31 - 235)));
  int g = static_cast<int>(std::lround(240 + t * (78 - 240)));
  int b = static_cast<int>(std::lround(248 + t * (156 - 248)));
  return fmt("#%02x%02x%02x", r, g, b);
}

std::string render_heatmap(const std::string& title, const ConfusionMatrix& m) {
  Svg svg(title);
  std::string pos = to_string(m.positive);
  std::string neg = to_string(m.positive == PositiveClass::attacked ? PositiveClass::clean
                                                                    : PositiveClass::attacked);
  // Rows: actual positive/negative. Columns: predicted positive/negative.
  const std::size_t cells[2][2] = {{m.tp, m.fn}, {m.fp, m.tn}};
  std::size_t max_count = 1;
  for (auto& row : cells)
    for (auto v : row) max_count = std::max(max_count, v);

  const double grid = std::min(kPlotW, kPlotH) * 0.45;
  const double x0 = kW / 2.0 - grid, y0 = kTop + 30;
  for (int row = 0; row < 2; ++row) {
    for (int col = 0; col < 2; ++col) {
      double t = static_cast<double>(cells[row][col]) / static_cast<double>(max_count);
      double x = x0 + col * grid, y = y0 + row * grid;
      svg.rect(x, y, grid, grid, ramp_color(t), "#ffffff");
      svg.text(x + grid / 2, y + grid / 2 + 7, std::to_string(cells[row][col]), "middle", 22,
               t > 0.55 ? "#ffffff" : "#202124");
    }
  }
  svg.text(x0 + grid, y0 - 28, "predicted", "middle", 13);
  svg.text(x0 + grid / 2, y0 - 10, pos, "middle", 12);
  svg.text(x0 + grid * 1.5, y0 - 10, neg, "middle", 12);
  svg.text(x0 - 14, y0 + grid / 2 + 4, pos, "end", 12);
  svg.text(x0 - 14, y0 + grid * 1.5 + 4, neg, "end", 12);
  svg.text(x0 - 60, y0 + grid, "actual", "end", 13);
  return svg.finish();
}

}  // namespace

std::string render_chart(ChartKind kind, const std::string& title,
                         const std::vector<DetectionRecord>& records) {
  switch (kind) {
    case ChartKind::distribution_bars: return render_distribution(title, records);
    case ChartKind::timeline: return render_timeline(title, records);
    case ChartKind::actual_vs_detected: return render_actual_vs_detected(title, records);
    case ChartKind::threshold_line: return render_threshold_line(title, records);
    case ChartKind::confusion_heatmap:
      throw MissingInput("confusion_heatmap needs a confusion matrix, not records");
  }
  throw MissingInput("unknown chart kind");
}

std::string render_chart(ChartKind kind, const std::string& title, const ConfusionMatrix& matrix) {
  if (kind != ChartKind::confusion_heatmap) {
    throw MissingInput("only confusion_heatmap renders from a matrix");
  }
  return render_heatmap(title, matrix);
}

std::vector<std::filesystem::path> write_report(const std::vector<DetectionRecord>& records,
                                                const ConfusionMatrix& matrix,
                                                const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  struct Item {
    const char* file;
    std::string content;
  };
  const Item items[5] = {
      {"distribution.svg",
       render_chart(ChartKind::distribution_bars, "Distribution of Attack Detection Results",
                    records)},
      {"timeline.svg", render_chart(ChartKind::timeline, "Timeline of Detected Attacks", records)},
      {"actual_vs_detected.svg",
       render_chart(ChartKind::actual_vs_detected, "Actual vs Detected Attacks", records)},
      {"thresholds.svg",
       render_chart(ChartKind::threshold_line, "Anomaly Scores and Threshold", records)},
      {"confusion.svg", render_chart(ChartKind::confusion_heatmap, "Confusion Matrix", matrix)},
  };
  std::vector<std::filesystem::path> written;
  for (const auto& item : items) {
    auto path = out_dir / item.file;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << item.content;
    if (!out) throw IoError("short write to " + path.string());
    written.push_back(path);
  }
  return written;
}

namespace {

// A pixel is interior when x >= 5, y >= 5, x <= w-5 and y <= h-5; everything
// else gets painted. On a 10x10 frame that leaves exactly (5,5) untouched.
void paint_border(Frame& frame, double r, double g, double b) {
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      bool interior = x >= 5 && y >= 5 && x <= frame.width - 5 && y <= frame.height - 5;
      if (interior) continue;
      std::size_t at = (static_cast<std::size_t>(y) * frame.width + x) * 3;
      frame.pixels[at] = r;
      frame.pixels[at + 1] = g;
      frame.pixels[at + 2] = b;
    }
  }
}

}  // namespace

std::size_t decorate_frames(const std::vector<DetectionRecord>& records,
                            const DatasetManifest& manifest, const std::filesystem::path& in_dir,
                            const std::filesystem::path& out_dir, int workers) {
  if (records.size() != manifest.entries.size()) {
    throw ShapeMismatch("record count " + std::to_string(records.size()) +
                        " does not match manifest entries " +
                        std::to_string(manifest.entries.size()));
  }
  std::filesystem::create_directories(out_dir);
  parallel_for(records.size(), workers, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    Outcome o = outcome_of(records[i], i);
    if (o == Outcome::tn) {
      // Correctly passed frames stay byte-identical.
      std::error_code ec;
      std::filesystem::copy_file(in_dir / entry.path, out_dir / entry.path,
                                 std::filesystem::copy_options::overwrite_existing, ec);
      if (ec) throw IoError("copy " + (in_dir / entry.path).string() + ": " + ec.message());
      return;
    }
    Frame frame = read_ppm_file(in_dir / entry.path);
    if (o == Outcome::tp) {
      paint_border(frame, 0.0, 1.0, 0.0);
    } else {
      paint_border(frame, 1.0, 0.0, 0.0);
    }
    write_ppm_file(frame, out_dir / entry.path);
  });
  return records.size();
}

}  // namespace advfilter
