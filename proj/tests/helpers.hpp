#pragma once

// Shared fixtures and checks for the test binaries.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"

#include "advfilter/frame.hpp"
#include "advfilter/pipeline.hpp"
#include "advfilter/rng.hpp"

namespace testutil {

inline advfilter::Frame make_frame(int w, int h,
                                   const std::function<double(int x, int y, int c)>& fn) {
  advfilter::Frame f;
  f.width = w;
  f.height = h;
  f.pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        f.pixels[(static_cast<std::size_t>(y) * w + x) * 3 + c] = fn(x, y, c);
  return f;
}

inline advfilter::Frame constant_frame(int w, int h, double v) {
  return make_frame(w, h, [v](int, int, int) { return v; });
}

// Smooth synthetic content with slow per-frame drift and faint pixel noise:
// the "natural video" stand-in for detection fixtures. Values stay inside
// [0.05, 0.95] so moderate perturbations do not clip.
inline advfilter::Frame synthetic_clean_frame(std::size_t index, int w, int h,
                                              std::uint64_t seed = 7) {
  advfilter::SplitMix64 rng(seed + index * 0x9E3779B9ull);
  advfilter::Frame f = make_frame(w, h, [&](int x, int y, int c) {
    double u = static_cast<double>(x) / w;
    double v = static_cast<double>(y) / h;
    double drift = 0.03 * static_cast<double>(index);
    double base = 0.5 + 0.22 * std::sin(6.28318 * (u + 0.13 * c) + drift) *
                            std::cos(6.28318 * v - 0.5 * drift) +
                  0.12 * std::sin(3.14159 * (u + v) + 0.2 * drift);
    return base;
  });
  for (double& p : f.pixels) {
    p += rng.next_symmetric(0.002);
    p = std::clamp(p, 0.05, 0.95);
  }
  f.index = index;
  return f;
}

inline std::vector<advfilter::Frame> synthetic_video(std::size_t n, int w, int h,
                                                     std::uint64_t seed = 7) {
  std::vector<advfilter::Frame> frames;
  frames.reserve(n);
  for (std::size_t i = 0; i < n; ++i) frames.push_back(synthetic_clean_frame(i, w, h, seed));
  return frames;
}

// Detection records with the headline counts of the reference run: 199
// frames, 77 attacked (all flagged), 13 clean frames flagged, 109 clean
// frames passed. Scores are synthesized consistently with the threshold.
inline std::vector<advfilter::DetectionRecord> reference_records() {
  using advfilter::DetectionRecord;
  using advfilter::Truth;
  std::vector<DetectionRecord> records;
  const double threshold = 0.5;
  advfilter::SplitMix64 rng(2024);
  auto add = [&](std::size_t count, Truth truth, bool flagged) {
    for (std::size_t k = 0; k < count; ++k) {
      DetectionRecord r;
      r.frame_index = records.size();
      r.truth = truth;
      r.flagged = flagged;
      r.threshold = threshold;
      r.score = flagged ? 0.55 + 0.4 * rng.next_unit() : 0.1 + 0.35 * rng.next_unit();
      if (truth == Truth::attacked) r.epsilon = 0.1;
      records.push_back(r);
    }
  };
  add(77, Truth::attacked, true);   // true positives (attacked as positive)
  add(13, Truth::clean, true);      // false positives
  add(109, Truth::clean, false);    // true negatives
  return records;
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<unsigned char>{std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_file_text(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

// Fresh writable directory under the system temp root, unique per call.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  auto base = std::filesystem::temp_directory_path() /
              ("advfilter_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
               std::to_string(counter++));
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  return base;
}

// Byte-level comparison of two directory trees (regular files only).
inline bool dirs_equal(const std::filesystem::path& a, const std::filesystem::path& b,
                       std::string* diff = nullptr) {
  std::map<std::string, std::filesystem::path> fa, fb;
  for (auto& entry : std::filesystem::recursive_directory_iterator(a)) {
    if (entry.is_regular_file()) fa[std::filesystem::relative(entry.path(), a).string()] = entry.path();
  }
  for (auto& entry : std::filesystem::recursive_directory_iterator(b)) {
    if (entry.is_regular_file()) fb[std::filesystem::relative(entry.path(), b).string()] = entry.path();
  }
  if (fa.size() != fb.size()) {
    if (diff) *diff = "file counts differ";
    return false;
  }
  for (auto& [rel, path] : fa) {
    auto it = fb.find(rel);
    if (it == fb.end()) {
      if (diff) *diff = "missing " + rel;
      return false;
    }
    if (read_file_bytes(path) != read_file_bytes(it->second)) {
      if (diff) *diff = "content differs: " + rel;
      return false;
    }
  }
  return true;
}

// Minimal XML well-formedness check: balanced tags, quoted attributes, legal
// entities. Enough to catch malformed SVG output.
inline bool xml_well_formed(const std::string& text) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  bool seen_element = false;
  auto legal_entity = [&](std::size_t at) {
    static const char* names[] = {"&amp;", "&lt;", "&gt;", "&quot;", "&apos;"};
    for (const char* n : names) {
      if (text.compare(at, std::char_traits<char>::length(n), n) == 0) return true;
    }
    return text.compare(at, 2, "&#") == 0;
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '>') return false;  // raw '>' outside a tag is tolerated by parsers, but we never emit it
    if (c == '&') {
      if (!legal_entity(i)) return false;
      ++i;
      continue;
    }
    if (c != '<') {
      ++i;
      continue;
    }
    // tag
    std::size_t j = i + 1;
    if (j < text.size() && text[j] == '?') {  // declaration
      j = text.find("?>", j);
      if (j == std::string::npos) return false;
      i = j + 2;
      continue;
    }
    bool closing = j < text.size() && text[j] == '/';
    if (closing) ++j;
    std::size_t name_start = j;
    while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == ':' ||
                               text[j] == '-' || text[j] == '_')) {
      ++j;
    }
    if (j == name_start) return false;
    std::string name = text.substr(name_start, j - name_start);
    // attributes: skip to '>' honoring quotes
    bool self_closing = false;
    char quote = 0;
    while (j < text.size()) {
      char t = text[j];
      if (quote) {
        if (t == quote) quote = 0;
      } else if (t == '"' || t == '\'') {
        quote = t;
      } else if (t == '>') {
        break;
      } else if (t == '/' && j + 1 < text.size() && text[j + 1] == '>') {
        self_closing = true;
      }
      ++j;
    }
    if (j >= text.size()) return false;  // unterminated tag
    if (closing) {
      if (self_closing || stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else if (!self_closing) {
      stack.push_back(name);
    }
    seen_element = true;
    i = j + 1;
  }
  return stack.empty() && seen_element;
}

}  // namespace testutil
