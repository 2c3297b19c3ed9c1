#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "advfilter/errors.hpp"

namespace advfilter {

// One decoded RGB image. Pixels are row-major, channels interleaved
// (R,G,B), every intensity in [0,1].
struct Frame {
  std::size_t index = 0;
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  double at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  double& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  bool same_size(const Frame& other) const {
    return width == other.width && height == other.height;
  }

  // Checks the structural invariants; throws ShapeMismatch on violation.
  void validate() const;
};

enum class Role { clean, adversarial };

std::string to_string(Role role);
Role role_from_string(const std::string& s);

struct ManifestEntry {
  std::size_t index = 0;
  std::string path;  // relative to the manifest's directory
  Role role = Role::clean;
  std::optional<double> epsilon;  // present iff role == adversarial
};

// The structured frame dataset: header info plus one entry per frame file,
// sorted by (index, role, epsilon) with clean before adversarial.
struct DatasetManifest {
  std::string source;
  int fps_num = 0;
  int fps_den = 1;
  int width = 0;
  int height = 0;
  std::vector<ManifestEntry> entries;
};

// Throws SchemaViolation naming the offending entry when an invariant
// (ordering, epsilon presence, positive fps) is broken.
void validate_manifest(const DatasetManifest& manifest);

}  // namespace advfilter
