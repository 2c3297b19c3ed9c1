#include "advfilter/frame_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace advfilter {

using json = nlohmann::ordered_json;

void Frame::validate() const {
  if (width <= 0 || height <= 0) {
    throw ShapeMismatch("frame dimensions must be positive");
  }
  if (pixels.size() != static_cast<std::size_t>(width) * height * 3) {
    throw ShapeMismatch("pixel count does not match width*height*3");
  }
  for (double v : pixels) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ShapeMismatch("pixel intensity outside [0,1]");
    }
  }
}

std::string to_string(Role role) {
  return role == Role::clean ? "clean" : "adversarial";
}

Role role_from_string(const std::string& s) {
  if (s == "clean") return Role::clean;
  if (s == "adversarial") return Role::adversarial;
  throw SchemaViolation("unknown role: " + s);
}

namespace {

// Ordering key for manifest entries: index, then clean before adversarial,
// then epsilon ascending.
bool entry_less(const ManifestEntry& a, const ManifestEntry& b) {
  if (a.index != b.index) return a.index < b.index;
  if (a.role != b.role) return a.role == Role::clean;
  double ea = a.epsilon.value_or(0.0);
  double eb = b.epsilon.value_or(0.0);
  return ea < eb;
}

}  // namespace

void validate_manifest(const DatasetManifest& m) {
  if (m.fps_num <= 0 || m.fps_den <= 0) {
    throw SchemaViolation("fps must be a positive rational");
  }
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    std::string where = "frames[" + std::to_string(i) + "]";
    if (e.role == Role::adversarial && !e.epsilon.has_value()) {
      throw SchemaViolation(where + ".epsilon: required for adversarial entries");
    }
    if (e.role == Role::clean && e.epsilon.has_value()) {
      throw SchemaViolation(where + ".epsilon: forbidden for clean entries");
    }
    if (i > 0) {
      const auto& p = m.entries[i - 1];
      if (!entry_less(p, e)) {
        throw SchemaViolation(where + ": entries not strictly sorted by index/role/epsilon");
      }
    }
  }
}

// --- Y4M ---------------------------------------------------------------------

namespace {

constexpr const char kY4mMagic[] = "YUV4MPEG2";

struct ChromaGeometry {
  int cw, ch;        // chroma plane dimensions
  bool subsampled;   // 4:2:0 vs 4:4:4
};

ChromaGeometry chroma_geometry(Y4mColorspace cs, int w, int h) {
  if (cs == Y4mColorspace::c444) return {w, h, false};
  return {(w + 1) / 2, (h + 1) / 2, true};
}

// BT.601 full-range YCbCr -> RGB on byte values, result scaled to [0,1]
// and clamped.
inline void ycbcr_to_rgb(double y, double cb, double cr, double* rgb) {
  double r = y + 1.402 * (cr - 128.0);
  double g = y - 0.344136 * (cb - 128.0) - 0.714136 * (cr - 128.0);
  double b = y + 1.772 * (cb - 128.0);
  rgb[0] = std::clamp(r / 255.0, 0.0, 1.0);
  rgb[1] = std::clamp(g / 255.0, 0.0, 1.0);
  rgb[2] = std::clamp(b / 255.0, 0.0, 1.0);
}

}  // namespace

Y4mReader::Y4mReader(std::istream& in) : in_(in) {
  std::string line;
  if (!std::getline(in_, line)) {
    throw MalformedHeader("empty stream");
  }
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != kY4mMagic) {
    throw MalformedHeader("missing YUV4MPEG2 magic");
  }
  bool have_w = false, have_h = false, have_f = false;
  std::string tag;
  while (header >> tag) {
    if (tag.empty()) continue;
    char key = tag[0];
    std::string value = tag.substr(1);
    switch (key) {
      case 'W':
        width_ = std::atoi(value.c_str());
        have_w = width_ > 0;
        break;
      case 'H':
        height_ = std::atoi(value.c_str());
        have_h = height_ > 0;
        break;
      case 'F': {
        auto colon = value.find(':');
        if (colon == std::string::npos) throw MalformedHeader("bad F tag: " + tag);
        fps_num_ = std::atoi(value.substr(0, colon).c_str());
        fps_den_ = std::atoi(value.substr(colon + 1).c_str());
        if (fps_num_ <= 0 || fps_den_ <= 0) throw MalformedHeader("bad frame rate: " + tag);
        have_f = true;
        break;
      }
      case 'C':
        if (value == "420" || value == "420jpeg" || value == "420mpeg2" || value == "444") {
          colorspace_ = value == "444"         ? Y4mColorspace::c444
                        : value == "420jpeg"   ? Y4mColorspace::c420jpeg
                        : value == "420mpeg2"  ? Y4mColorspace::c420mpeg2
                                               : Y4mColorspace::c420;
        } else {
          throw UnsupportedColorspace("colorspace C" + value + " not supported");
        }
        break;
      case 'I':
      case 'A':
      case 'X':
        break;  // interlacing, aspect, extensions: accepted and ignored
      default:
        throw MalformedHeader("unknown header tag: " + tag);
    }
  }
  if (!have_w || !have_h) throw MalformedHeader("missing or invalid W/H");
  if (!have_f) throw MalformedHeader("missing F tag");
}

std::optional<Frame> Y4mReader::next() {
  std::string line;
  if (!std::getline(in_, line)) {
    return std::nullopt;  // clean end of stream
  }
  // FRAME marker, optionally followed by space-separated parameters.
  if (line.rfind("FRAME", 0) != 0 ||
      (line.size() > 5 && line[5] != ' ')) {
    throw MalformedHeader("expected FRAME marker, got: " + line);
  }

  const auto geo = chroma_geometry(colorspace_, width_, height_);
  const std::size_t y_size = static_cast<std::size_t>(width_) * height_;
  const std::size_t c_size = static_cast<std::size_t>(geo.cw) * geo.ch;

  std::vector<unsigned char> planes(y_size + 2 * c_size);
  in_.read(reinterpret_cast<char*>(planes.data()), static_cast<std::streamsize>(planes.size()));
  if (static_cast<std::size_t>(in_.gcount()) != planes.size()) {
    throw TruncatedFrame("frame " + std::to_string(frames_read_) + ": payload shorter than " +
                         std::to_string(planes.size()) + " bytes");
  }

  const unsigned char* yp = planes.data();
  const unsigned char* cbp = yp + y_size;
  const unsigned char* crp = cbp + c_size;

  Frame frame;
  frame.index = frames_read_++;
  frame.width = width_;
  frame.height = height_;
  frame.pixels.resize(y_size * 3);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      int cx = geo.subsampled ? x / 2 : x;
      int cy = geo.subsampled ? y / 2 : y;
      double yy = yp[static_cast<std::size_t>(y) * width_ + x];
      double cb = cbp[static_cast<std::size_t>(cy) * geo.cw + cx];
      double cr = crp[static_cast<std::size_t>(cy) * geo.cw + cx];
      ycbcr_to_rgb(yy, cb, cr, &frame.pixels[(static_cast<std::size_t>(y) * width_ + x) * 3]);
    }
  }
  return frame;
}

std::pair<DatasetManifest, std::vector<Frame>> parse_y4m(std::istream& in,
                                                         const std::string& source) {
  Y4mReader reader(in);
  DatasetManifest manifest;
  manifest.source = source;
  manifest.fps_num = reader.fps_num();
  manifest.fps_den = reader.fps_den();
  manifest.width = reader.width();
  manifest.height = reader.height();

  std::vector<Frame> frames;
  while (auto frame = reader.next()) {
    manifest.entries.push_back(
        {frame->index, clean_frame_name(frame->index), Role::clean, std::nullopt});
    frames.push_back(std::move(*frame));
  }
  return {std::move(manifest), std::move(frames)};
}

std::pair<DatasetManifest, std::vector<Frame>> parse_y4m(std::span<const unsigned char> bytes,
                                                         const std::string& source) {
  std::istringstream in(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  return parse_y4m(in, source);
}

// --- PPM ----------------------------------------------------------------------

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string ppm_token(std::span<const unsigned char> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    unsigned char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(c)) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
    token.push_back(static_cast<char>(bytes[pos++]));
  }
  if (token.empty()) throw MalformedHeader("unexpected end of PPM header");
  return token;
}

int ppm_int(std::span<const unsigned char> bytes, std::size_t& pos, const char* what) {
  std::string token = ppm_token(bytes, pos);
  for (char c : token) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw MalformedHeader(std::string("bad ") + what + ": " + token);
    }
  }
  long v = std::atol(token.c_str());
  if (v <= 0 || v > 1 << 20) throw MalformedHeader(std::string("bad ") + what + ": " + token);
  return static_cast<int>(v);
}

}  // namespace

Frame read_ppm(std::span<const unsigned char> bytes) {
  std::size_t pos = 0;
  std::string magic = ppm_token(bytes, pos);
  if (magic != "P6") throw MalformedHeader("not a P6 PPM (magic " + magic + ")");
  int width = ppm_int(bytes, pos, "width");
  int height = ppm_int(bytes, pos, "height");
  std::string maxval = ppm_token(bytes, pos);
  if (maxval != "255") throw BadMaxval("maxval " + maxval + " (only 255 supported)");
  // Exactly one whitespace byte separates the header from the pixel data.
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw MalformedHeader("missing whitespace after maxval");
  }
  ++pos;

  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - pos < need) {
    throw TruncatedPixelData("expected " + std::to_string(need) + " pixel bytes, have " +
                             std::to_string(bytes.size() - pos));
  }
  Frame frame;
  frame.width = width;
  frame.height = height;
  frame.pixels.resize(need);
  for (std::size_t i = 0; i < need; ++i) {
    frame.pixels[i] = bytes[pos + i] / 255.0;
  }
  return frame;
}

std::vector<unsigned char> write_ppm(const Frame& frame) {
  frame.validate();
  char header[64];
  int n = std::snprintf(header, sizeof header, "P6\n%d %d\n255\n", frame.width, frame.height);
  std::vector<unsigned char> out(header, header + n);
  out.reserve(out.size() + frame.pixels.size());
  for (double v : frame.pixels) {
    out.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  return out;
}

Frame read_ppm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};
  Frame frame = read_ppm(bytes);
  return frame;
}

void write_ppm_file(const Frame& frame, const std::filesystem::path& path) {
  auto bytes = write_ppm(frame);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

// --- Manifest -------------------------------------------------------------------

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        ok = true;
        break;
      }
    }
    if (!ok) throw SchemaViolation(where + "." + it.key() + ": unknown key");
  }
}

template <class T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw SchemaViolation(where + "." + key + ": missing");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaViolation(where + "." + key + ": wrong type");
  }
}

}  // namespace

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  validate_manifest(manifest);
  json doc;
  doc["source"] = manifest.source;
  doc["fps_num"] = manifest.fps_num;
  doc["fps_den"] = manifest.fps_den;
  doc["width"] = manifest.width;
  doc["height"] = manifest.height;
  doc["frames"] = json::array();
  for (const auto& e : manifest.entries) {
    json entry;
    entry["index"] = e.index;
    entry["path"] = e.path;
    entry["role"] = to_string(e.role);
    if (e.epsilon) entry["epsilon"] = *e.epsilon;
    doc["frames"].push_back(std::move(entry));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaViolation(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaViolation("manifest root must be an object");
  reject_unknown_keys(doc, {"source", "fps_num", "fps_den", "width", "height", "frames"},
                      "manifest");

  DatasetManifest m;
  m.source = require<std::string>(doc, "source", "manifest");
  m.fps_num = require<int>(doc, "fps_num", "manifest");
  m.fps_den = require<int>(doc, "fps_den", "manifest");
  m.width = require<int>(doc, "width", "manifest");
  m.height = require<int>(doc, "height", "manifest");
  if (!doc.contains("frames") || !doc.at("frames").is_array()) {
    throw SchemaViolation("manifest.frames: missing or not an array");
  }
  std::size_t i = 0;
  for (const auto& entry : doc.at("frames")) {
    std::string where = "manifest.frames[" + std::to_string(i) + "]";
    if (!entry.is_object()) throw SchemaViolation(where + ": not an object");
    reject_unknown_keys(entry, {"index", "path", "role", "epsilon"}, where);
    ManifestEntry e;
    e.index = require<std::size_t>(entry, "index", where);
    e.path = require<std::string>(entry, "path", where);
    e.role = role_from_string(require<std::string>(entry, "role", where));
    if (entry.contains("epsilon")) {
      e.epsilon = require<double>(entry, "epsilon", where);
    }
    m.entries.push_back(std::move(e));
    ++i;
  }
  validate_manifest(m);
  return m;
}

std::string epsilon_tag(double epsilon) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", epsilon);
  std::string tag(buf);
  std::replace(tag.begin(), tag.end(), '.', 'p');
  return tag;
}

std::string clean_frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.ppm", index);
  return buf;
}

std::string adversarial_frame_name(std::size_t index, double epsilon) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frame_%06zu_eps%s.ppm", index, epsilon_tag(epsilon).c_str());
  return buf;
}

}  // namespace advfilter
