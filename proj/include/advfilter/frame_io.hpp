#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advfilter/frame.hpp"

namespace advfilter {

// --- YUV4MPEG2 ------------------------------------------------------------

enum class Y4mColorspace { c420, c420jpeg, c420mpeg2, c444 };

// Incremental Y4M decoder. The constructor parses the stream header; next()
// decodes one FRAME payload at a time (4:2:0 chroma replicated to full
// resolution, BT.601 full-range YCbCr -> RGB, clamped to [0,1]).
class Y4mReader {
 public:
  explicit Y4mReader(std::istream& in);

  int width() const { return width_; }
  int height() const { return height_; }
  int fps_num() const { return fps_num_; }
  int fps_den() const { return fps_den_; }
  Y4mColorspace colorspace() const { return colorspace_; }

  // Returns the next frame, or nullopt at end of stream.
  // Throws TruncatedFrame if a payload is shorter than the plane sizes,
  // MalformedHeader if a FRAME marker is garbled.
  std::optional<Frame> next();

 private:
  std::istream& in_;
  int width_ = 0;
  int height_ = 0;
  int fps_num_ = 0;
  int fps_den_ = 1;
  Y4mColorspace colorspace_ = Y4mColorspace::c420;
  std::size_t frames_read_ = 0;
};

// Decodes a whole stream. The returned manifest carries the header info
// (fps, dimensions, source label) and one clean entry per frame using the
// canonical file naming; no files are written.
std::pair<DatasetManifest, std::vector<Frame>> parse_y4m(std::istream& in,
                                                         const std::string& source = "");
std::pair<DatasetManifest, std::vector<Frame>> parse_y4m(std::span<const unsigned char> bytes,
                                                         const std::string& source = "");

// --- PPM (P6, maxval 255) ---------------------------------------------------

Frame read_ppm(std::span<const unsigned char> bytes);
std::vector<unsigned char> write_ppm(const Frame& frame);

Frame read_ppm_file(const std::filesystem::path& path);
void write_ppm_file(const Frame& frame, const std::filesystem::path& path);

// --- Manifest ----------------------------------------------------------------

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

// "0.05" -> "0p05"; used in adversarial frame file names.
std::string epsilon_tag(double epsilon);
std::string clean_frame_name(std::size_t index);              // frame_%06d.ppm
std::string adversarial_frame_name(std::size_t index, double epsilon);

}  // namespace advfilter
