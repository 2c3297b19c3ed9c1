#include "advfilter/attack.hpp"

#include <algorithm>
#include <cmath>

#include "advfilter/errors.hpp"
#include "advfilter/frame_io.hpp"
#include "advfilter/parallel.hpp"

namespace advfilter {

void AttackConfig::validate() const {
  double prev = 0.0;
  for (double e : epsilons) {
    if (!(e > prev)) {
      throw SchemaViolation("epsilons must be strictly positive and strictly increasing");
    }
    if (e > 1.0) throw SchemaViolation("epsilon > 1 exceeds the intensity range");
    prev = e;
  }
  if (!(clip_min < clip_max)) throw SchemaViolation("clip_min must be below clip_max");
}

std::vector<double> fgsm_sign_map(const TinyNet& net, const Frame& frame) {
  auto input = TinyNet::resample_input(frame);
  int label = net.predict(input).label;  // self-labeling: attack the model's own call
  auto grad = net.input_gradient(input, label);

  const int n = TinyNet::kInput;
  std::vector<double> sign(frame.pixels.size());
  for (int y = 0; y < frame.height; ++y) {
    int sy = y * n / frame.height;
    for (int x = 0; x < frame.width; ++x) {
      int sx = x * n / frame.width;
      for (int c = 0; c < 3; ++c) {
        double g = grad[(static_cast<std::size_t>(c) * n + sy) * n + sx];
        sign[(static_cast<std::size_t>(y) * frame.width + x) * 3 + c] =
            g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
      }
    }
  }
  return sign;
}

Frame apply_sign_map(const Frame& frame, const std::vector<double>& sign_map, double epsilon,
                     double clip_min, double clip_max) {
  if (sign_map.size() != frame.pixels.size()) {
    throw ShapeMismatch("sign map size does not match frame");
  }
  Frame out = frame;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = std::clamp(frame.pixels[i] + epsilon * sign_map[i], clip_min, clip_max);
  }
  return out;
}

Frame fgsm(const TinyNet& net, const Frame& frame, double epsilon) {
  return apply_sign_map(frame, fgsm_sign_map(net, frame), epsilon);
}

DatasetManifest attack_dataset(const DatasetManifest& manifest,
                               const std::filesystem::path& in_dir,
                               const std::filesystem::path& out_dir, const AttackConfig& config,
                               int workers) {
  config.validate();
  for (const auto& e : manifest.entries) {
    if (e.role != Role::clean) {
      throw SchemaViolation("attack input manifest must contain only clean frames");
    }
  }
  std::filesystem::create_directories(out_dir);

  TinyNet net(config.seed);
  const std::size_t n = manifest.entries.size();

  // Each frame's outputs are produced independently, then written serially in
  // index order so directory contents never depend on scheduling.
  struct PerFrame {
    Frame clean;
    std::vector<Frame> perturbed;
  };
  std::vector<PerFrame> results(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    Frame clean = read_ppm_file(in_dir / entry.path);
    clean.index = entry.index;
    auto sign = fgsm_sign_map(net, clean);
    results[i].perturbed.reserve(config.epsilons.size());
    for (double eps : config.epsilons) {
      results[i].perturbed.push_back(
          apply_sign_map(clean, sign, eps, config.clip_min, config.clip_max));
    }
    results[i].clean = std::move(clean);
  });

  DatasetManifest out;
  out.source = manifest.source;
  out.fps_num = manifest.fps_num;
  out.fps_den = manifest.fps_den;
  out.width = manifest.width;
  out.height = manifest.height;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& entry = manifest.entries[i];
    std::string clean_name = clean_frame_name(entry.index);
    write_ppm_file(results[i].clean, out_dir / clean_name);
    out.entries.push_back({entry.index, clean_name, Role::clean, std::nullopt});
    for (std::size_t k = 0; k < config.epsilons.size(); ++k) {
      double eps = config.epsilons[k];
      std::string name = adversarial_frame_name(entry.index, eps);
      write_ppm_file(results[i].perturbed[k], out_dir / name);
      out.entries.push_back({entry.index, name, Role::adversarial, eps});
    }
  }
  write_manifest(out, out_dir / "manifest.json");
  return out;
}

}  // namespace advfilter
