#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace empathy {

inline constexpr int kSampleRate = 8000;

/// Mono PCM audio with samples scaled to [-1, 1).
struct Audio {
  int sample_rate = kSampleRate;
  std::vector<float> samples;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  std::size_t frames = 0;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(frames) / sample_rate : 0.0;
  }
};

/// Reads only the header. Throws ValidationError on anything that is not a
/// RIFF/WAVE PCM file.
WavInfo read_wav_info(const std::filesystem::path& path);

/// Reads a 16-bit PCM mono file. Sample rate is taken from the header.
Audio read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono. Samples are clipped to [-1, 1] before quantization.
void write_wav(const std::filesystem::path& path, std::span<const float> samples,
               int sample_rate = kSampleRate);

}  // namespace empathy
