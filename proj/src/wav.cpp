#include "empathy/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "empathy/types.hpp"

namespace empathy {
namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put16(std::ostream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

struct Header {
  WavInfo info;
  std::streamoff data_offset = 0;
};

Header parse_header(std::ifstream& in, const std::filesystem::path& path) {
  auto fail = [&](const std::string& why) {
    return ValidationError("wav " + path.string() + ": " + why);
  };
  unsigned char riff[12];
  if (!in.read(reinterpret_cast<char*>(riff), 12)) throw fail("truncated header");
  if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  Header h;
  bool have_fmt = false;
  while (true) {
    unsigned char chunk[8];
    if (!in.read(reinterpret_cast<char*>(chunk), 8)) throw fail("missing data chunk");
    const std::uint32_t size = le32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw fail("short fmt chunk");
      std::vector<unsigned char> fmt(size);
      if (!in.read(reinterpret_cast<char*>(fmt.data()), size)) throw fail("truncated fmt chunk");
      const std::uint16_t format = le16(fmt.data());
      if (format != 1) throw fail("only PCM is supported");
      h.info.channels = le16(fmt.data() + 2);
      h.info.sample_rate = static_cast<int>(le32(fmt.data() + 4));
      h.info.bits_per_sample = le16(fmt.data() + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      const int bytes = h.info.bits_per_sample / 8 * h.info.channels;
      if (bytes <= 0) throw fail("invalid sample layout");
      h.info.frames = size / static_cast<std::uint32_t>(bytes);
      h.data_offset = in.tellg();
      return h;
    } else {
      in.seekg(size + (size & 1u), std::ios::cur);
    }
    if (size & 1u && std::memcmp(chunk, "fmt ", 4) == 0) in.seekg(1, std::ios::cur);
  }
}

}  // namespace

WavInfo read_wav_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open audio file " + path.string());
  return parse_header(in, path).info;
}

Audio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open audio file " + path.string());
  const Header h = parse_header(in, path);
  if (h.info.channels != 1 || h.info.bits_per_sample != 16)
    throw ValidationError("wav " + path.string() + ": expected 16-bit mono PCM");

  std::vector<std::int16_t> raw(h.info.frames);
  in.seekg(h.data_offset);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(std::int16_t)));
  raw.resize(static_cast<std::size_t>(in.gcount()) / sizeof(std::int16_t));

  Audio audio;
  audio.sample_rate = h.info.sample_rate;
  audio.samples.resize(raw.size());
  // samples are stored little-endian
  static_assert(std::endian::native == std::endian::little);
  std::transform(raw.begin(), raw.end(), audio.samples.begin(),
                 [](std::int16_t s) { return static_cast<float>(s) / 32768.0f; });
  return audio;
}

void write_wav(const std::filesystem::path& path, std::span<const float> samples,
               int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write audio file " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate * 2));
  put16(out, 2);
  put16(out, 16);
  out.write("data", 4);
  put32(out, data_bytes);

  std::vector<std::int16_t> raw(samples.size());
  std::transform(samples.begin(), samples.end(), raw.begin(), [](float s) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    return static_cast<std::int16_t>(std::lrint(std::min(c * 32768.0f, 32767.0f)));
  });
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::int16_t)));
  if (!out) throw ValidationError("failed writing audio file " + path.string());
}

}  // namespace empathy
