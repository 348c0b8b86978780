#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ttsprep/audio_buffer.hpp"
#include "ttsprep/errors.hpp"

namespace ttsprep {

struct MalformedWav : Error {
  using Error::Error;
};

struct UnsupportedEncoding : Error {
  using Error::Error;
};

// Facts about the source file that the decoded buffer no longer shows.
struct WavReadInfo {
  int source_channels = 1;
  int bits_per_sample = 0;
  bool downmixed = false;
};

namespace detail {

inline uint16_t read_u16le(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

inline uint32_t read_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline void put_u16le(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32le(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

}  // namespace detail

// Reads a RIFF/WAVE file holding PCM 16-bit or IEEE-float 32-bit samples.
// 16-bit samples are normalized by 1/32768; multi-channel audio is downmixed
// by averaging the channels of each frame.
inline AudioBuffer read_wav(const std::filesystem::path& path, WavReadInfo* info = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoFailure("read error on " + path.string());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw MalformedWav(path.string() + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* cid = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t csize = detail::read_u32le(bytes.data() + pos + 4);
    pos += 8;
    if (csize > bytes.size() - pos) throw MalformedWav(path.string() + ": truncated chunk");
    if (std::memcmp(cid, "fmt ", 4) == 0) {
      if (csize < 16) throw MalformedWav(path.string() + ": fmt chunk too small");
      const unsigned char* f = bytes.data() + pos;
      format = detail::read_u16le(f);
      channels = detail::read_u16le(f + 2);
      rate = detail::read_u32le(f + 4);
      bits = detail::read_u16le(f + 14);
      have_fmt = true;
    } else if (std::memcmp(cid, "data", 4) == 0 && data == nullptr) {
      data = bytes.data() + pos;
      data_size = csize;
    }
    pos += csize + (csize & 1);  // chunks are word aligned
  }

  if (!have_fmt) throw MalformedWav(path.string() + ": missing fmt chunk");
  if (data == nullptr) throw MalformedWav(path.string() + ": missing data chunk");
  if (channels == 0 || rate == 0) throw MalformedWav(path.string() + ": bad fmt fields");

  const bool pcm16 = (format == 1 && bits == 16);
  const bool float32 = (format == 3 && bits == 32);
  if (!pcm16 && !float32) {
    throw UnsupportedEncoding(path.string() + ": format tag " + std::to_string(format) + " at " +
                              std::to_string(bits) + " bits (want PCM16 or float32)");
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  if (data_size % frame_bytes != 0) throw MalformedWav(path.string() + ": partial sample frame");
  const std::size_t n_frames = data_size / frame_bytes;
  if (n_frames == 0) throw EmptyAudio(path.string() + ": zero samples");

  AudioBuffer buf;
  buf.sample_rate = static_cast<int>(rate);
  buf.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        const auto raw = static_cast<int16_t>(detail::read_u16le(p));
        acc += static_cast<double>(raw) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        acc += std::clamp(static_cast<double>(v), -1.0, 1.0);
      }
    }
    buf.samples[i] = static_cast<float>(acc / channels);
  }

  if (info) {
    info->source_channels = channels;
    info->bits_per_sample = bits;
    info->downmixed = channels > 1;
  }
  return buf;
}

// Writes mono 16-bit PCM, little endian. Quantization is round(x * 32768)
// clamped to the int16 range, so a read-back differs by at most one step.
inline void write_wav(const AudioBuffer& buf, const std::filesystem::path& path) {
  if (buf.empty()) throw EmptyAudio("refusing to write empty buffer to " + path.string());

  std::string out;
  out.reserve(44 + buf.size() * 2);
  const uint32_t data_size = static_cast<uint32_t>(buf.size() * 2);
  out.append("RIFF");
  detail::put_u32le(out, 36 + data_size);
  out.append("WAVE");
  out.append("fmt ");
  detail::put_u32le(out, 16);
  detail::put_u16le(out, 1);  // PCM
  detail::put_u16le(out, 1);  // mono
  detail::put_u32le(out, static_cast<uint32_t>(buf.sample_rate));
  detail::put_u32le(out, static_cast<uint32_t>(buf.sample_rate) * 2);
  detail::put_u16le(out, 2);
  detail::put_u16le(out, 16);
  out.append("data");
  detail::put_u32le(out, data_size);
  for (float s : buf.samples) {
    const long q = std::lround(static_cast<double>(s) * 32768.0);
    const auto v = static_cast<int16_t>(std::clamp(q, -32768L, 32767L));
    detail::put_u16le(out, static_cast<uint16_t>(v));
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoFailure("cannot open " + path.string() + " for writing");
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoFailure("write error on " + path.string());
}

}  // namespace ttsprep
