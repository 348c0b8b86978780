#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "ttsprep/errors.hpp"
#include "ttsprep/mel.hpp"

namespace ttsprep {

struct MalformedMelFile : Error {
  using Error::Error;
};

// MEL1 container: "MEL1", u32le n_mels, u32le n_frames, then
// n_mels * n_frames float32le values in row-major order (mel channel = row).
inline void write_mel1(const MelSpectrogram& mel, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoFailure("cannot open " + path.string() + " for writing");
  os.write("MEL1", 4);
  const uint32_t dims[2] = {static_cast<uint32_t>(mel.n_mels), static_cast<uint32_t>(mel.n_frames)};
  static_assert(sizeof(float) == 4);
  os.write(reinterpret_cast<const char*>(dims), 8);
  os.write(reinterpret_cast<const char*>(mel.values.data()),
           static_cast<std::streamsize>(mel.values.size() * 4));
  if (!os) throw IoFailure("write error on " + path.string());
}

inline MelSpectrogram read_mel1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path.string());
  char magic[4];
  uint32_t dims[2];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(dims), 8);
  if (!in || std::memcmp(magic, "MEL1", 4) != 0)
    throw MalformedMelFile(path.string() + ": bad MEL1 header");
  MelSpectrogram mel;
  mel.n_mels = static_cast<int>(dims[0]);
  mel.n_frames = static_cast<int>(dims[1]);
  mel.values.resize(static_cast<std::size_t>(dims[0]) * dims[1]);
  in.read(reinterpret_cast<char*>(mel.values.data()),
          static_cast<std::streamsize>(mel.values.size() * 4));
  if (!in) throw MalformedMelFile(path.string() + ": truncated MEL1 payload");
  return mel;
}

}  // namespace ttsprep
