#include "dvqe/signal/wav_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "dvqe/common/error.h"
#include "dvqe/signal/resample.h"

namespace dvqe {
namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

template <typename T>
T read_le(const std::vector<char>& buf, std::size_t off) {
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

template <typename T>
void put_le(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path, int target_rate_hz) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open WAV file " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw DataError(name + ": not a RIFF/WAVE file");
  }
  std::uint16_t fmt_tag = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;
  std::size_t off = 12;
  while (off + 8 <= buf.size()) {
    const std::string id(buf.data() + off, 4);
    const auto len = read_le<std::uint32_t>(buf, off + 4);
    const std::size_t body = off + 8;
    if (body + len > buf.size() && id != "data") {
      throw DataError(name + ": truncated chunk '" + id + "'");
    }
    if (id == "fmt ") {
      if (len < 16) throw DataError(name + ": short fmt chunk");
      fmt_tag = read_le<std::uint16_t>(buf, body);
      channels = read_le<std::uint16_t>(buf, body + 2);
      rate = read_le<std::uint32_t>(buf, body + 4);
      bits = read_le<std::uint16_t>(buf, body + 14);
      if (fmt_tag == 0xFFFE && len >= 26) {
        fmt_tag = read_le<std::uint16_t>(buf, body + 24);  // extensible subformat
      }
      have_fmt = true;
    } else if (id == "data") {
      data_off = body;
      data_len = std::min<std::size_t>(len, buf.size() - body);
      break;
    }
    off = body + len + (len & 1u);
  }
  if (!have_fmt || data_off == 0) throw DataError(name + ": missing fmt or data chunk");
  if (channels != 1) {
    throw DataError(name + ": expected mono, got " + std::to_string(channels) + " channels");
  }
  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  if (fmt_tag == 1 && bits == 16) {
    const std::size_t n = data_len / 2;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      w.samples[i] = read_le<std::int16_t>(buf, data_off + 2 * i) / 32768.0;
    }
  } else if (fmt_tag == 3 && bits == 32) {
    const std::size_t n = data_len / 4;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      w.samples[i] = read_le<float>(buf, data_off + 4 * i);
    }
  } else {
    throw DataError(name + ": unsupported sample format (tag " +
                    std::to_string(fmt_tag) + ", " + std::to_string(bits) + " bits)");
  }
  validate(w, name);
  if (target_rate_hz > 0 && w.sample_rate_hz != target_rate_hz) {
    w = resample(w, target_rate_hz);
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& wave,
               WavFormat format) {
  validate(wave, "write_wav " + path.string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write WAV file " + path.string());
  const bool pcm = format == WavFormat::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint16_t block = bits / 8;
  const auto data_len = static_cast<std::uint32_t>(wave.size() * block);
  out.write("RIFF", 4);
  put_le<std::uint32_t>(out, 36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, pcm ? 1 : 3);
  put_le<std::uint16_t>(out, 1);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate_hz));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate_hz) * block);
  put_le<std::uint16_t>(out, block);
  put_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  put_le<std::uint32_t>(out, data_len);
  for (double v : wave.samples) {
    if (pcm) {
      const double c = std::clamp(v, -1.0, 1.0);
      put_le<std::int16_t>(out, static_cast<std::int16_t>(
                                    std::lround(std::min(c * 32768.0, 32767.0))));
    } else {
      put_le<float>(out, static_cast<float>(v));
    }
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace dvqe
