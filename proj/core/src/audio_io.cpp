// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "echo/audio_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "echo/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "wav io assumes a little-endian host");

namespace echo {

namespace {

uint32_t read_u32(const unsigned char* p) {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

uint16_t read_u16(const unsigned char* p) {
  uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  in.seekg(0, std::ios::end);
  std::streamoff len = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<unsigned char> buf(static_cast<size_t>(len));
  if (len > 0) in.read(reinterpret_cast<char*>(buf.data()), len);
  if (!in) throw IoError("failed reading file: " + path);
  return buf;
}

}  // namespace

Waveform read_wav(const std::string& path) {
  const auto buf = read_file(path);
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw IoError("not a RIFF/WAVE file: " + path);
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* data = nullptr;
  size_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const char* id = reinterpret_cast<const char*>(buf.data() + pos);
    uint32_t chunk_len = read_u32(buf.data() + pos + 4);
    size_t body = pos + 8;
    if (body + chunk_len > buf.size()) throw IoError("truncated WAV chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw IoError("malformed fmt chunk in " + path);
      format = read_u16(buf.data() + body);
      channels = read_u16(buf.data() + body + 2);
      rate = read_u32(buf.data() + body + 4);
      bits = read_u16(buf.data() + body + 14);
      if (format == 0xFFFE && chunk_len >= 40) {
        // WAVE_FORMAT_EXTENSIBLE: sub-format GUID starts with the format tag
        format = read_u16(buf.data() + body + 24);
      }
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = buf.data() + body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (data == nullptr) throw IoError("WAV file has no data chunk: " + path);
  if (channels < 1) throw IoError("WAV file has no channels: " + path);
  if (rate == 0) throw IoError("WAV file has zero sample rate: " + path);

  Waveform w;
  w.sample_rate_hz = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    size_t frame_bytes = 2ull * channels;
    size_t frames = data_len / frame_bytes;
    w.samples.resize(frames);
    for (size_t i = 0; i < frames; ++i) {
      int16_t s;
      std::memcpy(&s, data + i * frame_bytes, 2);
      w.samples[i] = static_cast<double>(s) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    size_t frame_bytes = 4ull * channels;
    size_t frames = data_len / frame_bytes;
    w.samples.resize(frames);
    for (size_t i = 0; i < frames; ++i) {
      float s;
      std::memcpy(&s, data + i * frame_bytes, 4);
      w.samples[i] = static_cast<double>(s);
    }
  } else {
    std::ostringstream os;
    os << "unsupported WAV encoding (format=" << format << ", bits=" << bits
       << ") in " << path;
    throw IoError(os.str());
  }
  if (w.samples.empty()) throw IoError("WAV file has no samples: " + path);
  return w;
}

void write_wav_pcm16(const std::string& path, const Waveform& w) {
  validate(w);
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint32_t data_len = n * 2;
  const uint32_t rate = static_cast<uint32_t>(w.sample_rate_hz);
  const uint32_t byte_rate = rate * 2;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create file: " + path);

  auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };

  out.write("RIFF", 4);
  put_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(rate);
  put_u32(byte_rate);
  put_u16(2);   // block align
  put_u16(16);  // bits per sample
  out.write("data", 4);
  put_u32(data_len);
  for (double s : w.samples) {
    double clamped = std::clamp(s, -1.0, 1.0);
    auto q = static_cast<int16_t>(std::lround(clamped * 32767.0));
    out.write(reinterpret_cast<const char*>(&q), 2);
  }
  if (!out) throw IoError("failed writing file: " + path);
}

void write_wav_f32(const std::string& path, const Waveform& w) {
  validate(w);
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint32_t data_len = n * 4;
  const uint32_t rate = static_cast<uint32_t>(w.sample_rate_hz);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create file: " + path);

  auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };

  out.write("RIFF", 4);
  put_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(3);  // IEEE float
  put_u16(1);  // mono
  put_u32(rate);
  put_u32(rate * 4);
  put_u16(4);   // block align
  put_u16(32);  // bits per sample
  out.write("data", 4);
  put_u32(data_len);
  for (double s : w.samples) {
    auto f = static_cast<float>(s);
    out.write(reinterpret_cast<const char*>(&f), 4);
  }
  if (!out) throw IoError("failed writing file: " + path);
}

Waveform read_csv(const std::string& path, int fallback_rate_hz, int channel) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  if (channel < 0) throw ConfigError("csv channel index must be >= 0");

  Waveform w;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("sample_rate_hz=", 0) == 0) {
        try {
          w.sample_rate_hz = std::stoi(line.substr(15));
        } catch (const std::exception&) {
          throw IoError("malformed sample_rate_hz header in " + path);
        }
        continue;
      }
    }
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    bool found = false;
    while (std::getline(ss, cell, ',')) {
      if (col == channel) {
        try {
          w.samples.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw IoError("non-numeric CSV value '" + cell + "' in " + path);
        }
        found = true;
        break;
      }
      ++col;
    }
    if (!found) throw IoError("CSV row with too few columns in " + path);
  }
  if (w.sample_rate_hz == 0) {
    if (fallback_rate_hz <= 0) {
      throw ConfigError("CSV file carries no sample_rate_hz header and no rate was supplied: " +
                        path);
    }
    w.sample_rate_hz = fallback_rate_hz;
  }
  if (w.samples.empty()) throw IoError("CSV file has no samples: " + path);
  return w;
}

}  // namespace echo
