#include "dstft/signal_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "dstft/errors.hpp"
#include "dstft/file_util.hpp"
#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "raw double I/O assumes a little-endian host");

namespace dstft {

namespace {

std::uint32_t get_u32le(const std::string& b, size_t off, const std::string& path) {
  if (off + 4 > b.size()) throw IoError(path + ": truncated at byte " + std::to_string(off));
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[off])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 3])) << 24);
}

std::uint16_t get_u16le(const std::string& b, size_t off, const std::string& path) {
  if (off + 2 > b.size()) throw IoError(path + ": truncated at byte " + std::to_string(off));
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[off]) |
                                    (static_cast<unsigned char>(b[off + 1]) << 8));
}

void append_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void append_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

struct WavInfo {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  size_t data_off = 0;
  size_t data_size = 0;
};

WavInfo parse_wav(const std::string& b, const std::string& path) {
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0) {
    throw IoError(path + ": missing RIFF tag at byte 0");
  }
  if (b.compare(8, 4, "WAVE") != 0) throw IoError(path + ": missing WAVE tag at byte 8");
  WavInfo info;
  bool have_fmt = false;
  bool have_data = false;
  size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::uint32_t sz = get_u32le(b, pos + 4, path);
    const size_t body = pos + 8;
    if (body + sz > b.size()) {
      throw IoError(path + ": chunk overruns file at byte " + std::to_string(pos));
    }
    if (b.compare(pos, 4, "fmt ") == 0) {
      if (sz < 16) throw IoError(path + ": fmt chunk too short at byte " + std::to_string(pos));
      info.format = get_u16le(b, body, path);
      info.channels = get_u16le(b, body + 2, path);
      info.rate = get_u32le(b, body + 4, path);
      info.bits = get_u16le(b, body + 14, path);
      have_fmt = true;
    } else if (b.compare(pos, 4, "data") == 0) {
      info.data_off = body;
      info.data_size = sz;
      have_data = true;
    }
    pos = body + sz + (sz & 1);
  }
  if (!have_fmt) throw IoError(path + ": no fmt chunk found");
  if (!have_data) throw IoError(path + ": no data chunk found");
  if (info.channels != 1) throw IoError(path + ": only mono audio is supported");
  return info;
}

std::string render_wav(const Signal& signal, bool pcm16) {
  const std::uint32_t rate =
      static_cast<std::uint32_t>(std::max(1.0, std::round(signal.sample_rate)));
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(bits / 8);
  const std::uint32_t data_size = static_cast<std::uint32_t>(signal.samples.size() * block);
  std::string out;
  out.reserve(44 + data_size);
  out.append("RIFF");
  append_u32le(out, 36 + data_size);
  out.append("WAVE");
  out.append("fmt ");
  append_u32le(out, 16);
  append_u16le(out, pcm16 ? 1 : 3);
  append_u16le(out, 1);
  append_u32le(out, rate);
  append_u32le(out, rate * block);
  append_u16le(out, block);
  append_u16le(out, bits);
  out.append("data");
  append_u32le(out, data_size);
  for (double x : signal.samples) {
    if (pcm16) {
      long v = std::lround(x * 32768.0);
      v = std::clamp(v, -32768L, 32767L);
      append_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    } else {
      const float f = static_cast<float>(x);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      append_u32le(out, u);
    }
  }
  return out;
}

Signal load_wav(const std::string& path, bool pcm16) {
  const std::string b = read_file(path);
  const WavInfo info = parse_wav(b, path);
  const std::uint16_t want_format = pcm16 ? 1 : 3;
  const std::uint16_t want_bits = pcm16 ? 16 : 32;
  if (info.format != want_format || info.bits != want_bits) {
    throw IoError(path + ": sample encoding does not match the requested format");
  }
  Signal out;
  out.sample_rate = info.rate;
  const size_t stride = want_bits / 8;
  const size_t count = info.data_size / stride;
  out.samples.resize(count);
  for (size_t i = 0; i < count; ++i) {
    const size_t off = info.data_off + i * stride;
    if (pcm16) {
      const std::int16_t v = static_cast<std::int16_t>(get_u16le(b, off, path));
      out.samples[i] = v / 32768.0;
    } else {
      const std::uint32_t u = get_u32le(b, off, path);
      float f;
      std::memcpy(&f, &u, 4);
      out.samples[i] = f;
    }
  }
  return out;
}

std::string render_csv(const Signal& signal) {
  std::string out;
  char buf[40];
  for (size_t i = 0; i < signal.samples.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", signal.samples[i]);
    if (i) out.push_back(',');
    out.append(buf);
  }
  out.push_back('\n');
  return out;
}

Signal load_csv(const std::string& path) {
  const std::string b = read_file(path);
  Signal out;
  size_t pos = 0;
  while (pos < b.size()) {
    while (pos < b.size() && (b[pos] == ',' || b[pos] == ' ' || b[pos] == '\t' ||
                              b[pos] == '\r' || b[pos] == '\n')) {
      ++pos;
    }
    if (pos >= b.size()) break;
    const char* start = b.c_str() + pos;
    char* end = nullptr;
    const double v = std::strtod(start, &end);
    if (end == start) throw IoError(path + ": unparsable value at byte " + std::to_string(pos));
    pos += static_cast<size_t>(end - start);
    if (pos < b.size() && b[pos] != ',' && b[pos] != ' ' && b[pos] != '\t' && b[pos] != '\r' &&
        b[pos] != '\n') {
      throw IoError(path + ": unparsable value at byte " + std::to_string(pos));
    }
    out.samples.push_back(v);
  }
  if (out.samples.empty()) throw IoError(path + ": no samples found at byte 0");
  return out;
}

std::string sidecar_path(const std::string& path) { return path + ".json"; }

Signal load_raw(const std::string& path) {
  const std::string meta_path = sidecar_path(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(meta_path + ": " + e.what());
  }
  if (!meta.contains("length") || !meta.contains("sample_rate") ||
      !meta.contains("endianness")) {
    throw IoError(meta_path + ": missing length/sample_rate/endianness");
  }
  if (meta["endianness"] != "little") throw IoError(meta_path + ": endianness must be little");
  const size_t length = meta["length"].get<size_t>();
  const std::string b = read_file(path);
  if (b.size() != length * 8) {
    throw IoError(path + ": expected " + std::to_string(length * 8) + " bytes, found " +
                  std::to_string(b.size()));
  }
  Signal out;
  out.sample_rate = meta["sample_rate"].get<double>();
  out.samples.resize(length);
  if (length) std::memcpy(out.samples.data(), b.data(), b.size());
  return out;
}

void save_raw(const Signal& signal, const std::string& path) {
  std::string bytes(signal.samples.size() * 8, '\0');
  if (!signal.samples.empty()) {
    std::memcpy(bytes.data(), signal.samples.data(), bytes.size());
  }
  atomic_write(path, bytes);
  nlohmann::json meta = {{"length", signal.samples.size()},
                         {"sample_rate", signal.sample_rate},
                         {"endianness", "little"}};
  atomic_write(sidecar_path(path), meta.dump(2) + "\n");
}

}  // namespace

Signal load_signal(const std::string& path, FileFormat format) {
  switch (format) {
    case FileFormat::WavPcm16:
      return load_wav(path, true);
    case FileFormat::WavFloat32:
      return load_wav(path, false);
    case FileFormat::Csv:
      return load_csv(path);
    case FileFormat::RawF64WithSidecar:
      return load_raw(path);
  }
  throw IoError(path + ": unknown format");
}

void save_signal(const Signal& signal, const std::string& path, FileFormat format) {
  switch (format) {
    case FileFormat::WavPcm16:
      atomic_write(path, render_wav(signal, true));
      return;
    case FileFormat::WavFloat32:
      atomic_write(path, render_wav(signal, false));
      return;
    case FileFormat::Csv:
      atomic_write(path, render_csv(signal));
      return;
    case FileFormat::RawF64WithSidecar:
      save_raw(signal, path);
      return;
  }
  throw IoError(path + ": unknown format");
}

Signal load_signal_auto(const std::string& path) {
  const size_t dot = path.find_last_of('.');
  std::string ext = (dot == std::string::npos) ? "" : path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == "wav") {
    const std::string b = read_file(path);
    const WavInfo info = parse_wav(b, path);
    if (info.format == 1 && info.bits == 16) return load_wav(path, true);
    if (info.format == 3 && info.bits == 32) return load_wav(path, false);
    throw IoError(path + ": unsupported WAV encoding");
  }
  if (ext == "csv") return load_csv(path);
  if (ext == "raw" || ext == "f64" || ext == "bin") return load_raw(path);
  throw IoError(path + ": unrecognized file extension");
}

}  // namespace dstft
