#pragma once

#include <string>

#include "dstft/transform.hpp"

namespace dstft {

enum class FileFormat { WavPcm16, WavFloat32, Csv, RawF64WithSidecar };

// Load a signal from disk. WAV readers require mono and the matching sample
// encoding; Csv yields sample_rate 1.0; RawF64WithSidecar reads little-endian
// doubles described by a <path>.json sidecar. Malformed files raise IoError
// with a byte offset.
Signal load_signal(const std::string& path, FileFormat format);

// Counterpart writer. Csv stores 17 significant digits and RawF64 stores raw
// bytes, so both round-trip exactly; WavPcm16 quantizes to 16 bits.
void save_signal(const Signal& signal, const std::string& path, FileFormat format);

// WAV sniffs the fmt chunk to pick PCM16 vs float32; .csv and .raw/.f64 map
// to their formats; anything else raises IoError.
Signal load_signal_auto(const std::string& path);

}  // namespace dstft
