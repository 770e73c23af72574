// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>

#include "echo/dsp.hpp"

namespace echo {

// RIFF/WAVE reader for PCM 16-bit and IEEE float 32-bit. Multi-channel files
// yield the first channel. The native sampling rate is preserved; there is no
// resampling.
Waveform read_wav(const std::string& path);

// Mono PCM 16-bit writer. Samples are clamped to [-1, 1] before quantization.
void write_wav_pcm16(const std::string& path, const Waveform& w);

// Mono IEEE float 32-bit writer; no clamping, so synthetic signals with
// transient peaks above 1 survive a round trip.
void write_wav_f32(const std::string& path, const Waveform& w);

// CSV vibration reader: one column per channel, decimal reals. If the first
// line is `sample_rate_hz=<int>` it supplies the rate; otherwise
// fallback_rate_hz must be positive. channel selects the column.
Waveform read_csv(const std::string& path, int fallback_rate_hz = 0, int channel = 0);

}  // namespace echo
