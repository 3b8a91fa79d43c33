#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "msr/audio.hpp"

namespace msr {

enum class SampleFormat { Pcm16, Float32 };

struct DecodedWav {
  AudioClip clip;
  SampleFormat format = SampleFormat::Pcm16;
};

/// Decodes a RIFF/WAVE image. Accepts PCM 16/24/32-bit integer and 32-bit
/// float, plain or WAVE_FORMAT_EXTENSIBLE, mono or stereo. Other layouts
/// raise InvalidInputError.
DecodedWav decode_wav(std::span<const std::uint8_t> bytes);

/// Location and framing of the sample data inside a WAV image.
struct WavLayout {
  std::size_t data_offset = 0;
  std::size_t data_size = 0;
  std::size_t block_align = 0;
  std::size_t channels = 0;
  int sample_rate_hz = 0;

  std::size_t frame_count() const noexcept { return block_align ? data_size / block_align : 0; }
};

/// Validates the header like decode_wav without converting samples.
WavLayout inspect_wav(std::span<const std::uint8_t> bytes);
DecodedWav read_wav(const std::filesystem::path& path);

/// Encodes a canonical 44-byte-header WAV. Integer output is rounded and
/// saturated; float output is written unclamped.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip, SampleFormat format);
void write_wav(const std::filesystem::path& path, const AudioClip& clip, SampleFormat format);

}  // namespace msr
