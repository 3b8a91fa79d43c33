#include "msr/audio.hpp"

#include <string>

#include "msr/errors.hpp"

namespace msr {

AudioClip::AudioClip(std::vector<std::vector<float>> channels, int sample_rate_hz)
    : channels_(std::move(channels)), sample_rate_hz_(sample_rate_hz) {
  if (sample_rate_hz_ <= 0) {
    throw InvalidInputError("sample rate must be positive, got " + std::to_string(sample_rate_hz_));
  }
  if (channels_.empty() || channels_.size() > 2) {
    throw InvalidInputError("audio must have 1 or 2 channels, got " +
                            std::to_string(channels_.size()));
  }
  for (const auto& ch : channels_) {
    if (ch.size() != channels_.front().size()) {
      throw InvalidInputError("all channels must have equal length");
    }
  }
}

AudioClip AudioClip::mono(std::vector<float> samples, int sample_rate_hz) {
  std::vector<std::vector<float>> channels;
  channels.push_back(std::move(samples));
  return AudioClip(std::move(channels), sample_rate_hz);
}

std::vector<float> AudioClip::mixdown() const {
  std::vector<float> out(frame_count(), 0.0f);
  if (channels_.empty()) return out;
  const float scale = 1.0f / static_cast<float>(channels_.size());
  for (const auto& ch : channels_) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += ch[i] * scale;
  }
  return out;
}

}  // namespace msr
