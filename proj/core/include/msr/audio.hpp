#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace msr {

/// Planar PCM audio. Each channel holds samples nominally in [-1, 1].
class AudioClip {
 public:
  AudioClip() = default;

  /// Throws InvalidInputError when channel lengths differ, when the channel
  /// count is not 1 or 2, or when `sample_rate_hz` is not positive.
  AudioClip(std::vector<std::vector<float>> channels, int sample_rate_hz);

  static AudioClip mono(std::vector<float> samples, int sample_rate_hz);

  int sample_rate_hz() const noexcept { return sample_rate_hz_; }
  std::size_t channel_count() const noexcept { return channels_.size(); }
  std::size_t frame_count() const noexcept {
    return channels_.empty() ? 0 : channels_.front().size();
  }
  bool empty() const noexcept { return frame_count() == 0; }
  double duration_seconds() const noexcept {
    return sample_rate_hz_ > 0 ? static_cast<double>(frame_count()) / sample_rate_hz_ : 0.0;
  }

  std::span<const float> channel(std::size_t index) const { return channels_.at(index); }
  std::span<float> channel(std::size_t index) { return channels_.at(index); }
  const std::vector<std::vector<float>>& channels() const noexcept { return channels_; }

  /// Per-frame average over channels.
  std::vector<float> mixdown() const;

  friend bool operator==(const AudioClip&, const AudioClip&) = default;

 private:
  std::vector<std::vector<float>> channels_;
  int sample_rate_hz_ = 0;
};

}  // namespace msr
