#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "msr/audio.hpp"

namespace msr {

/// Output-to-input duration ratio, strictly inside (0, 2).
/// Values below 1 compress (faster tempo), values above 1 elongate.
class StretchRate {
 public:
  /// Throws DomainError outside (0, 2).
  explicit StretchRate(double value);

  /// Rate `steps * 0.02`, computed as `steps / 50.0` so grid keys compare exactly.
  static StretchRate from_grid_steps(int steps);

  double value() const noexcept { return value_; }

  /// True when the value is an integer multiple of 0.02 (within 1e-9).
  bool on_grid() const noexcept;
  int grid_steps() const noexcept;

  friend auto operator<=>(const StretchRate&, const StretchRate&) = default;

 private:
  double value_;
};

/// Step of the experiment's stimulus grid.
inline constexpr double kRateGridStep = 0.02;

/// True when `value` is an integer multiple of 0.02 within 1e-9.
bool is_on_rate_grid(double value) noexcept;

/// Parameters of the synchronized overlap-add stretcher, in milliseconds.
struct SolaConfig {
  double frame_ms = 40.0;
  double overlap_ms = 8.0;
  double seek_window_ms = 15.0;

  /// Throws DomainError unless 0 < overlap_ms < frame_ms and seek_window_ms >= 0.
  void validate() const;

  /// Stable textual key, used to address cached renders.
  std::string fingerprint() const;

  friend bool operator==(const SolaConfig&, const SolaConfig&) = default;
};

/// Sample-domain lengths derived from a SolaConfig at one sample rate.
struct SolaGeometry {
  std::size_t frame = 0;
  std::size_t overlap = 0;
  std::size_t seek = 0;
  std::size_t analysis_hop = 0;

  static SolaGeometry resolve(const SolaConfig& config, int sample_rate_hz);
};

/// Time-scales `clip` by `rate` without changing pitch.
///
/// Frames of `frame` samples are read every `analysis_hop` input samples and
/// written near `round(i * rate * analysis_hop)` in the output. Each nominal
/// position is shifted by the offset in [-seek, +seek] that maximizes the
/// normalized cross-correlation between the frame head and the output already
/// written there (ties go to the smallest |offset|), then merged with a linear
/// crossfade over `overlap` samples. Stereo offsets are searched on the channel
/// sum and applied to both channels. The result has exactly
/// `round(rate * frame_count)` frames.
///
/// Throws InvalidInputError if the clip is shorter than one frame.
AudioClip stretch(const AudioClip& clip, StretchRate rate, const SolaConfig& config = {});

/// The 98 stimulus rates: 0.02..0.98 and 1.02..1.98 in 0.02 steps.
std::vector<StretchRate> variant_grid_rates();

using VariantGrid = std::map<StretchRate, AudioClip>;

/// Renders every grid rate. Work is spread over `threads` workers
/// (0 = hardware concurrency); the result does not depend on scheduling.
VariantGrid generate_variant_grid(const AudioClip& clip, const SolaConfig& config = {},
                                  unsigned threads = 0);

/// Tempo after stretching: original_bpm / rate. Throws DomainError for
/// non-positive tempo.
double stretched_tempo(double original_bpm, StretchRate rate);

}  // namespace msr
