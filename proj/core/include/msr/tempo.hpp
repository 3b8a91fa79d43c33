#pragma once

#include "msr/audio.hpp"

namespace msr {

struct TempoEstimate {
  double bpm = 0.0;         // in (0, 200] after octave folding
  double confidence = 0.0;  // peak autocorrelation over lag-zero energy, in [0, 1]
};

/// Tempo estimates are folded by halving until they are at most this value.
inline constexpr double kMaxFoldedBpm = 200.0;
inline constexpr double kMinTempoClipSeconds = 5.0;

/// Global tempo of a clip from the autocorrelation of its spectral-flux onset
/// envelope (about 100 envelope frames per second, lags spanning 40-400 BPM).
///
/// Throws InvalidInputError for clips shorter than 5 s or without any onsets.
TempoEstimate estimate_tempo(const AudioClip& clip);

/// Halves `bpm` until it is at most 200. Throws DomainError for non-positive input.
double fold_tempo(double bpm);

}  // namespace msr
