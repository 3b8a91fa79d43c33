#include "msr/tempo.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <vector>

#include "msr/errors.hpp"

namespace msr {
namespace {

constexpr double kEnvelopeRateHz = 100.0;
constexpr double kMinCandidateBpm = 40.0;
constexpr double kMaxCandidateBpm = 400.0;
constexpr double kLogCompression = 100.0;
// Gaussian sigma, in envelope frames. Spreading each onset over a few frames
// keeps autocorrelation peaks at non-integer periods from splitting in two.
constexpr double kSmoothingFrames = 2.0;

// The FFTW planner is not reentrant; execution of a finished plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  void magnitudes(std::vector<double>& mags) {
    fftw_execute(plan_);
    mags.resize(bins());
    for (std::size_t k = 0; k < bins(); ++k) mags[k] = std::hypot(out_[k][0], out_[k][1]);
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_ = nullptr;
};

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<double> onset_envelope(const std::vector<float>& mono, std::size_t hop, std::size_t window) {
  std::vector<double> hann(window);
  for (std::size_t i = 0; i < window; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(window));
  }
  RealFft fft(window);
  const std::size_t frames = mono.size() / hop;
  std::vector<double> envelope(frames, 0.0);
  std::vector<double> mags, previous;
  for (std::size_t f = 0; f < frames; ++f) {
    // Frames are centered on f * hop.
    const auto start = static_cast<std::ptrdiff_t>(f * hop) - static_cast<std::ptrdiff_t>(window / 2);
    double* in = fft.input();
    for (std::size_t i = 0; i < window; ++i) {
      const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
      const double s = idx >= 0 && idx < static_cast<std::ptrdiff_t>(mono.size())
                           ? static_cast<double>(mono[static_cast<std::size_t>(idx)])
                           : 0.0;
      in[i] = s * hann[i];
    }
    fft.magnitudes(mags);
    for (auto& m : mags) m = std::log1p(kLogCompression * m);
    if (!previous.empty()) {
      double flux = 0.0;
      for (std::size_t k = 0; k < mags.size(); ++k) flux += std::max(0.0, mags[k] - previous[k]);
      envelope[f] = flux;
    }
    previous.swap(mags);
  }
  return envelope;
}

std::vector<double> smooth(const std::vector<double>& x, double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
  }
  const double norm = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> out(x.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
      if (i + k >= 0 && i + k < n) acc += kernel[static_cast<std::size_t>(k + radius)] * x[static_cast<std::size_t>(i + k)];
    }
    out[static_cast<std::size_t>(i)] = acc / norm;
  }
  return out;
}

}  // namespace

double fold_tempo(double bpm) {
  if (!(bpm > 0.0) || !std::isfinite(bpm)) throw DomainError("tempo must be positive and finite");
  while (bpm > kMaxFoldedBpm) bpm /= 2.0;
  return bpm;
}

TempoEstimate estimate_tempo(const AudioClip& clip) {
  if (clip.empty() || clip.duration_seconds() < kMinTempoClipSeconds) {
    throw InvalidInputError("tempo estimation needs at least 5 s of audio");
  }
  const auto sr = static_cast<double>(clip.sample_rate_hz());
  const auto hop = static_cast<std::size_t>(std::max<long long>(1, std::llround(sr / kEnvelopeRateHz)));
  const double frame_rate = sr / static_cast<double>(hop);
  const std::size_t window = next_pow2(2 * hop);

  std::vector<double> env = onset_envelope(clip.mixdown(), hop, window);
  const double peak = env.empty() ? 0.0 : *std::max_element(env.begin(), env.end());
  if (!(peak > 1e-9)) throw InvalidInputError("no onsets found in clip");

  env = smooth(env, kSmoothingFrames);
  const double mean = std::accumulate(env.begin(), env.end(), 0.0) / static_cast<double>(env.size());
  for (auto& v : env) v -= mean;

  const auto min_lag = static_cast<std::size_t>(std::floor(60.0 * frame_rate / kMaxCandidateBpm));
  const auto max_lag = std::min(env.size() - 1,
                                static_cast<std::size_t>(std::ceil(60.0 * frame_rate / kMinCandidateBpm)));
  if (min_lag < 2 || max_lag <= min_lag + 1) throw InvalidInputError("clip too short for tempo lags");

  auto autocorr = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < env.size(); ++i) acc += env[i] * env[i + lag];
    return acc;
  };
  const double energy = autocorr(0);
  if (!(energy > 0.0)) throw InvalidInputError("onset envelope is constant");

  std::vector<double> r(max_lag + 2, 0.0);
  for (std::size_t lag = min_lag - 1; lag <= max_lag + 1 && lag < env.size(); ++lag) r[lag] = autocorr(lag);

  std::size_t best = 0;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    const bool local_max = r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1];
    if (local_max && (best == 0 || r[lag] > r[best])) best = lag;
  }
  if (best == 0) {
    best = min_lag;
    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
      if (r[lag] > r[best]) best = lag;
    }
  }

  // Parabolic refinement of the peak position.
  double lag = static_cast<double>(best);
  const double a = r[best - 1], b = r[best], c = r[best + 1];
  const double curvature = a - 2.0 * b + c;
  if (curvature < 0.0) lag += std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);

  TempoEstimate est;
  est.bpm = fold_tempo(60.0 * frame_rate / lag);
  est.confidence = std::clamp(r[best] / energy, 0.0, 1.0);
  return est;
}

}  // namespace msr
