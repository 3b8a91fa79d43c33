#include "msr/stretch.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "msr/errors.hpp"

namespace msr {
namespace {

// Correlation gains smaller than this are treated as ties.
constexpr double kCorrelationTieTolerance = 1e-9;

std::size_t ms_to_samples(double ms, int sample_rate_hz) {
  return static_cast<std::size_t>(std::llround(ms * sample_rate_hz / 1000.0));
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

class SolaRenderer {
 public:
  SolaRenderer(const AudioClip& clip, double rate, const SolaGeometry& geo)
      : clip_(clip), rate_(rate), geo_(geo) {
    input_length_ = clip.frame_count();
    target_length_ = static_cast<std::size_t>(std::llround(rate * static_cast<double>(input_length_)));
    mix_.assign(input_length_, 0.0);
    for (std::size_t c = 0; c < clip.channel_count(); ++c) {
      const auto ch = clip.channel(c);
      for (std::size_t i = 0; i < input_length_; ++i) mix_[i] += ch[i];
    }
    const std::size_t capacity = target_length_ + 2 * geo.frame + 2 * geo.seek + 2;
    out_.assign(clip.channel_count(), std::vector<double>(capacity, 0.0));
    out_mix_.assign(capacity, 0.0);
    head_.resize(geo.overlap);
  }

  AudioClip run() {
    write_frame(0, 0, /*crossfade=*/false);
    written_ = geo_.frame;
    for (std::size_t m = 1;; ++m) {
      const std::size_t src = m * geo_.analysis_hop;
      if (src >= input_length_ && written_ >= target_length_) break;
      const auto nominal = static_cast<std::ptrdiff_t>(
          std::llround(static_cast<double>(m) * rate_ * static_cast<double>(geo_.analysis_hop)));
      const std::ptrdiff_t offset = best_offset(src, nominal);
      const auto pos = static_cast<std::size_t>(nominal + offset);
      ensure_capacity(pos + geo_.frame);
      // Guarantee the crossfade region never reads stale samples.
      for (std::size_t i = written_; i < pos + geo_.overlap; ++i) zero_at(i);
      write_frame(src, pos, /*crossfade=*/true);
      written_ = pos + geo_.frame;
    }

    std::vector<std::vector<float>> channels(out_.size());
    for (std::size_t c = 0; c < out_.size(); ++c) {
      auto& dst = channels[c];
      dst.resize(target_length_, 0.0f);
      const std::size_t n = std::min(target_length_, written_);
      for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<float>(out_[c][i]);
    }
    return AudioClip(std::move(channels), clip_.sample_rate_hz());
  }

 private:
  double input_at(std::size_t channel, std::size_t i) const {
    return i < input_length_ ? static_cast<double>(clip_.channel(channel)[i]) : 0.0;
  }

  void zero_at(std::size_t i) {
    for (auto& ch : out_) ch[i] = 0.0;
    out_mix_[i] = 0.0;
  }

  void ensure_capacity(std::size_t n) {
    if (n <= out_mix_.size()) return;
    for (auto& ch : out_) ch.resize(n, 0.0);
    out_mix_.resize(n, 0.0);
  }

  std::ptrdiff_t best_offset(std::size_t src, std::ptrdiff_t nominal) {
    const auto seek = static_cast<std::ptrdiff_t>(geo_.seek);
    const auto overlap = static_cast<std::ptrdiff_t>(geo_.overlap);
    const std::ptrdiff_t lo = std::max(-seek, -nominal);
    const std::ptrdiff_t hi =
        std::max(lo, std::min(seek, static_cast<std::ptrdiff_t>(written_) - overlap - nominal));
    if (lo == hi) return lo;

    for (std::size_t j = 0; j < geo_.overlap; ++j) head_[j] = src + j < input_length_ ? mix_[src + j] : 0.0;
    const double head_energy = dot(head_.data(), head_.data(), geo_.overlap);

    // Windowed energies of the written output for every candidate offset.
    const auto base = static_cast<std::size_t>(nominal + lo);
    const auto span = static_cast<std::size_t>(hi - lo) + geo_.overlap;
    energy_prefix_.assign(span + 1, 0.0);
    for (std::size_t i = 0; i < span; ++i) {
      const double v = base + i < written_ ? out_mix_[base + i] : 0.0;
      energy_prefix_[i + 1] = energy_prefix_[i] + v * v;
    }

    std::ptrdiff_t best = std::clamp<std::ptrdiff_t>(0, lo, hi);
    double best_score = score(best, lo, base, head_energy);
    for (std::ptrdiff_t d = 1; d <= seek; ++d) {
      for (const std::ptrdiff_t k : {-d, d}) {
        if (k < lo || k > hi) continue;
        const double s = score(k, lo, base, head_energy);
        if (s > best_score + kCorrelationTieTolerance) {
          best_score = s;
          best = k;
        }
      }
    }
    return best;
  }

  double score(std::ptrdiff_t k, std::ptrdiff_t lo, std::size_t base, double head_energy) const {
    const auto rel = static_cast<std::size_t>(k - lo);
    const double window_energy = energy_prefix_[rel + geo_.overlap] - energy_prefix_[rel];
    const double denom = head_energy * window_energy;
    if (!(denom > 0.0)) return 0.0;
    const double num = dot(head_.data(), out_mix_.data() + base + rel, geo_.overlap);
    return num / std::sqrt(denom);
  }

  void write_frame(std::size_t src, std::size_t pos, bool crossfade) {
    const std::size_t fade = crossfade ? geo_.overlap : 0;
    const double denom = static_cast<double>(geo_.overlap + 1);
    for (std::size_t c = 0; c < out_.size(); ++c) {
      auto& dst = out_[c];
      for (std::size_t j = 0; j < fade; ++j) {
        const double w = static_cast<double>(j + 1) / denom;
        dst[pos + j] = std::clamp((1.0 - w) * dst[pos + j] + w * input_at(c, src + j), -1.0, 1.0);
      }
      for (std::size_t j = fade; j < geo_.frame; ++j) {
        dst[pos + j] = std::clamp(input_at(c, src + j), -1.0, 1.0);
      }
    }
    for (std::size_t j = 0; j < geo_.frame; ++j) {
      // Mirror the input mix: float channel samples summed in channel order.
      double s = 0.0;
      for (const auto& ch : out_) s += static_cast<double>(static_cast<float>(ch[pos + j]));
      out_mix_[pos + j] = s;
    }
  }

  const AudioClip& clip_;
  double rate_;
  SolaGeometry geo_;
  std::size_t input_length_ = 0;
  std::size_t target_length_ = 0;
  std::size_t written_ = 0;
  std::vector<double> mix_;
  std::vector<std::vector<double>> out_;
  std::vector<double> out_mix_;
  std::vector<double> head_;
  std::vector<double> energy_prefix_;
};

}  // namespace

StretchRate::StretchRate(double value) : value_(value) {
  if (!(value > 0.0 && value < 2.0)) {
    throw DomainError("stretch rate must lie in (0, 2), got " + std::to_string(value));
  }
}

StretchRate StretchRate::from_grid_steps(int steps) { return StretchRate(steps / 50.0); }

bool StretchRate::on_grid() const noexcept { return is_on_rate_grid(value_); }

int StretchRate::grid_steps() const noexcept { return static_cast<int>(std::lround(value_ * 50.0)); }

bool is_on_rate_grid(double value) noexcept {
  if (!std::isfinite(value)) return false;
  const double steps = value * 50.0;
  return std::abs(steps - std::round(steps)) < 1e-9 * std::max(1.0, std::abs(steps));
}

void SolaConfig::validate() const {
  if (!(frame_ms > 0.0)) throw DomainError("SOLA frame length must be positive");
  if (!(overlap_ms > 0.0 && overlap_ms < frame_ms)) {
    throw DomainError("SOLA overlap must satisfy 0 < overlap < frame");
  }
  if (!(seek_window_ms >= 0.0)) throw DomainError("SOLA seek window must be non-negative");
}

std::string SolaConfig::fingerprint() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "f%.6g-o%.6g-s%.6g", frame_ms, overlap_ms, seek_window_ms);
  return buf;
}

SolaGeometry SolaGeometry::resolve(const SolaConfig& config, int sample_rate_hz) {
  config.validate();
  if (sample_rate_hz <= 0) throw InvalidInputError("sample rate must be positive");
  SolaGeometry g;
  g.frame = std::max<std::size_t>(2, ms_to_samples(config.frame_ms, sample_rate_hz));
  g.overlap = std::clamp<std::size_t>(ms_to_samples(config.overlap_ms, sample_rate_hz), 1, g.frame - 1);
  g.seek = ms_to_samples(config.seek_window_ms, sample_rate_hz);
  // Two analysis hops at a rate just under 2 must still leave room for the
  // overlap and a full downward seek, so the crossfade always lands on
  // written output.
  const std::size_t free = g.frame - g.overlap;
  g.analysis_hop = free > g.seek + 1 ? (free - g.seek) / 2 : free / 4;
  g.analysis_hop = std::max<std::size_t>(1, g.analysis_hop);
  return g;
}

AudioClip stretch(const AudioClip& clip, StretchRate rate, const SolaConfig& config) {
  if (clip.empty()) throw InvalidInputError("cannot stretch an empty clip");
  const SolaGeometry geo = SolaGeometry::resolve(config, clip.sample_rate_hz());
  if (clip.frame_count() < geo.frame) {
    throw InvalidInputError("clip has " + std::to_string(clip.frame_count()) +
                            " frames, shorter than one SOLA frame of " + std::to_string(geo.frame));
  }
  return SolaRenderer(clip, rate.value(), geo).run();
}

std::vector<StretchRate> variant_grid_rates() {
  std::vector<StretchRate> rates;
  rates.reserve(98);
  for (int steps = 1; steps < 100; ++steps) {
    if (steps == 50) continue;
    rates.push_back(StretchRate::from_grid_steps(steps));
  }
  return rates;
}

VariantGrid generate_variant_grid(const AudioClip& clip, const SolaConfig& config, unsigned threads) {
  const auto rates = variant_grid_rates();
  // Fail fast on the calling thread for invalid input.
  const SolaGeometry geo = SolaGeometry::resolve(config, clip.sample_rate_hz());
  if (clip.frame_count() < geo.frame) throw InvalidInputError("clip shorter than one SOLA frame");

  std::vector<AudioClip> rendered(rates.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(rates.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < rates.size(); i = next++) {
      try {
        rendered[i] = stretch(clip, rates[i], config);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  VariantGrid grid;
  for (std::size_t i = 0; i < rates.size(); ++i) grid.emplace(rates[i], std::move(rendered[i]));
  return grid;
}

double stretched_tempo(double original_bpm, StretchRate rate) {
  if (!(original_bpm > 0.0)) {
    throw DomainError("tempo must be positive, got " + std::to_string(original_bpm));
  }
  return original_bpm / rate.value();
}

}  // namespace msr
