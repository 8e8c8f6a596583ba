#pragma once

// Preprocessing for recognition: face alignment, 1 s audio chunking, energy
// VAD and gammatonegram features on an ERB-spaced filterbank.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "egomem/errors.hpp"
#include "egomem/image.hpp"
#include "egomem/sls.hpp"
#include "egomem/tracker.hpp"

namespace egomem::features {

// ----------------------------------------------------------- face alignment

inline constexpr int kAlignedSize = 180;

/// Crops a square centered on the box (side = longer box edge) and resamples
/// it bilinearly to 180x180. Pixels outside the source read as 0.
inline GrayImage align_face(const GrayImage& image, const BoundingBox& box, int size = kAlignedSize) {
  if (image.empty()) throw DomainError("align_face: empty image");
  if (!(box.x2 > box.x1 && box.y2 > box.y1) || !std::isfinite(box.x1 + box.x2 + box.y1 + box.y2))
    throw DomainError("align_face: degenerate box");
  if (box.x2 <= 0 || box.y2 <= 0 || box.x1 >= image.width || box.y1 >= image.height)
    throw DomainError("align_face: box entirely outside image");

  const double side = std::max(box.width(), box.height());
  const double x0 = box.cx() - side / 2, y0 = box.cy() - side / 2;
  const double scale = side / size;
  auto px = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= image.width || y >= image.height) return 0.0;
    return image.at(x, y);
  };

  GrayImage out(size, size);
  for (int i = 0; i < size; ++i) {
    const double sy = y0 + (i + 0.5) * scale - 0.5;
    const int yi = static_cast<int>(std::floor(sy));
    const double fy = sy - yi;
    for (int j = 0; j < size; ++j) {
      const double sx = x0 + (j + 0.5) * scale - 0.5;
      const int xi = static_cast<int>(std::floor(sx));
      const double fx = sx - xi;
      double v = (1 - fy) * ((1 - fx) * px(xi, yi) + fx * px(xi + 1, yi)) +
                 fy * ((1 - fx) * px(xi, yi + 1) + fx * px(xi + 1, yi + 1));
      out.at(j, i) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

// ---------------------------------------------------------------- chunking

struct ChunkParams {
  double window_seconds = 1.0;
  double hop_seconds = 0.25;
};

/// Number of whole windows that fit: floor((n - window) / hop) + 1, or 0.
inline std::size_t chunk_count(std::size_t n_frames, int sample_rate, const ChunkParams& p = {}) {
  const auto win = static_cast<std::size_t>(std::lround(p.window_seconds * sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(p.hop_seconds * sample_rate));
  if (win == 0 || hop == 0) throw DomainError("chunk window and hop must be positive");
  if (n_frames < win) return 0;
  return (n_frames - win) / hop + 1;
}

/// Chunk k covers [k * hop, k * hop + window). Signals shorter than one
/// window yield no chunks.
inline std::vector<AudioEvent> chunk_audio(const AudioEvent& signal, const ChunkParams& p = {}) {
  signal.validate();
  const auto win = static_cast<std::size_t>(std::lround(p.window_seconds * signal.sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(p.hop_seconds * signal.sample_rate));
  const std::size_t n = chunk_count(signal.frames(), signal.sample_rate, p);
  const auto ch = static_cast<std::size_t>(signal.channels);
  std::vector<AudioEvent> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    AudioEvent c;
    c.channels = signal.channels;
    c.sample_rate = signal.sample_rate;
    c.true_azimuth = signal.true_azimuth;
    c.timestamp = signal.timestamp + static_cast<double>(k * hop) / signal.sample_rate;
    auto first = signal.samples.begin() + static_cast<std::ptrdiff_t>(k * hop * ch);
    c.samples.assign(first, first + static_cast<std::ptrdiff_t>(win * ch));
    out.push_back(std::move(c));
  }
  return out;
}

// --------------------------------------------------------------------- VAD

struct VadParams {
  double subframe_seconds = 0.030;
  /// Subframe power must exceed the noise floor by this margin.
  double margin_db = 3.0;
  /// Noise-floor power (full scale = 1). Defaults to a -70 dBFS floor when
  /// no ego-noise reference has been measured.
  double noise_floor = 1e-7;
  double min_voiced_fraction = 0.8;
};

/// Mean power (channels averaged) of each complete subframe.
inline std::vector<double> subframe_powers(const AudioEvent& a, double subframe_seconds) {
  const auto len = static_cast<std::size_t>(std::lround(subframe_seconds * a.sample_rate));
  if (len == 0) throw DomainError("subframe shorter than one sample");
  const auto ch = static_cast<std::size_t>(a.channels);
  const std::size_t n = a.frames() / len;
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = k * len * ch; i < (k + 1) * len * ch; ++i) {
      const double v = a.samples[i] / 32768.0;
      acc += v * v;
    }
    out[k] = acc / static_cast<double>(len * ch);
  }
  return out;
}

/// Estimates the ego-noise floor from a noise-only reference recording
/// (median subframe power). The VAD threshold adapts to this measurement.
inline double estimate_noise_floor(const AudioEvent& noise_reference, const VadParams& p = {}) {
  auto pw = subframe_powers(noise_reference, p.subframe_seconds);
  if (pw.empty()) throw DomainError("noise reference shorter than one subframe");
  auto mid = pw.begin() + static_cast<std::ptrdiff_t>(pw.size() / 2);
  std::nth_element(pw.begin(), mid, pw.end());
  return std::max(*mid, VadParams{}.noise_floor);
}

/// Fraction of 30 ms subframes whose power exceeds the noise floor plus margin.
inline double vad_fraction(const AudioEvent& chunk, const VadParams& p = {}) {
  const auto pw = subframe_powers(chunk, p.subframe_seconds);
  if (pw.empty()) return 0.0;
  const double threshold = p.noise_floor * std::pow(10.0, p.margin_db / 10.0);
  const auto voiced = std::count_if(pw.begin(), pw.end(), [&](double e) { return e > threshold; });
  return static_cast<double>(voiced) / static_cast<double>(pw.size());
}

inline bool is_voiced(const AudioEvent& chunk, const VadParams& p = {}) {
  return vad_fraction(chunk, p) >= p.min_voiced_fraction;
}

// ------------------------------------------------------------------- ERB

/// ERB-rate scale (Glasberg & Moore): E(f) = 21.4 log10(0.00437 f + 1).
inline double erb_rate(double hz) { return 21.4 * std::log10(0.00437 * hz + 1.0); }
inline double erb_rate_inverse(double e) { return (std::pow(10.0, e / 21.4) - 1.0) / 0.00437; }
/// Equivalent rectangular bandwidth in Hz at center frequency hz.
inline double erb_bandwidth(double hz) { return 24.7 * (4.37e-3 * hz + 1.0); }

inline std::vector<double> erb_center_frequencies(int n, double f_min, double f_max) {
  if (n < 2) throw DomainError("need at least two filters");
  if (!(f_min > 0 && f_max > f_min) || !std::isfinite(f_max)) throw DomainError("invalid ERB frequency range");
  const double e0 = erb_rate(f_min), e1 = erb_rate(f_max);
  std::vector<double> f(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = erb_rate_inverse(e0 + (e1 - e0) * i / (n - 1));
  f.front() = f_min;
  f.back() = f_max;
  return f;
}

// ------------------------------------------------------------ gammatonegram

struct GammatoneParams {
  int n_filters = 128;
  double f_min = 50.0;
  double f_max = 0.0;  // 0: 0.95 * Nyquist
  int frames_per_channel = 96;
  bool log_compress = false;
  double log_floor = 1e-10;

  double upper(int sample_rate) const { return f_max > 0 ? f_max : 0.95 * sample_rate / 2.0; }
};

/// rows = filters (low to high center frequency), cols = time frames with
/// the two channels stacked horizontally.
struct Gammatonegram {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;

  float at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  float& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
};

namespace detail {

// 4th-order gammatone bank via complex demodulation followed by four
// cascaded one-pole lowpass sections per filter (unit gain at center).
// Writes mean output power per frame into out(:, col_offset .. +frames).
inline void gammatone_channel(std::span<const double> x, int sample_rate, const std::vector<double>& fc,
                              int frames, Gammatonegram& out, int col_offset) {
  const std::size_t nf = fc.size();
  const std::size_t n = x.size();
  std::vector<float> a(nf), g(nf), rot_re(nf), rot_im(nf), ph_re(nf), ph_im(nf);
  std::vector<float> s_re(4 * nf, 0.f), s_im(4 * nf, 0.f);
  std::vector<double> acc(nf, 0.0);
  std::vector<float> frame_acc(nf, 0.f);
  for (std::size_t k = 0; k < nf; ++k) {
    const double b = 1.019 * erb_bandwidth(fc[k]);
    a[k] = static_cast<float>(std::exp(-2.0 * std::numbers::pi * b / sample_rate));
    g[k] = 1.f - a[k];
    const double w = 2.0 * std::numbers::pi * fc[k] / sample_rate;
    rot_re[k] = static_cast<float>(std::cos(w));
    rot_im[k] = static_cast<float>(-std::sin(w));
  }
  auto reset_phasor = [&](std::size_t idx) {
    for (std::size_t k = 0; k < nf; ++k) {
      const double w = 2.0 * std::numbers::pi * fc[k] / sample_rate;
      const double ph = std::fmod(w * static_cast<double>(idx), 2.0 * std::numbers::pi);
      ph_re[k] = static_cast<float>(std::cos(ph));
      ph_im[k] = static_cast<float>(-std::sin(ph));
    }
  };

  int frame = 0;
  auto frame_end = [&](int j) { return static_cast<std::size_t>((static_cast<std::size_t>(j) + 1) * n / frames); };
  std::size_t next_end = frame_end(0);
  std::size_t frame_start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 256 == 0) reset_phasor(i);
    const float xi = static_cast<float>(x[i]);
    float* r0 = s_re.data();
    float* i0 = s_im.data();
    float* r1 = r0 + nf;
    float* i1 = i0 + nf;
    float* r2 = r1 + nf;
    float* i2 = i1 + nf;
    float* r3 = r2 + nf;
    float* i3 = i2 + nf;
    for (std::size_t k = 0; k < nf; ++k) {
      const float zr = xi * ph_re[k], zi = xi * ph_im[k];
      const float ak = a[k], gk = g[k];
      r0[k] = gk * zr + ak * r0[k];
      i0[k] = gk * zi + ak * i0[k];
      r1[k] = gk * r0[k] + ak * r1[k];
      i1[k] = gk * i0[k] + ak * i1[k];
      r2[k] = gk * r1[k] + ak * r2[k];
      i2[k] = gk * i1[k] + ak * i2[k];
      r3[k] = gk * r2[k] + ak * r3[k];
      i3[k] = gk * i2[k] + ak * i3[k];
      frame_acc[k] += r3[k] * r3[k] + i3[k] * i3[k];
      const float pr = ph_re[k] * rot_re[k] - ph_im[k] * rot_im[k];
      const float pi = ph_re[k] * rot_im[k] + ph_im[k] * rot_re[k];
      ph_re[k] = pr;
      ph_im[k] = pi;
    }
    if (i + 1 == next_end) {
      const double len = static_cast<double>(next_end - frame_start);
      for (std::size_t k = 0; k < nf; ++k) {
        out.at(static_cast<int>(k), col_offset + frame) = static_cast<float>(frame_acc[k] / len);
        frame_acc[k] = 0.f;
      }
      ++frame;
      frame_start = next_end;
      if (frame < frames) next_end = frame_end(frame);
    }
  }
}

}  // namespace detail

/// Gammatonegram of a 1 s chunk given as two float channels in [-1, 1].
inline Gammatonegram gammatonegram(std::span<const double> left, std::span<const double> right, int sample_rate,
                                   const GammatoneParams& p = {}) {
  if (sample_rate <= 0) throw DomainError("gammatonegram: bad sample rate");
  if (left.size() != static_cast<std::size_t>(sample_rate) || right.size() != left.size())
    throw DomainError("gammatonegram: chunk must be exactly 1 s per channel");
  if (p.frames_per_channel < 1 || static_cast<std::size_t>(p.frames_per_channel) > left.size())
    throw DomainError("gammatonegram: bad frame count");
  const auto fc = erb_center_frequencies(p.n_filters, p.f_min, p.upper(sample_rate));
  Gammatonegram g{p.n_filters, 2 * p.frames_per_channel,
                  std::vector<float>(static_cast<std::size_t>(p.n_filters) * 2 * p.frames_per_channel, 0.f)};
  detail::gammatone_channel(left, sample_rate, fc, p.frames_per_channel, g, 0);
  detail::gammatone_channel(right, sample_rate, fc, p.frames_per_channel, g, p.frames_per_channel);
  if (p.log_compress)
    for (auto& v : g.values) v = static_cast<float>(std::log(std::max<double>(v, p.log_floor)));
  return g;
}

/// Mono chunks are duplicated into both channels.
inline Gammatonegram gammatonegram(const AudioEvent& chunk, const GammatoneParams& p = {}) {
  chunk.validate();
  if (chunk.frames() != static_cast<std::size_t>(chunk.sample_rate))
    throw DomainError("gammatonegram: chunk must be exactly 1 s");
  const auto l = chunk.channel(0);
  const auto r = chunk.channels == 2 ? chunk.channel(1) : l;
  return gammatonegram(l, r, chunk.sample_rate, p);
}

}  // namespace egomem::features
