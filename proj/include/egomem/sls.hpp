#pragma once

// Sound localization: azimuth estimation for audio events and the
// three-way discretization the spatial memory is keyed on.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "egomem/errors.hpp"
#include "egomem/random.hpp"

namespace egomem {

enum class AzimuthBin : std::uint8_t { Left, Center, Right };

inline constexpr std::array<AzimuthBin, 3> kAllBins{AzimuthBin::Left, AzimuthBin::Center,
                                                   AzimuthBin::Right};
inline constexpr double kAzimuthMin = -90.0;
inline constexpr double kAzimuthMax = 90.0;
inline constexpr double kBinWidth = 60.0;
// Left/center and center/right boundaries.
inline constexpr double kBinEdge = 30.0;

/// Maps an azimuth in degrees (positive to the agent's right) to its bin.
/// The +-30 boundaries belong to Center.
inline AzimuthBin bin_azimuth(double azimuth_deg) {
  if (!std::isfinite(azimuth_deg) || azimuth_deg < kAzimuthMin || azimuth_deg > kAzimuthMax) {
    throw DomainError("azimuth outside [-90, 90]: " + std::to_string(azimuth_deg));
  }
  if (azimuth_deg < -kBinEdge) return AzimuthBin::Left;
  if (azimuth_deg > kBinEdge) return AzimuthBin::Right;
  return AzimuthBin::Center;
}

constexpr double bin_center(AzimuthBin b) noexcept {
  switch (b) {
    case AzimuthBin::Left: return -60.0;
    case AzimuthBin::Center: return 0.0;
    case AzimuthBin::Right: return 60.0;
  }
  return 0.0;
}

constexpr std::size_t bin_index(AzimuthBin b) noexcept { return static_cast<std::size_t>(b); }

constexpr std::string_view to_string(AzimuthBin b) noexcept {
  switch (b) {
    case AzimuthBin::Left: return "left";
    case AzimuthBin::Center: return "center";
    case AzimuthBin::Right: return "right";
  }
  return "?";
}

inline std::optional<AzimuthBin> parse_bin(std::string_view s) {
  for (auto b : kAllBins)
    if (to_string(b) == s) return b;
  return std::nullopt;
}

/// Interleaved signed 16-bit PCM with simulation ground truth attached.
struct AudioEvent {
  std::vector<std::int16_t> samples;
  int channels = 1;
  int sample_rate = 16000;
  double true_azimuth = 0.0;  // hidden from the pipeline
  double timestamp = 0.0;

  std::size_t frames() const noexcept {
    return channels > 0 ? samples.size() / static_cast<std::size_t>(channels) : 0;
  }
  double duration() const noexcept {
    return sample_rate > 0 ? static_cast<double>(frames()) / sample_rate : 0.0;
  }
  bool empty() const noexcept { return samples.empty(); }

  /// One channel as floats in [-1, 1).
  std::vector<double> channel(int c) const {
    std::vector<double> out(frames());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = samples[i * static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)] / 32768.0;
    return out;
  }

  void validate() const {
    if (sample_rate <= 0) throw DomainError("audio sample_rate must be positive");
    if (channels != 1 && channels != 2) throw DomainError("audio must have 1 or 2 channels");
    if (samples.size() % static_cast<std::size_t>(channels) != 0)
      throw DomainError("audio sample count not a multiple of channel count");
    if (!(true_azimuth >= kAzimuthMin && true_azimuth <= kAzimuthMax))
      throw DomainError("audio true_azimuth outside [-90, 90]");
  }
};

class AzimuthEstimator {
 public:
  virtual ~AzimuthEstimator() = default;
  virtual double estimate(const AudioEvent& event) const = 0;
};

/// Ground truth plus zero-mean Gaussian error. The noise draw is keyed on
/// (seed, event timestamp, event azimuth), so the estimate is a pure
/// function of the event and the seed.
class NoisyOracleEstimator final : public AzimuthEstimator {
 public:
  explicit NoisyOracleEstimator(double sigma_deg = 5.0, std::uint64_t seed = 0)
      : sigma_(sigma_deg), seed_(seed) {
    if (!(sigma_deg >= 0.0) || !std::isfinite(sigma_deg))
      throw DomainError("oracle sigma must be finite and >= 0");
  }

  double estimate(const AudioEvent& event) const override {
    Rng rng(derive_seed(derive_seed(seed_, std::bit_cast<std::uint64_t>(event.timestamp)),
                        std::bit_cast<std::uint64_t>(event.true_azimuth)));
    return std::clamp(gaussian(rng, event.true_azimuth, sigma_), kAzimuthMin, kAzimuthMax);
  }

  double sigma() const noexcept { return sigma_; }

 private:
  double sigma_;
  std::uint64_t seed_;
};

/// Two-microphone free-field geometry; channel 0 is the left microphone.
struct MicPair {
  double spacing_m = 0.14;
  double speed_of_sound = 343.0;

  double delay_seconds(double azimuth_deg) const noexcept {
    return spacing_m * std::sin(azimuth_deg * std::numbers::pi / 180.0) / speed_of_sound;
  }
};

enum class CorrelationWeighting { Plain, Phat };

namespace detail {

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept { fftw_destroy_plan(p); }
};
struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
using FftwPlan = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  return FftwBuffer<T>(static_cast<T*>(fftw_malloc(sizeof(T) * n)));
}

}  // namespace detail

/// Generalized cross-correlation between the two channels of an event.
/// Returns the correlation for lags in [-max_lag, max_lag] (index 0 is
/// lag -max_lag). Positive lag: channel 0 lags channel 1.
inline std::vector<double> gcc(std::span<const double> ch0, std::span<const double> ch1,
                               int max_lag, CorrelationWeighting weighting) {
  const std::size_t n = ch0.size();
  std::size_t nfft = std::bit_ceil(2 * n);
  auto in = detail::fftw_buffer<double>(nfft);
  auto spec0 = detail::fftw_buffer<fftw_complex>(nfft / 2 + 1);
  auto spec1 = detail::fftw_buffer<fftw_complex>(nfft / 2 + 1);
  const int ni = static_cast<int>(nfft);
  detail::FftwPlan fwd0(fftw_plan_dft_r2c_1d(ni, in.get(), spec0.get(), FFTW_ESTIMATE));
  detail::FftwPlan fwd1(fftw_plan_dft_r2c_1d(ni, in.get(), spec1.get(), FFTW_ESTIMATE));
  detail::FftwPlan inv(fftw_plan_dft_c2r_1d(ni, spec0.get(), in.get(), FFTW_ESTIMATE));

  std::fill_n(in.get(), nfft, 0.0);
  std::copy(ch0.begin(), ch0.end(), in.get());
  fftw_execute(fwd0.get());
  std::fill_n(in.get(), nfft, 0.0);
  std::copy(ch1.begin(), ch1.end(), in.get());
  fftw_execute(fwd1.get());

  for (std::size_t k = 0; k <= nfft / 2; ++k) {
    std::complex<double> a(spec0[k][0], spec0[k][1]);
    std::complex<double> b(spec1[k][0], spec1[k][1]);
    std::complex<double> c = a * std::conj(b);
    if (weighting == CorrelationWeighting::Phat) {
      double m = std::abs(c);
      c = m > 1e-12 ? c / m : std::complex<double>{};
    }
    spec0[k][0] = c.real();
    spec0[k][1] = c.imag();
  }
  fftw_execute(inv.get());

  std::vector<double> out(static_cast<std::size_t>(2 * max_lag + 1));
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    std::size_t idx = lag >= 0 ? static_cast<std::size_t>(lag) : nfft - static_cast<std::size_t>(-lag);
    out[static_cast<std::size_t>(lag + max_lag)] = in[idx] / static_cast<double>(nfft);
  }
  return out;
}

/// Azimuth from the inter-channel delay that maximizes the generalized
/// cross-correlation, refined by parabolic interpolation of the peak.
class CrossCorrelationEstimator final : public AzimuthEstimator {
 public:
  explicit CrossCorrelationEstimator(MicPair mics = {},
                                     CorrelationWeighting weighting = CorrelationWeighting::Plain)
      : mics_(mics), weighting_(weighting) {}

  double estimate(const AudioEvent& event) const override {
    if (event.channels != 2)
      throw UnsupportedInputError("cross-correlation localization needs a 2-channel event");
    if (event.empty()) throw DomainError("empty audio event");
    const double fs = event.sample_rate;
    const double max_delay = mics_.spacing_m / mics_.speed_of_sound;
    const int max_lag = static_cast<int>(std::ceil(max_delay * fs)) + 1;
    auto ch0 = event.channel(0);
    auto ch1 = event.channel(1);
    auto cc = gcc(ch0, ch1, max_lag, weighting_);

    auto peak = static_cast<std::size_t>(std::max_element(cc.begin(), cc.end()) - cc.begin());
    double lag = static_cast<double>(peak) - max_lag;
    if (peak > 0 && peak + 1 < cc.size()) {
      double ym = cc[peak - 1], y0 = cc[peak], yp = cc[peak + 1];
      double denom = ym - 2.0 * y0 + yp;
      if (denom < 0.0) lag += 0.5 * (ym - yp) / denom;
    }
    double s = std::clamp(lag / fs / max_delay, -1.0, 1.0);
    return std::asin(s) * 180.0 / std::numbers::pi;
  }

 private:
  MicPair mics_;
  CorrelationWeighting weighting_;
};

inline double estimate_azimuth(const AudioEvent& event, const AzimuthEstimator& estimator) {
  if (event.empty()) throw DomainError("empty audio event");
  return estimator.estimate(event);
}

}  // namespace egomem
