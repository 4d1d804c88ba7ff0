#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gedanken/constants.hpp"
#include "gedanken/elements.hpp"
#include "gedanken/spectral.hpp"

namespace gedanken {

// Time-bandwidth lower bound 1 / (4 pi) with a 2% estimator allowance.
inline constexpr double kHupBound = 1.0 / (4.0 * kPi);
inline constexpr double kHupSlack = 0.02;

struct HupProduct {
  double value = 0.0;
  bool passes = false;  // value >= (1/4pi) * (1 - 0.02)
};

HupProduct hup_product(double dnu_hz, double t_char_s);

struct SourceReport {
  double nu0_hat_hz = 0.0;
  double dnu_hat_hz = 0.0;   // HWHM of the spectral intensity
  double tc_hat_s = 0.0;
  double lc_hat_m = 0.0;
  double hup_product = 0.0;
  bool hup_pass = false;
  bool per_photon_hup_violation = false;  // hidden-variable diagnostic
  bool insufficient_statistics = false;
};

struct ChannelReport {
  int k = -1;
  double center_hz = 0.0;             // nominal channel center (detuning)
  double calibrated_center_hz = 0.0;  // conditional-mean detuning
  double p_hat = 0.0;
  double dnu_prime_hz = 0.0;
  double tc_prime_s = 0.0;
  double hup_product = 0.0;
  bool hup_pass = false;
  double mean_t_s = 0.0;
  double std_t_s = 0.0;
  double stderr_t_s = 0.0;
  std::size_t clicks = 0;
  bool empty = false;
  bool insufficient_clicks = false;
};

enum class Verdict { quantum_like, transformer_like, inconclusive };

std::string to_string(Verdict v);

struct DiscriminationReport {
  double slope_hat = 0.0;         // s/Hz
  double slope_stderr = 0.0;
  double z_vs_zero = 0.0;
  double z_vs_d = 0.0;
  double d_reference = 0.0;
  Verdict verdict = Verdict::inconclusive;
};

struct VisibilityPoint {
  double tau_s = 0.0;
  double visibility = 0.0;
  double p_click = 0.0;  // bright port
};

// Fringe visibility |g1| and bright-port click probability over a delay
// grid.  For Lorentzian and Gaussian states the envelope is monotone
// nonincreasing.
std::vector<VisibilityPoint> visibility_scan(const SpectralAmplitude& psi,
                                             const std::vector<double>& tau_grid);

struct ChannelStats {
  std::size_t count = 0;
  double mean = 0.0;
  double sample_std = 0.0;
  double stderr_mean = 0.0;
  bool sufficient = false;  // needs >= 30 clicks
};

// Order-insensitive aggregation: values are sorted before the reduction so
// any permutation of the record yields the identical report.
ChannelStats channel_stats(std::vector<double> values);

// Weighted least squares of mean arrival on channel center with weights
// 1/stderr^2.  Verdict thresholds are fixed at |z| >= 5.
DiscriminationReport arrival_regression(const std::vector<ChannelReport>& channels,
                                        double d_reference_s_per_hz);

struct HistogramSpectrum {
  double nu0_hat_offset_hz = 0.0;  // intensity-weighted center (detuning)
  double dnu_hat_hz = 0.0;         // raw HWHM of the channel histogram
  double channel_hwhm_hz = 0.0;    // resolution, reported alongside
  bool upper_bound = false;        // all counts in one bin
  bool insufficient_statistics = false;  // fewer than 1e3 counts
};

// Center and width of an empirical channel histogram on uniform centers.
HistogramSpectrum histogram_spectrum(const std::vector<double>& counts,
                                     const std::vector<double>& centers_hz,
                                     double channel_hwhm_hz);

}  // namespace gedanken
