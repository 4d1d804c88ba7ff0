#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "gedanken/constants.hpp"

namespace gedanken {

// Baseband detuning grid.  States are sampled at detunings
// delta_k = (k - n/2) * d_nu relative to the optical carrier nu0, which is
// carried symbolically and never gridded.  The dual time grid is
// t_j = (j - n/2) * d_t with d_t = 1 / (n * d_nu), so the temporal window
// has length 1 / d_nu and is centered on zero.
struct FrequencyGrid {
  int n_points = 0;
  double d_nu = 0.0;        // Hz
  double carrier_nu0 = 0.0; // Hz

  double detuning(int k) const { return (k - n_points / 2) * d_nu; }
  double span() const { return n_points * d_nu; }
  double d_t() const { return 1.0 / (n_points * d_nu); }
  double window() const { return 1.0 / d_nu; }           // total length, s
  double time(int j) const { return (j - n_points / 2) * d_t(); }
  double window_start() const { return -0.5 * window(); }

  bool operator==(const FrequencyGrid&) const = default;
};

// span_hz is divided into n_points bins; carrier must exceed the span so the
// baseband picture stays valid.
FrequencyGrid make_grid(double span_hz, int n_points, double carrier_nu0);

// Complex spectral amplitude on a FrequencyGrid, units Hz^(-1/2).
struct SpectralAmplitude {
  FrequencyGrid grid;
  std::vector<std::complex<double>> values;

  double norm() const;  // sum |psi_k|^2 * d_nu, compensated summation
  std::vector<double> intensity() const;
  std::vector<double> detunings() const;
};

// Complex temporal envelope, units s^(-1/2).
struct TemporalAmplitude {
  FrequencyGrid grid;   // defining grid; time axis is its dual
  double t0 = 0.0;      // window start
  double d_t = 0.0;
  std::vector<std::complex<double>> values;

  double norm() const;  // sum |phi_j|^2 * d_t
  std::vector<double> intensity() const;
  double time(int j) const { return t0 + j * d_t; }
};

// phi(t_j) = sum_k psi(delta_k) exp(+i 2 pi delta_k t_j) d_nu.
// This sign convention is fixed project-wide: a spectral factor
// exp(-i 2 pi delta T0) delays the envelope by +T0.
TemporalAmplitude to_time(const SpectralAmplitude& psi);

// Exact inverse of to_time (same kernel conjugated, weighted by d_t).
SpectralAmplitude to_freq(const TemporalAmplitude& phi);

// First-order coherence, baseband Wiener-Khinchin:
// g1(tau) = sum_k |psi_k|^2 exp(-i 2 pi delta_k tau) d_nu.
std::complex<double> g1(const SpectralAmplitude& psi, double tau);

// |g1| sampled on the dual time grid tau_j = j * d_t, j = 0 .. n/2 - 1,
// via a single transform of the spectral intensity.
std::vector<double> g1_magnitude_samples(const SpectralAmplitude& psi);

struct HwhmResult {
  double value = 0.0;      // from the first crossings around the peak
  double outermost = 0.0;  // from the outermost crossings (== value when unimodal)
  bool multimodal = false; // profile re-exceeds half max in disjoint regions
};

// Half width at half maximum of a nonnegative profile sampled on a uniform
// axis, with linear interpolation between the bracketing samples.  When the
// profile re-exceeds half max in disjoint regions the result is flagged and
// the outermost crossings are reported alongside.  Throws DomainError when
// the maximum sits on an axis edge or a crossing is missing.
HwhmResult hwhm(const std::vector<double>& profile, double axis_step);

// Coherence time t_c = tau_e / 2 where tau_e is the smallest tau > 0 with
// |g1(tau_e)| = 1/e.  The root is bracketed on the dual time grid and
// polished by bisection to 1e-4 relative accuracy.  Under this convention a
// Lorentzian line of lifetime tau_R returns exactly tau_R.  Throws
// CoherenceWindowError when |g1| never decays below 1/e inside the window.
double coherence_time(const SpectralAmplitude& psi);

// l_c = c * t_c.  Throws DomainError on negative input.
double coherence_length(double t_c, const PhysicalConstants& constants = kConstants);

// Rescales so that norm() == 1 to machine precision.  No-op within 1e-12 so
// that an identity filter leaves a normalized state bit-for-bit unchanged.
void normalize(SpectralAmplitude& psi);

bool is_power_of_two(int n);

}  // namespace gedanken
