#include "gedanken/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "gedanken/errors.hpp"

namespace gedanken {

namespace {

std::mutex g_fftw_mutex;  // FFTW planning is not thread-safe

// out_j = sum_k in_k exp(sign * 2 pi i j k / n), unnormalized.
void dft(const std::vector<std::complex<double>>& in,
         std::vector<std::complex<double>>& out, int sign) {
  const int n = static_cast<int>(in.size());
  out.resize(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    plan = fftw_plan_dft_1d(
        n,
        reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
        reinterpret_cast<fftw_complex*>(out.data()),
        sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_destroy_plan(plan);
  }
}

double kahan_norm(const std::vector<std::complex<double>>& v, double weight) {
  double sum = 0.0, comp = 0.0;
  for (const auto& z : v) {
    const double term = std::norm(z) - comp;
    const double next = sum + term;
    comp = (next - sum) - term;
    sum = next;
  }
  return sum * weight;
}

}  // namespace

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

FrequencyGrid make_grid(double span_hz, int n_points, double carrier_nu0) {
  if (!(span_hz > 0.0)) throw DomainError("grid span must be positive");
  if (!is_power_of_two(n_points) || n_points < 64)
    throw DomainError("grid size must be a power of two >= 64");
  if (!(carrier_nu0 > span_hz))
    throw DomainError("carrier frequency must exceed the grid span");
  return FrequencyGrid{n_points, span_hz / n_points, carrier_nu0};
}

double SpectralAmplitude::norm() const { return kahan_norm(values, grid.d_nu); }

std::vector<double> SpectralAmplitude::intensity() const {
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) out[k] = std::norm(values[k]);
  return out;
}

std::vector<double> SpectralAmplitude::detunings() const {
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    out[k] = grid.detuning(static_cast<int>(k));
  return out;
}

double TemporalAmplitude::norm() const { return kahan_norm(values, d_t); }

std::vector<double> TemporalAmplitude::intensity() const {
  std::vector<double> out(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) out[j] = std::norm(values[j]);
  return out;
}

// With delta_k = (k - n/2) d_nu and t_j = (j - n/2) d_t the kernel
// exp(2 pi i delta_k t_j) factors into (-1)^k (-1)^j exp(2 pi i k j / n)
// (n divisible by 4), so both transforms are plain FFTs with sign flips.
TemporalAmplitude to_time(const SpectralAmplitude& psi) {
  const int n = psi.grid.n_points;
  if (static_cast<int>(psi.values.size()) != n)
    throw DomainError("state length does not match its grid");

  std::vector<std::complex<double>> in(psi.values);
  for (int k = 1; k < n; k += 2) in[k] = -in[k];

  TemporalAmplitude phi;
  phi.grid = psi.grid;
  phi.d_t = psi.grid.d_t();
  phi.t0 = psi.grid.window_start();
  dft(in, phi.values, +1);

  const double d_nu = psi.grid.d_nu;
  for (int j = 0; j < n; ++j) {
    phi.values[j] *= (j % 2 == 0) ? d_nu : -d_nu;
  }
  return phi;
}

SpectralAmplitude to_freq(const TemporalAmplitude& phi) {
  const int n = phi.grid.n_points;
  if (static_cast<int>(phi.values.size()) != n)
    throw DomainError("state length does not match its grid");

  std::vector<std::complex<double>> in(phi.values);
  for (int j = 1; j < n; j += 2) in[j] = -in[j];

  SpectralAmplitude psi;
  psi.grid = phi.grid;
  dft(in, psi.values, -1);

  const double d_t = phi.d_t;
  for (int k = 0; k < n; ++k) {
    psi.values[k] *= (k % 2 == 0) ? d_t : -d_t;
  }
  return psi;
}

std::complex<double> g1(const SpectralAmplitude& psi, double tau) {
  const int n = psi.grid.n_points;
  const double d_nu = psi.grid.d_nu;
  if (tau == 0.0) return {psi.norm(), 0.0};

  // Incremental phasor over the uniform detuning ladder, re-anchored
  // periodically to stop rounding drift.
  const double step_angle = -2.0 * kPi * d_nu * tau;
  const std::complex<double> step{std::cos(step_angle), std::sin(step_angle)};
  std::complex<double> acc{0.0, 0.0};
  std::complex<double> ph{0.0, 0.0};
  for (int k = 0; k < n; ++k) {
    if ((k & 1023) == 0) {
      const double angle = -2.0 * kPi * psi.grid.detuning(k) * tau;
      ph = {std::cos(angle), std::sin(angle)};
    }
    acc += std::norm(psi.values[k]) * ph;
    ph *= step;
  }
  return acc * d_nu;
}

std::vector<double> g1_magnitude_samples(const SpectralAmplitude& psi) {
  const int n = psi.grid.n_points;
  SpectralAmplitude weights;
  weights.grid = psi.grid;
  weights.values.resize(n);
  for (int k = 0; k < n; ++k) weights.values[k] = std::norm(psi.values[k]);
  const TemporalAmplitude corr = to_time(weights);
  // Positive lags live in the upper half of the symmetric window.
  std::vector<double> out(n / 2);
  for (int j = 0; j < n / 2; ++j) out[j] = std::abs(corr.values[n / 2 + j]);
  return out;
}

HwhmResult hwhm(const std::vector<double>& profile, double axis_step) {
  const int n = static_cast<int>(profile.size());
  if (n < 3) throw DomainError("profile too short for a width estimate");
  if (!(axis_step > 0.0)) throw DomainError("axis step must be positive");

  int peak = 0;
  for (int i = 1; i < n; ++i)
    if (profile[i] > profile[peak]) peak = i;
  if (peak == 0 || peak == n - 1)
    throw DomainError("width not resolvable: maximum on axis edge");

  const double half = 0.5 * profile[peak];

  const auto cross = [&](int from, int dir) -> double {
    for (int i = from; i + dir >= 0 && i + dir < n; i += dir) {
      const double a = profile[i];
      const double b = profile[i + dir];
      if (a >= half && b < half) {
        const double frac = (a - half) / (a - b);
        return (i + dir * frac) * axis_step;
      }
    }
    throw DomainError("width not resolvable: no half-maximum crossing");
  };

  const double right = cross(peak, +1);
  const double left = cross(peak, -1);

  HwhmResult result;
  result.value = 0.5 * (right - left);
  result.outermost = result.value;

  // Disjoint regions above half max: flag and report the outermost
  // crossings alongside the primary ones.
  for (int i = 0; i < n; ++i) {
    const double x = i * axis_step;
    if (profile[i] > half && (x < left || x > right)) {
      result.multimodal = true;
      break;
    }
  }
  if (result.multimodal) {
    double outer_left = left, outer_right = right;
    int lo = 0;
    while (profile[lo] < half) ++lo;
    int hi = n - 1;
    while (profile[hi] < half) --hi;
    if (lo > 0) {
      const double frac = (half - profile[lo - 1]) / (profile[lo] - profile[lo - 1]);
      outer_left = (lo - 1 + frac) * axis_step;
    }
    if (hi < n - 1) {
      const double frac = (profile[hi] - half) / (profile[hi] - profile[hi + 1]);
      outer_right = (hi + frac) * axis_step;
    }
    result.outermost = 0.5 * (outer_right - outer_left);
  }
  return result;
}

double coherence_time(const SpectralAmplitude& psi) {
  const double inv_e = std::exp(-1.0);
  const double d_t = psi.grid.d_t();
  const std::vector<double> samples = g1_magnitude_samples(psi);

  // Bracket the first crossing on the sampled lags.
  int hit = -1;
  for (std::size_t j = 1; j < samples.size(); ++j) {
    if (samples[j] < inv_e) {
      hit = static_cast<int>(j);
      break;
    }
  }
  if (hit < 0) throw CoherenceWindowError();

  double lo = (hit - 1) * d_t;
  double hi = hit * d_t;
  const double target_rel = 1e-4;
  while ((hi - lo) > target_rel * hi) {
    const double mid = 0.5 * (lo + hi);
    if (std::abs(g1(psi, mid)) >= inv_e)
      lo = mid;
    else
      hi = mid;
  }
  return 0.25 * (lo + hi);  // tau_e / 2
}

double coherence_length(double t_c, const PhysicalConstants& constants) {
  if (t_c < 0.0) throw DomainError("coherence time must be nonnegative");
  return constants.c * t_c;
}

void normalize(SpectralAmplitude& psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw DomainError("cannot normalize a zero state");
  if (std::abs(n - 1.0) <= 1e-12) return;
  const double scale = 1.0 / std::sqrt(n);
  for (auto& z : psi.values) z *= scale;
}

}  // namespace gedanken
