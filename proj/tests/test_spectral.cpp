#include "doctest.h"

#include <cmath>
#include <complex>

#include "gedanken/errors.hpp"
#include "gedanken/photon.hpp"
#include "gedanken/rng.hpp"
#include "gedanken/spectral.hpp"
#include "test_support.hpp"

using namespace gedanken;
using namespace testsupport;

TEST_CASE("make_grid: spacing, dual time step, symmetric detunings") {
  const FrequencyGrid g = make_grid(256e6, 1024, 5e14);
  CHECK(g.d_nu == doctest::Approx(0.25e6).epsilon(1e-12));
  CHECK(g.window() == doctest::Approx(4e-6).epsilon(1e-12));
  CHECK(g.d_t() == doctest::Approx(3.90625e-9).epsilon(1e-12));
  CHECK(g.detuning(512) == 0.0);
  CHECK(g.detuning(0) == doctest::Approx(-128e6));

  const FrequencyGrid g2 = make_grid(1.0, 64, 10.0);
  CHECK(g2.d_nu == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
}

TEST_CASE("make_grid: rejected inputs") {
  CHECK_THROWS_AS(make_grid(256e6, 1000, 5e14), DomainError);  // not a power of two
  CHECK_THROWS_AS(make_grid(256e6, 32, 5e14), DomainError);    // too small
  CHECK_THROWS_AS(make_grid(-1.0, 1024, 5e14), DomainError);
  CHECK_THROWS_AS(make_grid(256e6, 1024, 1e6), DomainError);   // carrier below span
}

TEST_CASE("to_freq matches the geometric-series closed form for a causal exponential") {
  const SourceSpec src;
  const FrequencyGrid grid = unit_grid(src, 1 << 12);
  const double a = 1.0 / (2.0 * src.tau_r_s);  // amplitude decay rate

  TemporalAmplitude phi;
  phi.grid = grid;
  phi.d_t = grid.d_t();
  phi.t0 = grid.window_start();
  phi.values.resize(grid.n_points);
  for (int j = 0; j < grid.n_points; ++j) {
    const double t = phi.time(j);
    phi.values[j] = t >= 0.0 ? std::exp(-a * t) : 0.0;
  }

  const SpectralAmplitude psi = to_freq(phi);
  double worst = 0.0;
  for (int k = 0; k < grid.n_points; k += 7) {
    const std::complex<double> expected = causal_exp_spectrum(a, grid, k);
    worst = std::max(worst, std::abs(psi.values[k] - expected));
  }
  CHECK(worst < 1e-9 * max_abs(psi.values));
}

TEST_CASE("to_time matches the analytic Gaussian pair pointwise at 1e-6") {
  const SourceSpec src;
  const FrequencyGrid grid = unit_grid(src, 1 << 14);
  const double sigma = 4.0 * src.gamma_hz();  // wide line, narrow packet

  SpectralAmplitude psi;
  psi.grid = grid;
  psi.values.resize(grid.n_points);
  for (int k = 0; k < grid.n_points; ++k) {
    const double d = grid.detuning(k);
    psi.values[k] = std::exp(-d * d / (4.0 * sigma * sigma));
  }

  const TemporalAmplitude phi = to_time(psi);
  const double peak = max_abs(phi.values);
  double worst = 0.0;
  for (int j = 0; j < grid.n_points; ++j) {
    const double t = phi.time(j);
    const double expected = std::sqrt(4.0 * kPi * sigma * sigma) *
                            std::exp(-4.0 * kPi * kPi * sigma * sigma * t * t);
    worst = std::max(worst, std::abs(std::abs(phi.values[j]) - expected));
  }
  CHECK(worst < 1e-6 * peak);
}

TEST_CASE("to_time: single-bin spike gives a flat envelope") {
  const FrequencyGrid grid = make_grid(64e6, 256, 5e14);
  SpectralAmplitude psi;
  psi.grid = grid;
  psi.values.assign(grid.n_points, 0.0);
  psi.values[grid.n_points / 2] = 1.0;

  const TemporalAmplitude phi = to_time(psi);
  double lo = 1e300, hi = 0.0;
  for (const auto& z : phi.values) {
    lo = std::min(lo, std::abs(z));
    hi = std::max(hi, std::abs(z));
  }
  CHECK(hi - lo < 1e-12 * hi);
}

TEST_CASE("to_time: linear spectral phase shifts the envelope by exactly T0") {
  const SourceSpec src;
  const QuantumPhoton photon = make_quantum_photon(src, unit_grid(src, 1 << 12));
  const SpectralAmplitude& psi = photon.state;
  const FrequencyGrid& grid = psi.grid;

  const int shift_bins = 37;
  const double t0 = shift_bins * grid.d_t();
  SpectralAmplitude shifted = psi;
  for (int k = 0; k < grid.n_points; ++k) {
    const double phase = -2.0 * kPi * grid.detuning(k) * t0;
    shifted.values[k] *= std::complex<double>(std::cos(phase), std::sin(phase));
  }

  const auto peak_bin = [](const TemporalAmplitude& phi) {
    int best = 0;
    for (int j = 1; j < static_cast<int>(phi.values.size()); ++j)
      if (std::norm(phi.values[j]) > std::norm(phi.values[best])) best = j;
    return best;
  };
  CHECK(peak_bin(to_time(shifted)) - peak_bin(to_time(psi)) == shift_bins);
}

TEST_CASE("Parseval and round-trip identities hold at 1e-9") {
  const SourceSpec src;
  const FrequencyGrid grid = unit_grid(src, 1 << 12);

  SUBCASE("random smooth state") {
    TrialRng rng(99, 1);
    SpectralAmplitude psi;
    psi.grid = grid;
    psi.values.resize(grid.n_points);
    for (int k = 0; k < grid.n_points; ++k) {
      const double d = grid.detuning(k) / (50.0 * grid.d_nu);
      const double envelope = std::exp(-0.5 * d * d);
      psi.values[k] = envelope * std::complex<double>(rng.uniform() - 0.5, rng.uniform() - 0.5);
    }
    normalize(psi);

    const TemporalAmplitude phi = to_time(psi);
    CHECK(std::abs(phi.norm() - psi.norm()) < 1e-9);

    const SpectralAmplitude back = to_freq(phi);
    double worst = 0.0;
    for (int k = 0; k < grid.n_points; ++k)
      worst = std::max(worst, std::abs(back.values[k] - psi.values[k]));
    CHECK(worst < 1e-9);
  }

  SUBCASE("source wavepacket") {
    const SpectralAmplitude psi = make_quantum_photon(src, grid).state;
    const TemporalAmplitude phi = to_time(psi);
    CHECK(std::abs(phi.norm() - 1.0) < 1e-9);
    const SpectralAmplitude back = to_freq(phi);
    double worst = 0.0;
    for (int k = 0; k < grid.n_points; ++k)
      worst = std::max(worst, std::abs(back.values[k] - psi.values[k]));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("g1: Lorentzian and Gaussian autocorrelation oracles") {
  const SourceSpec src;
  const SpectralAmplitude psi = make_quantum_photon(src, unit_grid(src)).state;

  CHECK(std::abs(g1(psi, 0.0)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(g1(psi, 2.0 * src.tau_r_s)) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-4));
  CHECK(std::abs(g1(psi, 5.0 * src.tau_r_s)) ==
        doctest::Approx(lorentzian_g1_mag(5.0 * src.tau_r_s, src.tau_r_s)).epsilon(1e-4));

  SourceSpec gauss = src;
  gauss.line_shape = LineShape::gaussian;
  const SpectralAmplitude psi_g = make_quantum_photon(gauss, unit_grid(gauss)).state;
  const double sigma = gauss.gamma_hz() / std::sqrt(2.0 * std::log(2.0));
  for (double tau : {5e-9, 20e-9, 40e-9}) {
    CHECK(std::abs(g1(psi_g, tau)) ==
          doctest::Approx(gaussian_g1_mag(tau, sigma)).epsilon(1e-4));
  }
}

TEST_CASE("g1: magnitude never exceeds one") {
  const SourceSpec src;
  const SpectralAmplitude psi = make_quantum_photon(src, unit_grid(src, 1 << 12)).state;
  TrialRng rng(7, 0);
  for (int i = 0; i < 200; ++i) {
    const double tau = (rng.uniform() - 0.5) * psi.grid.window();
    CHECK(std::abs(g1(psi, tau)) <= 1.0 + 1e-12);
  }
}

TEST_CASE("hwhm: Lorentzian, triangle, Gaussian oracles") {
  const SourceSpec src;
  const double gamma = src.gamma_hz();
  const SpectralAmplitude psi = make_quantum_photon(src, unit_grid(src)).state;
  CHECK(hwhm(psi.intensity(), psi.grid.d_nu).value == doctest::Approx(gamma).epsilon(0.005));

  // Symmetric triangle of half-base B: half max at B/2.
  std::vector<double> tri(201, 0.0);
  const double step = 0.1;
  for (int i = 0; i < 201; ++i) tri[i] = std::max(0.0, 1.0 - std::abs(i - 100) * step / 4.0);
  CHECK(hwhm(tri, step).value == doctest::Approx(2.0).epsilon(1e-9));  // B = 4 -> B/2 = 2

  SourceSpec gauss = src;
  gauss.line_shape = LineShape::gaussian;
  const SpectralAmplitude psi_g = make_quantum_photon(gauss, unit_grid(gauss)).state;
  const double sigma = gauss.gamma_hz() / std::sqrt(2.0 * std::log(2.0));
  CHECK(hwhm(psi_g.intensity(), psi_g.grid.d_nu).value ==
        doctest::Approx(sigma * std::sqrt(2.0 * std::log(2.0))).epsilon(0.005));
}

TEST_CASE("hwhm: edge maxima rejected, disjoint lobes flagged with outermost crossings") {
  std::vector<double> ramp(64);
  for (int i = 0; i < 64; ++i) ramp[i] = i;
  CHECK_THROWS_AS(hwhm(ramp, 1.0), DomainError);

  // Two separated lobes above half max.
  std::vector<double> bimodal(101, 0.0);
  for (int i = 0; i < 101; ++i) {
    const double x = i - 50.0;
    bimodal[i] = std::exp(-0.5 * (x - 20) * (x - 20) / 9.0) +
                 0.9 * std::exp(-0.5 * (x + 20) * (x + 20) / 9.0);
  }
  const HwhmResult res = hwhm(bimodal, 1.0);
  CHECK(res.multimodal);
  CHECK(res.outermost > 15.0);  // outermost crossings straddle both lobes
  CHECK(res.value < res.outermost);
}

TEST_CASE("coherence_time: calibrated so the Lorentzian source returns tau_R") {
  const SourceSpec src;
  const SpectralAmplitude psi = make_quantum_photon(src, unit_grid(src)).state;
  CHECK(coherence_time(psi) == doctest::Approx(src.tau_r_s).epsilon(0.01));

  SourceSpec gauss = src;
  gauss.line_shape = LineShape::gaussian;
  const SpectralAmplitude psi_g = make_quantum_photon(gauss, unit_grid(gauss)).state;
  const double sigma = gauss.gamma_hz() / std::sqrt(2.0 * std::log(2.0));
  CHECK(coherence_time(psi_g) ==
        doctest::Approx(1.0 / (2.0 * std::sqrt(2.0) * kPi * sigma)).epsilon(0.01));
}

TEST_CASE("coherence_time: monochromatic spike exceeds the window") {
  const FrequencyGrid grid = make_grid(64e6, 256, 5e14);
  SpectralAmplitude psi;
  psi.grid = grid;
  psi.values.assign(grid.n_points, 0.0);
  psi.values[grid.n_points / 2] = 1.0 / std::sqrt(grid.d_nu);
  CHECK_THROWS_AS(coherence_time(psi), CoherenceWindowError);
}

TEST_CASE("coherence_length: l_c = c t_c") {
  CHECK(coherence_length(10e-9) == doctest::Approx(2.99792458).epsilon(1e-12));
  CHECK(coherence_length(0.0) == 0.0);
  CHECK(coherence_length(1.0) == doctest::Approx(2.99792458e8).epsilon(1e-12));
  CHECK_THROWS_AS(coherence_length(-1.0), DomainError);
}

TEST_CASE("time-bandwidth product: bound holds, Lorentzian saturates it") {
  const SourceSpec src;
  const double bound = 1.0 / (4.0 * kPi);

  for (LineShape shape : {LineShape::lorentzian, LineShape::gaussian}) {
    SourceSpec s = src;
    s.line_shape = shape;
    const SpectralAmplitude psi = make_quantum_photon(s, unit_grid(s)).state;
    const double product =
        hwhm(psi.intensity(), psi.grid.d_nu).value * coherence_time(psi);
    CHECK(product >= bound * 0.98);
    if (shape == LineShape::lorentzian) CHECK(product == doctest::Approx(bound).epsilon(0.02));
  }
}
