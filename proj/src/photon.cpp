#include "gedanken/photon.hpp"

#include <cmath>

#include "gedanken/errors.hpp"

namespace gedanken {

std::string to_string(OntologyKind kind) {
  switch (kind) {
    case OntologyKind::quantum: return "quantum";
    case OntologyKind::hidden_variable: return "hv";
    case OntologyKind::coherence_transformer: return "transformer";
  }
  return "?";
}

std::string to_string(LineShape shape) {
  return shape == LineShape::lorentzian ? "lorentzian" : "gaussian";
}

QuantumPhoton make_quantum_photon(const SourceSpec& src, const FrequencyGrid& grid) {
  if (!(src.tau_r_s > 0.0)) throw DomainError("source lifetime must be positive");
  if (!(src.nu0_hz > 0.0)) throw DomainError("source carrier must be positive");
  if (grid.carrier_nu0 != src.nu0_hz)
    throw DomainError("grid carrier does not match the source");

  const double gamma = src.gamma_hz();
  if (grid.span() < 32.0 * gamma)
    throw DomainError("grid too narrow: span below 32 source linewidths");

  const int n = grid.n_points;
  // Bin-edge bounds of the represented band.
  const double lo = grid.detuning(0) - 0.5 * grid.d_nu;
  const double hi = grid.detuning(n - 1) + 0.5 * grid.d_nu;

  SpectralAmplitude psi;
  psi.grid = grid;
  psi.values.resize(n);

  double tail = 0.0;
  if (src.line_shape == LineShape::lorentzian) {
    tail = 1.0 - (std::atan(hi / gamma) - std::atan(lo / gamma)) / kPi;
    const double amp = std::sqrt(gamma / kPi);
    for (int k = 0; k < n; ++k) {
      const double delta = grid.detuning(k);
      psi.values[k] = amp / std::complex<double>(gamma, delta);
    }
  } else {
    // Intensity HWHM equal to gamma.
    const double sigma = gamma / std::sqrt(2.0 * std::log(2.0));
    tail = 0.5 * (std::erfc(hi / (sigma * std::sqrt(2.0))) +
                  std::erfc(-lo / (sigma * std::sqrt(2.0))));
    const double amp = std::pow(2.0 * kPi * sigma * sigma, -0.25);
    for (int k = 0; k < n; ++k) {
      const double delta = grid.detuning(k);
      psi.values[k] = amp * std::exp(-delta * delta / (4.0 * sigma * sigma));
    }
  }

  if (tail >= 1e-4)
    throw DomainError("grid too narrow: truncated tail mass >= 1e-4");

  const double norm = psi.norm();
  const double scale = 1.0 / std::sqrt(norm);
  for (auto& z : psi.values) z *= scale;

  return QuantumPhoton{std::move(psi), 0.0};
}

double lorentzian_quantile(double center, double hwhm, double u) {
  return center + hwhm * std::tan(kPi * (u - 0.5));
}

HVPhoton sample_hv_photon(const SourceSpec& src, TrialRng& rng) {
  HVPhoton photon;
  if (src.line_shape == LineShape::lorentzian) {
    photon.nu_definite_hz = lorentzian_quantile(src.nu0_hz, src.gamma_hz(), rng.uniform());
  } else {
    const double sigma = src.gamma_hz() / std::sqrt(2.0 * std::log(2.0));
    photon.nu_definite_hz = src.nu0_hz + rng.gaussian(sigma);
  }
  photon.t_emit_s = rng.exponential(src.tau_r_s);
  return photon;
}

double photon_energy(const SourceSpec& src, const PhysicalConstants& constants) {
  return constants.h * src.nu0_hz;
}

}  // namespace gedanken
