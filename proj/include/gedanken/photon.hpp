#pragma once

#include <cstdint>
#include <string>

#include "gedanken/constants.hpp"
#include "gedanken/rng.hpp"
#include "gedanken/spectral.hpp"

namespace gedanken {

enum class LineShape { lorentzian, gaussian };

// Spontaneous-emission source: carrier nu0, excited-state lifetime tau_R.
// The natural line is Lorentzian with intensity HWHM
// gamma = 1 / (4 pi tau_R); a Gaussian line of the same HWHM is offered as
// a control.
struct SourceSpec {
  double nu0_hz = 5.0e14;
  double tau_r_s = 10e-9;
  LineShape line_shape = LineShape::lorentzian;

  double gamma_hz() const { return 1.0 / (4.0 * kPi * tau_r_s); }
};

enum class OntologyKind { quantum, hidden_variable, coherence_transformer };

std::string to_string(OntologyKind kind);
std::string to_string(LineShape shape);

// Wavepacket photon: a normalized spectral amplitude.  Emission epoch is the
// time origin of the grid's window.
struct QuantumPhoton {
  SpectralAmplitude state;
  double emit_time_s = 0.0;
};

// Hidden-variable photon: sharp but unobservable frequency and emission time,
// drawn from the source's ensemble laws.
struct HVPhoton {
  double nu_definite_hz = 0.0;
  double t_emit_s = 0.0;
};

// Builds the source wavepacket on the given grid.  Lorentzian:
// psi(delta) proportional to 1 / (gamma + i delta), which transforms to the
// causal envelope step(t) exp(-t / (2 tau_R)).  The analytic mass falling
// outside the grid must stay below 1e-4 before the state is renormalized;
// otherwise the grid is rejected as too narrow.
QuantumPhoton make_quantum_photon(const SourceSpec& src, const FrequencyGrid& grid);

// Inverse-CDF sampling of the hidden-variable ensemble:
// nu = nu0 + gamma tan(pi (u - 1/2)), t_emit ~ Exponential(mean tau_R).
HVPhoton sample_hv_photon(const SourceSpec& src, TrialRng& rng);

// Quantile helpers shared by sample_hv_photon and its tests.
double lorentzian_quantile(double center, double hwhm, double u);

// E = h * nu0.
double photon_energy(const SourceSpec& src, const PhysicalConstants& constants = kConstants);

}  // namespace gedanken
