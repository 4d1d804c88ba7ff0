#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gedanken/rng.hpp"
#include "gedanken/spectral.hpp"

namespace gedanken {

enum class ChannelShape { gaussian_partition, rectangular };

// Lossless N-channel spectrometer.  Channel intensity responses form a
// partition of unity at every detuning: the default uses Gaussian raw
// responses R_k(delta) = exp(-ln2 ((delta - c_k) / w)^2) normalized as
// |T_k|^2 = R_k / sum_j R_j; rectangular mode uses exact contiguous cells
// with edges midway between centers.  The outermost channels extend to the
// grid edges in both modes, so every photon lands somewhere.
struct SpectrometerSpec {
  std::vector<double> centers_hz;  // strictly increasing detunings
  double channel_hwhm_hz = 0.0;
  ChannelShape shape = ChannelShape::gaussian_partition;

  int n_channels() const { return static_cast<int>(centers_hz.size()); }
};

// Symmetric comb of n channels spaced `spacing` about zero detuning.
SpectrometerSpec make_comb_spectrometer(int n_channels, double spacing_hz,
                                        double channel_hwhm_hz,
                                        ChannelShape shape = ChannelShape::gaussian_partition);

// Amplitude transmission of channel k at a (continuous) detuning.
double channel_amplitude(const SpectrometerSpec& spec, int k, double delta_hz);

// Lossless dispersive fiber: group delay T0 + D * delta, i.e. spectral phase
// exp(-i 2 pi (T0 delta + D delta^2 / 2)).
struct FiberSpec {
  double t0_s = 0.0;
  double dispersion_s_per_hz = 0.0;
};

enum class MichelsonPort { bright, dark };

// Balanced lossless Michelson with one arm delayed by tau.
struct MichelsonSpec {
  double tau_s = 0.0;
  MichelsonPort port = MichelsonPort::bright;
};

struct DetectorSpec {
  double jitter_rms_s = 0.0;
  double quantum_efficiency = 1.0;  // ideal detector, fixed
};

// Band-acceptance filter: flat unit transmission out to +-flat_halfwidth,
// cosine amplitude taper to zero at +-stop_halfwidth.  Models the finite
// acceptance band of a spectrometer assembly; photons outside it are
// rejected (the one deliberately lossy element).
struct BandFilterSpec {
  double flat_halfwidth_hz = 0.0;
  double stop_halfwidth_hz = 0.0;
};

double band_amplitude(const BandFilterSpec& spec, double delta_hz);

// One detection event.
struct ClickRecord {
  std::uint64_t trial = 0;
  int channel = -1;       // spectrometer channel, or -1 when not applicable
  std::string port;       // michelson port tag when applicable
  double t_click_s = 0.0;
};

struct ConditionalState {
  double probability = 0.0;
  SpectralAmplitude state;  // normalized
};

// Measurement-conditioned filtering: p = ||T psi||^2, psi_cond = T psi / sqrt(p).
// T must satisfy |T| <= 1 everywhere; channels with p < 1e-12 are reported
// as empty.
ConditionalState apply_filter(const SpectralAmplitude& psi,
                              const std::vector<std::complex<double>>& transmission);
ConditionalState apply_filter(const SpectralAmplitude& psi,
                              const std::function<std::complex<double>(double)>& transmission);

// All channel projections of a lossless spectrometer; probabilities sum to 1
// within 1e-9.  Empty channels keep probability ~0 and carry no state.
std::vector<ConditionalState> spectrometer_project(const SpectralAmplitude& psi,
                                                   const SpectrometerSpec& spec);

// Applies the fiber's spectral phase.  Norm is preserved within 1e-12.
// Guard: if more than 1e-6 of the output temporal intensity lies in the
// final 5% of the window, the result would wrap around and a
// WindowOverflowError is thrown instead.
SpectralAmplitude apply_fiber(const SpectralAmplitude& psi, const FiberSpec& fiber);

// Click probability at the chosen port:
// bright = (1 + Re[exp(i 2 pi nu0 tau) conj(g1(tau))]) / 2, dark = 1 - bright.
double michelson_click_prob(const SpectralAmplitude& psi, const MichelsonSpec& m);

// Fringe visibility envelope |g1(tau)|, exposed separately from the
// carrier-phase fringe.
double michelson_visibility(const SpectralAmplitude& psi, double tau_s);

// Inverse-CDF sampler over a temporal intensity, linear inside bins.
class TemporalSampler {
 public:
  explicit TemporalSampler(const TemporalAmplitude& phi);
  double quantile(double u) const;   // u in [0, 1)
  double sample(TrialRng& rng) const { return quantile(rng.uniform()); }
  double mean() const { return mean_; }
  double stddev() const { return stddev_; }

 private:
  std::vector<double> cdf_;  // cumulative mass at bin right edges
  double t0_ = 0.0;
  double d_t_ = 0.0;
  double mean_ = 0.0;
  double stddev_ = 0.0;
};

// Detection time drawn from |phi|^2 (plus optional Gaussian jitter).
double detect(const TemporalAmplitude& phi, const DetectorSpec& det, TrialRng& rng);

// Pointwise diagonal operator in the detuning domain.
struct DiagonalOp {
  FrequencyGrid grid;
  std::vector<std::complex<double>> factors;
};

DiagonalOp fiber_operator(const FiberSpec& fiber, const FrequencyGrid& grid);
DiagonalOp band_operator(const BandFilterSpec& band, const FrequencyGrid& grid);
DiagonalOp channel_operator(const SpectrometerSpec& spec, int k, const FrequencyGrid& grid);
DiagonalOp identity_operator(const FrequencyGrid& grid);

// Pointwise product of frequency-diagonal elements, in the order given.
// Diagonal operators commute, so any permutation agrees within 1e-12.
DiagonalOp compose(const std::vector<DiagonalOp>& ops);

SpectralAmplitude apply_operator(const DiagonalOp& op, const SpectralAmplitude& psi);

}  // namespace gedanken
