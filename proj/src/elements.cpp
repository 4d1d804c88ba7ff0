#include "gedanken/elements.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gedanken/errors.hpp"

namespace gedanken {

namespace {

constexpr double kEmptyChannelThreshold = 1e-12;
constexpr double kOverflowMassLimit = 1e-6;
constexpr double kOverflowWindowFraction = 0.05;

}  // namespace

SpectrometerSpec make_comb_spectrometer(int n_channels, double spacing_hz,
                                        double channel_hwhm_hz, ChannelShape shape) {
  if (n_channels < 1) throw DomainError("spectrometer needs at least one channel");
  if (n_channels > 1 && !(spacing_hz > 0.0))
    throw DomainError("channel spacing must be positive");
  SpectrometerSpec spec;
  spec.channel_hwhm_hz = channel_hwhm_hz;
  spec.shape = shape;
  spec.centers_hz.resize(n_channels);
  const double mid = 0.5 * (n_channels - 1);
  for (int k = 0; k < n_channels; ++k)
    spec.centers_hz[k] = (k - mid) * spacing_hz;
  return spec;
}

namespace {

int nearest_center(const std::vector<double>& c, double delta_hz) {
  const auto it = std::lower_bound(c.begin(), c.end(), delta_hz);
  if (it == c.begin()) return 0;
  if (it == c.end()) return static_cast<int>(c.size()) - 1;
  const int hi = static_cast<int>(it - c.begin());
  return (delta_hz - c[hi - 1] <= c[hi] - delta_hz) ? hi - 1 : hi;
}

}  // namespace

double channel_amplitude(const SpectrometerSpec& spec, int k, double delta_hz) {
  const int n = spec.n_channels();
  if (k < 0 || k >= n) throw DomainError("channel index out of range");
  if (n == 1) return 1.0;

  const auto& c = spec.centers_hz;
  if (spec.shape == ChannelShape::rectangular) {
    // Contiguous cells with edges midway between centers; outer cells are
    // half-open to the band edges.
    const double left = (k == 0) ? -std::numeric_limits<double>::infinity()
                                 : 0.5 * (c[k - 1] + c[k]);
    const double right = (k == n - 1) ? std::numeric_limits<double>::infinity()
                                      : 0.5 * (c[k] + c[k + 1]);
    return (delta_hz >= left && delta_hz < right) ? 1.0 : 0.0;
  }

  // Gaussian partition, evaluated relative to the nearest center so the
  // ratio stays finite far outside the comb where every raw response
  // underflows.  Responses beyond e^-60 of the winner are dropped from both
  // numerator and denominator, which keeps the partition sum exactly 1.
  const double w = spec.channel_hwhm_hz;
  if (!(w > 0.0)) throw DomainError("gaussian channels need a positive width");
  const double ln2 = std::log(2.0);
  const auto exponent = [&](int j) {
    const double x = (delta_hz - c[j]) / w;
    return ln2 * x * x;
  };

  const int nearest = nearest_center(c, delta_hz);
  const double e_near = exponent(nearest);
  const double e_k = exponent(k);
  if (e_k - e_near > 60.0) return 0.0;

  double denom = std::exp(0.0);  // the nearest channel itself
  for (int j = nearest - 1; j >= 0; --j) {
    const double e_j = exponent(j);
    if (e_j - e_near > 60.0) break;  // centers sorted: further only grows
    denom += std::exp(e_near - e_j);
  }
  for (int j = nearest + 1; j < n; ++j) {
    const double e_j = exponent(j);
    if (e_j - e_near > 60.0) break;
    denom += std::exp(e_near - e_j);
  }
  return std::sqrt(std::exp(e_near - e_k) / denom);
}

double band_amplitude(const BandFilterSpec& spec, double delta_hz) {
  const double a = std::abs(delta_hz);
  if (a <= spec.flat_halfwidth_hz) return 1.0;
  if (a >= spec.stop_halfwidth_hz) return 0.0;
  const double frac = (a - spec.flat_halfwidth_hz) /
                      (spec.stop_halfwidth_hz - spec.flat_halfwidth_hz);
  return std::cos(0.5 * kPi * frac);
}

ConditionalState apply_filter(const SpectralAmplitude& psi,
                              const std::vector<std::complex<double>>& transmission) {
  const int n = psi.grid.n_points;
  if (static_cast<int>(transmission.size()) != n)
    throw DomainError("transmission length does not match the grid");

  ConditionalState out;
  out.state.grid = psi.grid;
  out.state.values.resize(n);
  for (int k = 0; k < n; ++k) {
    if (std::abs(transmission[k]) > 1.0 + 1e-12)
      throw DomainError("transmission exceeds 1 (lossless bound violated)");
    out.state.values[k] = transmission[k] * psi.values[k];
  }
  out.probability = out.state.norm();
  if (out.probability < kEmptyChannelThreshold) {
    out.state.values.clear();
    throw DomainError("empty channel: transmitted probability below 1e-12");
  }
  normalize(out.state);
  return out;
}

ConditionalState apply_filter(const SpectralAmplitude& psi,
                              const std::function<std::complex<double>(double)>& transmission) {
  const int n = psi.grid.n_points;
  std::vector<std::complex<double>> t(n);
  for (int k = 0; k < n; ++k) t[k] = transmission(psi.grid.detuning(k));
  return apply_filter(psi, t);
}

std::vector<ConditionalState> spectrometer_project(const SpectralAmplitude& psi,
                                                   const SpectrometerSpec& spec) {
  const int n = psi.grid.n_points;
  const int channels = spec.n_channels();
  std::vector<ConditionalState> out(channels);
  for (int k = 0; k < channels; ++k) {
    auto& cond = out[k];
    cond.state.grid = psi.grid;
    cond.state.values.resize(n);
    for (int i = 0; i < n; ++i) {
      const double t = channel_amplitude(spec, k, psi.grid.detuning(i));
      cond.state.values[i] = t * psi.values[i];
    }
    cond.probability = cond.state.norm();
    if (cond.probability < kEmptyChannelThreshold) {
      cond.state.values.clear();  // empty channel, no conditional state
    } else {
      normalize(cond.state);
    }
  }
  return out;
}

SpectralAmplitude apply_fiber(const SpectralAmplitude& psi, const FiberSpec& fiber) {
  const int n = psi.grid.n_points;
  SpectralAmplitude out;
  out.grid = psi.grid;
  out.values.resize(n);
  for (int k = 0; k < n; ++k) {
    const double delta = psi.grid.detuning(k);
    const double phase =
        -2.0 * kPi * (fiber.t0_s * delta + 0.5 * fiber.dispersion_s_per_hz * delta * delta);
    out.values[k] = psi.values[k] * std::complex<double>(std::cos(phase), std::sin(phase));
  }

  // Aliasing guard: intensity reaching the final 5% of the window is about
  // to wrap around and corrupt arrival times.
  const TemporalAmplitude phi = to_time(out);
  const int guard_start = static_cast<int>(std::ceil(n * (1.0 - kOverflowWindowFraction)));
  double guard_mass = 0.0;
  for (int j = guard_start; j < n; ++j) guard_mass += std::norm(phi.values[j]);
  guard_mass *= phi.d_t;
  const double total = phi.norm();
  if (guard_mass > kOverflowMassLimit * total)
    throw WindowOverflowError("dispersed intensity reaches the end of the time window");
  return out;
}

double michelson_visibility(const SpectralAmplitude& psi, double tau_s) {
  return std::abs(g1(psi, tau_s));
}

double michelson_click_prob(const SpectralAmplitude& psi, const MichelsonSpec& m) {
  if (std::abs(m.tau_s) > 0.5 * psi.grid.window())
    throw DomainError("michelson delay outside the representable window");
  const std::complex<double> corr = std::conj(g1(psi, m.tau_s));
  const double carrier_phase = 2.0 * kPi * psi.grid.carrier_nu0 * m.tau_s;
  const std::complex<double> carrier{std::cos(carrier_phase), std::sin(carrier_phase)};
  const double bright = 0.5 * (1.0 + (carrier * corr).real());
  return m.port == MichelsonPort::bright ? bright : 1.0 - bright;
}

TemporalSampler::TemporalSampler(const TemporalAmplitude& phi) {
  const int n = static_cast<int>(phi.values.size());
  t0_ = phi.t0;
  d_t_ = phi.d_t;
  cdf_.resize(n);
  double acc = 0.0;
  double m1 = 0.0, m2 = 0.0;
  for (int j = 0; j < n; ++j) {
    const double mass = std::norm(phi.values[j]) * d_t_;
    const double t = phi.time(j);
    acc += mass;
    m1 += mass * t;
    m2 += mass * t * t;
    cdf_[j] = acc;
  }
  if (!(acc > 0.0)) throw DomainError("temporal intensity is zero");
  for (double& c : cdf_) c /= acc;
  m1 /= acc;
  m2 /= acc;
  mean_ = m1;
  stddev_ = std::sqrt(std::max(0.0, m2 - m1 * m1));
}

double TemporalSampler::quantile(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const int j = static_cast<int>(std::min<std::ptrdiff_t>(
      it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
  const double lo = (j == 0) ? 0.0 : cdf_[j - 1];
  const double mass = cdf_[j] - lo;
  const double frac = mass > 0.0 ? (u - lo) / mass : 0.5;
  // Bin j is centered on t0 + j*d_t; spread the draw uniformly across it.
  return t0_ + (j + frac - 0.5) * d_t_;
}

double detect(const TemporalAmplitude& phi, const DetectorSpec& det, TrialRng& rng) {
  if (std::abs(phi.norm() - 1.0) > 1e-6)
    throw DomainError("detect requires a normalized envelope");
  const TemporalSampler sampler(phi);
  double t = sampler.sample(rng);
  if (det.jitter_rms_s > 0.0) t += rng.gaussian(det.jitter_rms_s);
  return t;
}

DiagonalOp fiber_operator(const FiberSpec& fiber, const FrequencyGrid& grid) {
  DiagonalOp op{grid, {}};
  op.factors.resize(grid.n_points);
  for (int k = 0; k < grid.n_points; ++k) {
    const double delta = grid.detuning(k);
    const double phase =
        -2.0 * kPi * (fiber.t0_s * delta + 0.5 * fiber.dispersion_s_per_hz * delta * delta);
    op.factors[k] = {std::cos(phase), std::sin(phase)};
  }
  return op;
}

DiagonalOp band_operator(const BandFilterSpec& band, const FrequencyGrid& grid) {
  DiagonalOp op{grid, {}};
  op.factors.resize(grid.n_points);
  for (int k = 0; k < grid.n_points; ++k)
    op.factors[k] = band_amplitude(band, grid.detuning(k));
  return op;
}

DiagonalOp channel_operator(const SpectrometerSpec& spec, int k, const FrequencyGrid& grid) {
  DiagonalOp op{grid, {}};
  op.factors.resize(grid.n_points);
  for (int i = 0; i < grid.n_points; ++i)
    op.factors[i] = channel_amplitude(spec, k, grid.detuning(i));
  return op;
}

DiagonalOp identity_operator(const FrequencyGrid& grid) {
  DiagonalOp op{grid, {}};
  op.factors.assign(grid.n_points, {1.0, 0.0});
  return op;
}

DiagonalOp compose(const std::vector<DiagonalOp>& ops) {
  if (ops.empty()) throw DomainError("compose needs at least one element");
  DiagonalOp out = ops.front();
  for (std::size_t i = 1; i < ops.size(); ++i) {
    if (!(ops[i].grid == out.grid))
      throw DomainError("composed elements live on different grids");
    for (int k = 0; k < out.grid.n_points; ++k) out.factors[k] *= ops[i].factors[k];
  }
  return out;
}

SpectralAmplitude apply_operator(const DiagonalOp& op, const SpectralAmplitude& psi) {
  if (!(op.grid == psi.grid)) throw DomainError("operator grid does not match the state");
  SpectralAmplitude out;
  out.grid = psi.grid;
  out.values.resize(psi.values.size());
  for (std::size_t k = 0; k < psi.values.size(); ++k)
    out.values[k] = op.factors[k] * psi.values[k];
  return out;
}

}  // namespace gedanken
