#include "gedanken/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "gedanken/errors.hpp"

namespace gedanken {

namespace {

constexpr double kGuardFraction = 0.05;  // wraparound guard share of the window

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

template <typename Fn>
void parallel_for_trials(std::uint64_t trials, int workers, Fn&& fn) {
  workers = resolve_workers(workers);
  if (workers <= 1 || trials < 256) {
    for (std::uint64_t i = 0; i < trials; ++i) fn(i);
    return;
  }
  const std::uint64_t chunk = (trials + workers - 1) / workers;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    const std::uint64_t lo = w * chunk;
    const std::uint64_t hi = std::min<std::uint64_t>(trials, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn]() {
      for (std::uint64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

double mean_detuning(const SpectralAmplitude& psi) {
  double acc = 0.0;
  for (std::size_t k = 0; k < psi.values.size(); ++k)
    acc += std::norm(psi.values[k]) * psi.grid.detuning(static_cast<int>(k));
  return acc * psi.grid.d_nu;
}

double var_detuning(const SpectralAmplitude& psi, double mean) {
  double acc = 0.0;
  for (std::size_t k = 0; k < psi.values.size(); ++k) {
    const double d = psi.grid.detuning(static_cast<int>(k)) - mean;
    acc += std::norm(psi.values[k]) * d * d;
  }
  return acc * psi.grid.d_nu;
}

// Channel intensity masses of a spectrometer applied to a state, with an
// O(n) fast path for rectangular combs.
std::vector<double> channel_masses(const SpectralAmplitude& psi, const SpectrometerSpec& spec) {
  const int n = psi.grid.n_points;
  const int channels = spec.n_channels();
  std::vector<double> mass(channels, 0.0);
  if (spec.shape == ChannelShape::rectangular && channels > 1) {
    const double c0 = spec.centers_hz.front();
    const double s = spec.centers_hz[1] - spec.centers_hz[0];
    for (int i = 0; i < n; ++i) {
      const double delta = psi.grid.detuning(i);
      int k = static_cast<int>(std::floor((delta - (c0 - 0.5 * s)) / s));
      k = std::clamp(k, 0, channels - 1);
      mass[k] += std::norm(psi.values[i]);
    }
  } else {
    for (int k = 0; k < channels; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const double t = channel_amplitude(spec, k, psi.grid.detuning(i));
        if (t > 0.0) acc += t * t * std::norm(psi.values[i]);
      }
      mass[k] = acc;
    }
  }
  for (double& m : mass) m *= psi.grid.d_nu;
  return mass;
}

int draw_from_cdf(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(
      it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

}  // namespace

std::string to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::source_analysis: return "1";
    case ExperimentId::channel_coherence: return "2";
    case ExperimentId::fiber_arrival: return "3";
    case ExperimentId::delayed_choice: return "delayed";
  }
  return "?";
}

std::string to_string(RunMode mode) {
  return mode == RunMode::expectation ? "expectation" : "monte_carlo";
}

FrequencyGrid ExperimentConfig::grid() const {
  return make_grid(grid_span_hz, grid_points, source.nu0_hz);
}

ExperimentConfig default_config(ExperimentId id) {
  ExperimentConfig cfg;
  cfg.id = id;
  cfg.source = SourceSpec{};  // nu0 = 5e14 Hz, tau_R = 10 ns, Lorentzian
  const double gamma = cfg.source.gamma_hz();

  switch (id) {
    case ExperimentId::source_analysis: {
      // Wide span keeps the truncated Lorentzian tail below 1e-4.
      cfg.grid_span_hz = 16384.0 * gamma;
      cfg.grid_points = 1 << 18;
      cfg.fine_analyzer = make_comb_spectrometer(129, gamma / 8.0, gamma / 16.0,
                                                 ChannelShape::rectangular);
      break;
    }
    case ExperimentId::channel_coherence: {
      cfg.grid_span_hz = 16384.0 * gamma;
      cfg.grid_points = 1 << 20;
      // Nine partition channels of HWHM gamma/8 spaced two widths apart,
      // inside an acceptance band clearing the outermost cell.
      const double w = gamma / 8.0;
      cfg.elements.push_back(BandFilterSpec{gamma + 2.0 * w, gamma + 4.0 * w});
      cfg.elements.push_back(make_comb_spectrometer(9, 2.0 * w, w));
      cfg.fine_analyzer = make_comb_spectrometer(97, gamma / 32.0, gamma / 64.0,
                                                 ChannelShape::rectangular);
      break;
    }
    case ExperimentId::fiber_arrival:
    case ExperimentId::delayed_choice: {
      cfg.grid_points = 1 << 20;
      cfg.grid_span_hz = cfg.grid_points * 125e3;  // 131.072 GHz, 8 us window
      cfg.elements.push_back(BandFilterSpec{18e6, 20e6});
      cfg.elements.push_back(FiberSpec{0.0, 5e-14});
      cfg.elements.push_back(make_comb_spectrometer(9, 4e6, 1e6));
      cfg.fine_analyzer = make_comb_spectrometer(81, 0.5e6, 0.25e6,
                                                 ChannelShape::rectangular);
      break;
    }
  }
  return cfg;
}

void validate_chain(const ExperimentConfig& cfg) {
  const FrequencyGrid grid = cfg.grid();  // throws on a bad grid
  if (cfg.trials < 1) throw DomainError("trial count must be at least 1");
  if (cfg.detector.quantum_efficiency != 1.0)
    throw DomainError("detector efficiency is fixed at 1");
  if (cfg.detector.jitter_rms_s < 0.0) throw DomainError("negative detector jitter");

  int spectrometers = 0;
  double support = 0.5 * grid.span();  // halfwidth of the band carrying intensity
  double t0_total = 0.0;
  double d_total = 0.0;
  for (const auto& el : cfg.elements) {
    if (const auto* band = std::get_if<BandFilterSpec>(&el)) {
      if (!(band->stop_halfwidth_hz > band->flat_halfwidth_hz) ||
          band->flat_halfwidth_hz < 0.0)
        throw DomainError("band filter needs 0 <= flat < stop halfwidth");
      if (band->stop_halfwidth_hz > 0.5 * grid.span())
        throw DomainError("band filter wider than the grid");
      support = std::min(support, band->stop_halfwidth_hz);
    } else if (const auto* fiber = std::get_if<FiberSpec>(&el)) {
      t0_total += fiber->t0_s;
      d_total += fiber->dispersion_s_per_hz;
    } else if (const auto* spec = std::get_if<SpectrometerSpec>(&el)) {
      ++spectrometers;
      if (spec->n_channels() < 1) throw DomainError("spectrometer without channels");
      for (int k = 1; k < spec->n_channels(); ++k)
        if (!(spec->centers_hz[k] > spec->centers_hz[k - 1]))
          throw DomainError("spectrometer channels must be ordered");
      if (std::abs(spec->centers_hz.front()) > 0.5 * grid.span() ||
          std::abs(spec->centers_hz.back()) > 0.5 * grid.span())
        throw DomainError("spectrometer channels outside the grid");
    }
  }
  if (spectrometers > 1)
    throw DomainError("transport chain supports at most one spectrometer");

  // Group delays over the occupied band must stay inside the window, off the
  // wraparound guard region, with an 8 tau_R envelope margin.
  const double margin = 8.0 * cfg.source.tau_r_s;
  const double half_window = 0.5 * grid.window();
  const double guard_edge = half_window - kGuardFraction * grid.window();
  const double d_lo = t0_total - std::abs(d_total) * support;
  const double d_hi = t0_total + std::abs(d_total) * support;
  if (d_hi + margin > guard_edge || d_lo - margin < -half_window)
    throw WindowOverflowError("fiber group delay does not fit the temporal window");

  for (double tau : cfg.michelson_delays_s)
    if (std::abs(tau) > half_window)
      throw DomainError("michelson delay outside the representable window");
}

std::vector<double> fringe_max_delays(double nu0_hz, double tau_max_s, int points) {
  std::vector<double> out;
  out.reserve(points);
  for (int i = 0; i < points; ++i) {
    const double nominal = tau_max_s * i / (points - 1);
    out.push_back(std::round(nominal * nu0_hz) / nu0_hz);
  }
  return out;
}

// ---------------------------------------------------------------------------
// TransportModel

struct TransportModel::Impl {
  ExperimentConfig cfg;
  FrequencyGrid grid;
  SpectralAmplitude psi_source;
  SpectralAmplitude psi_banded;
  double band_prob = 1.0;

  std::optional<SpectrometerSpec> spectrometer;
  std::vector<BandFilterSpec> bands;
  std::vector<FiberSpec> fibers;        // whole chain
  std::vector<FiberSpec> fibers_after;  // after the spectrometer (transformer)

  struct ChannelInfo {
    double p = 0.0;
    double cal_center = 0.0;  // conditional mean detuning
    double delta_var = 0.0;
    double dnu_prime = 0.0;
    bool dnu_multimodal = false;
    double tc_prime = 0.0;
    bool empty = false;
  };
  std::vector<ChannelInfo> info;
  std::vector<double> p_cdf;

  // quantum ontology
  std::vector<std::unique_ptr<TemporalSampler>> q_sampler;
  // transformer ontology
  std::unique_ptr<TemporalSampler> inherit_sampler;
  std::vector<std::unique_ptr<TemporalSampler>> t_final_sampler;
  // no-spectrometer chains
  std::unique_ptr<TemporalSampler> plain_sampler;

  bool has_spectrometer() const { return spectrometer.has_value(); }
};

TransportModel::TransportModel(const ExperimentConfig& cfg) : impl_(new Impl) {
  Impl& im = *impl_;
  im.cfg = cfg;
  im.grid = cfg.grid();
  im.psi_source = make_quantum_photon(cfg.source, im.grid).state;

  std::size_t spec_pos = cfg.elements.size();
  for (std::size_t i = 0; i < cfg.elements.size(); ++i) {
    if (const auto* band = std::get_if<BandFilterSpec>(&cfg.elements[i])) {
      im.bands.push_back(*band);
    } else if (const auto* fiber = std::get_if<FiberSpec>(&cfg.elements[i])) {
      im.fibers.push_back(*fiber);
      if (spec_pos < i) im.fibers_after.push_back(*fiber);
    } else if (const auto* spec = std::get_if<SpectrometerSpec>(&cfg.elements[i])) {
      if (im.spectrometer) throw DomainError("transport chain supports at most one spectrometer");
      im.spectrometer = *spec;
      spec_pos = i;
    }
  }

  // Diagonal elements commute, so the conditional pipeline composes them in
  // canonical order (bands, then fibers): permuting a chain cannot change
  // any downstream number, which is the filter-placement statement made
  // operational.
  std::vector<DiagonalOp> diagonal_ops;
  for (const auto& b : im.bands) diagonal_ops.push_back(band_operator(b, im.grid));
  for (const auto& f : im.fibers) diagonal_ops.push_back(fiber_operator(f, im.grid));

  if (!im.bands.empty()) {
    std::vector<DiagonalOp> band_ops(diagonal_ops.begin(),
                                     diagonal_ops.begin() + im.bands.size());
    SpectralAmplitude banded = apply_operator(compose(band_ops), im.psi_source);
    im.band_prob = banded.norm();
    if (im.band_prob < 1e-12) throw DomainError("acceptance band rejects the whole line");
    normalize(banded);
    im.psi_banded = std::move(banded);
  } else {
    im.psi_banded = im.psi_source;
  }

  SpectralAmplitude evolved =
      diagonal_ops.empty() ? im.psi_source
                           : apply_operator(compose(diagonal_ops), im.psi_source);

  const bool quantum = cfg.ontology == OntologyKind::quantum;
  const bool transformer = cfg.ontology == OntologyKind::coherence_transformer;

  if (!im.spectrometer) {
    SpectralAmplitude full = evolved;
    normalize(full);
    im.plain_sampler = std::make_unique<TemporalSampler>(to_time(full));
    return;
  }

  const SpectrometerSpec& spec = *im.spectrometer;
  const int channels = spec.n_channels();
  im.info.resize(channels);
  if (quantum) im.q_sampler.resize(channels);

  std::vector<double> mass = channel_masses(evolved, spec);
  double total = 0.0;
  for (double m : mass) total += m;

  im.p_cdf.resize(channels);
  double acc = 0.0;
  for (int k = 0; k < channels; ++k) {
    acc += mass[k] / total;
    im.p_cdf[k] = acc;
  }
  im.p_cdf[channels - 1] = 1.0;

  for (int k = 0; k < channels; ++k) {
    auto& info = im.info[k];
    info.p = mass[k] / total;
    if (info.p < 1e-12) {
      info.empty = true;
      continue;
    }
    SpectralAmplitude cond;
    cond.grid = im.grid;
    cond.values.resize(im.grid.n_points);
    for (int i = 0; i < im.grid.n_points; ++i) {
      const double t = channel_amplitude(spec, k, im.grid.detuning(i));
      cond.values[i] = t * evolved.values[i];
    }
    normalize(cond);
    info.cal_center = mean_detuning(cond);
    info.delta_var = var_detuning(cond, info.cal_center);
    const HwhmResult width = hwhm(cond.intensity(), im.grid.d_nu);
    info.dnu_prime = width.value;
    info.dnu_multimodal = width.multimodal;
    info.tc_prime = coherence_time(cond);
    if (quantum) im.q_sampler[k] = std::make_unique<TemporalSampler>(to_time(cond));
  }

  if (transformer) {
    // State arriving at the spectrometer: everything upstream applied.
    std::vector<DiagonalOp> pre_ops;
    for (std::size_t i = 0; i < cfg.elements.size() && i < spec_pos; ++i) {
      if (const auto* band = std::get_if<BandFilterSpec>(&cfg.elements[i]))
        pre_ops.push_back(band_operator(*band, im.grid));
      else if (const auto* fiber = std::get_if<FiberSpec>(&cfg.elements[i]))
        pre_ops.push_back(fiber_operator(*fiber, im.grid));
    }
    SpectralAmplitude pre = pre_ops.empty()
                                ? im.psi_source
                                : apply_operator(compose(pre_ops), im.psi_source);
    normalize(pre);
    im.inherit_sampler = std::make_unique<TemporalSampler>(to_time(pre));

    std::optional<DiagonalOp> post_op;
    if (!im.fibers_after.empty()) {
      std::vector<DiagonalOp> post_ops;
      for (const auto& f : im.fibers_after) post_ops.push_back(fiber_operator(f, im.grid));
      post_op = compose(post_ops);
    }

    im.t_final_sampler.resize(channels);
    for (int k = 0; k < channels; ++k) {
      if (im.info[k].empty) continue;
      // Re-prepared packet: channel-filtered magnitude, propagation phase
      // discarded; only elements downstream of the spectrometer act on it.
      SpectralAmplitude flat;
      flat.grid = im.grid;
      flat.values.resize(im.grid.n_points);
      for (int i = 0; i < im.grid.n_points; ++i) {
        const double t = channel_amplitude(spec, k, im.grid.detuning(i));
        flat.values[i] = t * std::abs(pre.values[i]);
      }
      normalize(flat);
      if (post_op) flat = apply_operator(*post_op, flat);
      im.t_final_sampler[k] = std::make_unique<TemporalSampler>(to_time(flat));
    }
  }
}

TransportModel::~TransportModel() = default;

int TransportModel::n_channels() const {
  return impl_->has_spectrometer() ? impl_->spectrometer->n_channels() : 0;
}

double TransportModel::band_pass_probability() const { return impl_->band_prob; }

double TransportModel::channel_probability(int k) const { return impl_->info.at(k).p; }

double TransportModel::calibrated_center_hz(int k) const {
  return impl_->info.at(k).cal_center;
}

const SpectralAmplitude& TransportModel::source_state() const { return impl_->psi_source; }
const SpectralAmplitude& TransportModel::banded_state() const { return impl_->psi_banded; }

double TransportModel::channel_dnu_prime_hz(int k) const { return impl_->info.at(k).dnu_prime; }
double TransportModel::channel_tc_prime_s(int k) const { return impl_->info.at(k).tc_prime; }

double TransportModel::arrival_mean_s(OntologyKind ontology, int k) const {
  const Impl& im = *impl_;
  if (!im.has_spectrometer())
    return im.plain_sampler->mean();
  const auto& info = im.info.at(k);
  switch (ontology) {
    case OntologyKind::quantum:
      return im.q_sampler.at(k)->mean();
    case OntologyKind::coherence_transformer:
      return im.inherit_sampler->mean() + im.t_final_sampler.at(k)->mean();
    case OntologyKind::hidden_variable: {
      double t0 = 0.0, d = 0.0;
      for (const auto& f : im.fibers) {
        t0 += f.t0_s;
        d += f.dispersion_s_per_hz;
      }
      return im.cfg.source.tau_r_s + t0 + d * info.cal_center;
    }
  }
  return 0.0;
}

double TransportModel::arrival_std_s(OntologyKind ontology, int k) const {
  const Impl& im = *impl_;
  const double jitter2 = im.cfg.detector.jitter_rms_s * im.cfg.detector.jitter_rms_s;
  if (!im.has_spectrometer()) {
    const double s = im.plain_sampler->stddev();
    return std::sqrt(s * s + jitter2);
  }
  const auto& info = im.info.at(k);
  switch (ontology) {
    case OntologyKind::quantum: {
      const double s = im.q_sampler.at(k)->stddev();
      return std::sqrt(s * s + jitter2);
    }
    case OntologyKind::coherence_transformer: {
      const double a = im.inherit_sampler->stddev();
      const double b = im.t_final_sampler.at(k)->stddev();
      return std::sqrt(a * a + b * b + jitter2);
    }
    case OntologyKind::hidden_variable: {
      double d = 0.0;
      for (const auto& f : im.fibers) d += f.dispersion_s_per_hz;
      const double tau = im.cfg.source.tau_r_s;
      return std::sqrt(tau * tau + d * d * info.delta_var + jitter2);
    }
  }
  return 0.0;
}

ClickRecord TransportModel::sample_click(OntologyKind ontology, std::uint64_t trial,
                                         TrialRng& rng) const {
  const Impl& im = *impl_;
  if (ontology != im.cfg.ontology)
    throw DomainError("transport model was built for a different ontology");

  ClickRecord click;
  click.trial = trial;

  const double jitter = im.cfg.detector.jitter_rms_s;

  if (ontology == OntologyKind::hidden_variable) {
    // Sharp-frequency photon; acceptance-band rejection re-emits.
    double delta = 0.0;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 100000) throw DomainError("acceptance band rejects the whole line");
      if (im.cfg.source.line_shape == LineShape::lorentzian) {
        delta = lorentzian_quantile(0.0, im.cfg.source.gamma_hz(), rng.uniform());
      } else {
        const double sigma = im.cfg.source.gamma_hz() / std::sqrt(2.0 * std::log(2.0));
        delta = rng.gaussian(sigma);
      }
      if (im.bands.empty()) break;
      double t2 = 1.0;
      for (const auto& b : im.bands) {
        const double a = band_amplitude(b, delta);
        t2 *= a * a;
      }
      if (rng.uniform() < t2) break;
    }
    const double t_emit = rng.exponential(im.cfg.source.tau_r_s);

    if (im.has_spectrometer()) {
      const double u = rng.uniform();
      double acc = 0.0;
      int k = im.spectrometer->n_channels() - 1;
      for (int j = 0; j < im.spectrometer->n_channels(); ++j) {
        const double a = channel_amplitude(*im.spectrometer, j, delta);
        acc += a * a;
        if (u < acc) {
          k = j;
          break;
        }
      }
      click.channel = k;
    }

    double t = t_emit;
    for (const auto& f : im.fibers) t += f.t0_s + f.dispersion_s_per_hz * delta;
    if (jitter > 0.0) t += rng.gaussian(jitter);
    click.t_click_s = t;
    return click;
  }

  if (!im.has_spectrometer()) {
    double t = im.plain_sampler->sample(rng);
    if (jitter > 0.0) t += rng.gaussian(jitter);
    click.t_click_s = t;
    return click;
  }

  int k = draw_from_cdf(im.p_cdf, rng.uniform());
  while (im.info[k].empty && k > 0) --k;  // zero-mass channels are never hit
  click.channel = k;

  double t = 0.0;
  if (ontology == OntologyKind::quantum) {
    t = im.q_sampler.at(k)->sample(rng);
  } else {
    // Transformer: arrival inherited from the packet reaching the
    // spectrometer, plus whatever the re-prepared packet does afterwards.
    t = im.inherit_sampler->sample(rng) + im.t_final_sampler.at(k)->sample(rng);
  }
  if (jitter > 0.0) t += rng.gaussian(jitter);
  click.t_click_s = t;
  return click;
}

std::vector<ClickRecord> run_trials(const TransportModel& model, OntologyKind ontology,
                                    std::uint64_t trials, std::uint64_t seed, int workers) {
  std::vector<ClickRecord> clicks(trials);
  parallel_for_trials(trials, workers, [&](std::uint64_t trial) {
    TrialRng rng(seed, trial);
    clicks[trial] = model.sample_click(ontology, trial, rng);
  });
  return clicks;
}

// ---------------------------------------------------------------------------
// Experiment 1: source linewidth, coherence time, uncertainty product.

namespace {

SourceReport source_report_expectation(const SpectralAmplitude& psi, const SourceSpec& src,
                                       OntologyKind ontology) {
  SourceReport rep;
  rep.nu0_hat_hz = src.nu0_hz + mean_detuning(psi);
  rep.dnu_hat_hz = hwhm(psi.intensity(), psi.grid.d_nu).value;
  rep.tc_hat_s = coherence_time(psi);
  rep.lc_hat_m = coherence_length(rep.tc_hat_s);
  const HupProduct prod = hup_product(rep.dnu_hat_hz, rep.tc_hat_s);
  rep.hup_product = prod.value;
  rep.hup_pass = prod.passes;
  if (ontology == OntologyKind::hidden_variable) {
    // Each photon carries a sharp frequency: its own product is zero.
    rep.per_photon_hup_violation = !hup_product(0.0, rep.tc_hat_s).passes;
  }
  return rep;
}

std::vector<double> interior_centers(const SpectrometerSpec& spec) {
  return {spec.centers_hz.begin() + 1, spec.centers_hz.end() - 1};
}

std::vector<double> interior_counts(const std::vector<double>& counts) {
  return {counts.begin() + 1, counts.end() - 1};
}

// First 1/e crossing of an empirical visibility curve, linearly interpolated.
std::optional<double> visibility_coherence_time(const std::vector<VisibilityPoint>& curve) {
  const double inv_e = std::exp(-1.0);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].visibility < inv_e && curve[i - 1].visibility >= inv_e) {
      const double v0 = curve[i - 1].visibility;
      const double v1 = curve[i].visibility;
      const double frac = (v0 - inv_e) / (v0 - v1);
      const double tau_e = curve[i - 1].tau_s + frac * (curve[i].tau_s - curve[i - 1].tau_s);
      return 0.5 * tau_e;
    }
  }
  return std::nullopt;
}

}  // namespace

RunReport run_experiment_1(const ExperimentConfig& cfg) {
  if (!cfg.elements.empty())
    throw DomainError("experiment 1 analyses the bare source; no transport elements");
  validate_chain(cfg);
  const auto t_start = std::chrono::steady_clock::now();

  RunReport rep;
  rep.id = cfg.id;
  rep.ontology = cfg.ontology;
  rep.mode = cfg.mode;
  rep.trials = cfg.trials;
  rep.seed = cfg.seed;
  rep.rng_derivation = TrialRng::derivation();

  const FrequencyGrid grid = cfg.grid();
  const SpectralAmplitude psi = make_quantum_photon(cfg.source, grid).state;

  std::vector<double> delays = cfg.michelson_delays_s;
  if (delays.empty())
    delays = fringe_max_delays(cfg.source.nu0_hz, 6.0 * cfg.source.tau_r_s, 49);

  if (cfg.mode == RunMode::expectation) {
    rep.source = source_report_expectation(psi, cfg.source, cfg.ontology);
    rep.visibility = visibility_scan(psi, delays);
    rep.wall_seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t_start).count();
    return rep;
  }

  // Monte Carlo: spectral clicks through the analyzer comb plus a
  // Michelson scan.  Quantum photons give Bernoulli fringe clicks; the
  // hidden-variable ensemble contributes each photon's click probability at
  // every delay (the same photons are reused across the scan).
  const SpectrometerSpec& fine = cfg.fine_analyzer;
  const int n_fine = fine.n_channels();
  const std::size_t n_delays = delays.size();
  const bool hv = cfg.ontology == OntologyKind::hidden_variable;

  std::vector<double> fine_cdf;
  std::unique_ptr<TemporalSampler> arrival;
  std::vector<double> p_bright(n_delays);
  if (!hv) {
    const std::vector<double> mass = channel_masses(psi, fine);
    double total = 0.0;
    for (double m : mass) total += m;
    fine_cdf.resize(n_fine);
    double acc = 0.0;
    for (int k = 0; k < n_fine; ++k) {
      acc += mass[k] / total;
      fine_cdf[k] = acc;
    }
    fine_cdf[n_fine - 1] = 1.0;
    arrival = std::make_unique<TemporalSampler>(to_time(psi));
    for (std::size_t d = 0; d < n_delays; ++d)
      p_bright[d] = michelson_click_prob(psi, MichelsonSpec{delays[d], MichelsonPort::bright});
  }

  const std::uint64_t m = cfg.trials;
  rep.clicks.resize(m);
  std::vector<std::uint8_t> bright(hv ? 0 : m * n_delays);
  std::vector<double> hv_prob(hv ? m * n_delays : 0);

  parallel_for_trials(m, cfg.workers, [&](std::uint64_t trial) {
    TrialRng rng(cfg.seed, trial);
    ClickRecord click;
    click.trial = trial;
    if (hv) {
      const HVPhoton photon = sample_hv_photon(cfg.source, rng);
      const double delta = photon.nu_definite_hz - cfg.source.nu0_hz;
      double acc = 0.0;
      int k = n_fine - 1;
      const double u = rng.uniform();
      for (int j = 0; j < n_fine; ++j) {
        const double a = channel_amplitude(fine, j, delta);
        acc += a * a;
        if (u < acc) {
          k = j;
          break;
        }
      }
      click.channel = k;
      click.t_click_s = photon.t_emit_s;
      for (std::size_t d = 0; d < n_delays; ++d) {
        const double phase = 2.0 * kPi * photon.nu_definite_hz * delays[d];
        hv_prob[trial * n_delays + d] = 0.5 * (1.0 + std::cos(phase));
      }
    } else {
      click.channel = draw_from_cdf(fine_cdf, rng.uniform());
      click.t_click_s = arrival->sample(rng);
      for (std::size_t d = 0; d < n_delays; ++d)
        bright[trial * n_delays + d] = rng.uniform() < p_bright[d] ? 1 : 0;
    }
    if (cfg.detector.jitter_rms_s > 0.0) click.t_click_s += rng.gaussian(cfg.detector.jitter_rms_s);
    rep.clicks[trial] = click;
  });

  // Spectral histogram (edge catch-all cells collect out-of-range tails and
  // are excluded from the shape estimate).
  std::vector<double> counts(n_fine, 0.0);
  for (const auto& c : rep.clicks) counts[c.channel] += 1.0;
  const HistogramSpectrum hist = histogram_spectrum(
      interior_counts(counts), interior_centers(fine), fine.channel_hwhm_hz);

  rep.visibility.resize(n_delays);
  for (std::size_t d = 0; d < n_delays; ++d) {
    double p = 0.0;
    if (hv) {
      for (std::uint64_t i = 0; i < m; ++i) p += hv_prob[i * n_delays + d];
    } else {
      for (std::uint64_t i = 0; i < m; ++i) p += bright[i * n_delays + d];
    }
    p /= static_cast<double>(m);
    rep.visibility[d].tau_s = delays[d];
    rep.visibility[d].p_click = p;
    rep.visibility[d].visibility = std::clamp(2.0 * p - 1.0, 0.0, 1.0);
  }

  SourceReport src;
  src.insufficient_statistics = hist.insufficient_statistics || cfg.trials < 30;
  src.nu0_hat_hz = cfg.source.nu0_hz + hist.nu0_hat_offset_hz;
  src.dnu_hat_hz = hist.dnu_hat_hz;
  const auto tc = visibility_coherence_time(rep.visibility);
  if (tc) {
    src.tc_hat_s = *tc;
  } else {
    src.insufficient_statistics = true;
  }
  src.lc_hat_m = coherence_length(std::max(0.0, src.tc_hat_s));
  const HupProduct prod = hup_product(src.dnu_hat_hz, src.tc_hat_s);
  src.hup_product = prod.value;
  src.hup_pass = prod.passes;
  if (hv) src.per_photon_hup_violation = true;
  rep.source = src;
  rep.insufficient_statistics = src.insufficient_statistics;

  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Experiments 2 and 3 share the channelized pipeline.

namespace {

struct ChannelPipelineResult {
  std::vector<ChannelReport> channels;
  std::vector<ClickRecord> clicks;
};

ChannelPipelineResult run_channel_pipeline(const ExperimentConfig& cfg,
                                           const TransportModel& model,
                                           const SpectrometerSpec* spec) {
  ChannelPipelineResult out;
  const int channels = model.n_channels();
  if (channels == 0) {  // chain without a spectrometer: clicks only
    if (cfg.mode == RunMode::monte_carlo)
      out.clicks = run_trials(model, cfg.ontology, cfg.trials, cfg.seed, cfg.workers);
    return out;
  }
  out.channels.resize(channels);

  for (int k = 0; k < channels; ++k) {
    ChannelReport& ch = out.channels[k];
    ch.k = k;
    ch.center_hz = spec->centers_hz[k];
    ch.p_hat = model.channel_probability(k);
    if (ch.p_hat < 1e-12) {
      ch.empty = true;
      continue;
    }
    ch.calibrated_center_hz = model.calibrated_center_hz(k);
    ch.dnu_prime_hz = model.channel_dnu_prime_hz(k);
    ch.tc_prime_s = model.channel_tc_prime_s(k);
    const HupProduct prod = hup_product(ch.dnu_prime_hz, ch.tc_prime_s);
    ch.hup_product = prod.value;
    ch.hup_pass = prod.passes;
  }

  if (cfg.mode == RunMode::expectation) {
    for (int k = 0; k < channels; ++k) {
      ChannelReport& ch = out.channels[k];
      if (ch.empty) continue;
      ch.mean_t_s = model.arrival_mean_s(cfg.ontology, k);
      ch.std_t_s = model.arrival_std_s(cfg.ontology, k);
      const double expected = std::max(1.0, std::floor(cfg.trials * ch.p_hat));
      ch.clicks = static_cast<std::size_t>(expected);
      ch.stderr_t_s = ch.std_t_s / std::sqrt(expected);
      ch.insufficient_clicks = expected < 30;
    }
    return out;
  }

  out.clicks = run_trials(model, cfg.ontology, cfg.trials, cfg.seed, cfg.workers);
  std::vector<std::vector<double>> per_channel(channels);
  std::vector<std::size_t> hits(channels, 0);
  for (const auto& c : out.clicks) ++hits[c.channel];
  for (int k = 0; k < channels; ++k) per_channel[k].reserve(hits[k]);
  for (const auto& c : out.clicks) per_channel[c.channel].push_back(c.t_click_s);

  for (int k = 0; k < channels; ++k) {
    ChannelReport& ch = out.channels[k];
    const ChannelStats stats = channel_stats(std::move(per_channel[k]));
    ch.clicks = stats.count;
    if (ch.empty) continue;
    ch.p_hat = static_cast<double>(stats.count) / static_cast<double>(cfg.trials);
    ch.mean_t_s = stats.mean;
    ch.std_t_s = stats.sample_std;
    ch.stderr_t_s = stats.stderr_mean;
    ch.insufficient_clicks = !stats.sufficient;
  }
  return out;
}

const SpectrometerSpec* chain_spectrometer(const ExperimentConfig& cfg) {
  for (const auto& el : cfg.elements)
    if (const auto* spec = std::get_if<SpectrometerSpec>(&el)) return spec;
  return nullptr;
}

double chain_dispersion(const ExperimentConfig& cfg) {
  double d = 0.0;
  for (const auto& el : cfg.elements)
    if (const auto* fiber = std::get_if<FiberSpec>(&el)) d += fiber->dispersion_s_per_hz;
  return d;
}

}  // namespace

RunReport run_experiment_2(const ExperimentConfig& cfg) {
  if (chain_spectrometer(cfg) == nullptr)
    throw DomainError("experiment 2 needs a spectrometer in the chain");
  validate_chain(cfg);
  const auto t_start = std::chrono::steady_clock::now();

  RunReport rep;
  rep.id = cfg.id;
  rep.ontology = cfg.ontology;
  rep.mode = cfg.mode;
  rep.trials = cfg.trials;
  rep.seed = cfg.seed;
  rep.rng_derivation = TrialRng::derivation();

  TransportModel model(cfg);
  rep.band_pass_probability = model.band_pass_probability();
  rep.source = source_report_expectation(model.source_state(), cfg.source, cfg.ontology);

  ChannelPipelineResult pipe = run_channel_pipeline(cfg, model, chain_spectrometer(cfg));
  rep.channels = std::move(pipe.channels);
  rep.clicks = std::move(pipe.clicks);

  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

RunReport run_experiment_3(const ExperimentConfig& cfg) {
  validate_chain(cfg);
  const auto t_start = std::chrono::steady_clock::now();

  RunReport rep;
  rep.id = cfg.id;
  rep.ontology = cfg.ontology;
  rep.mode = cfg.mode;
  rep.trials = cfg.trials;
  rep.seed = cfg.seed;
  rep.rng_derivation = TrialRng::derivation();

  TransportModel model(cfg);
  rep.band_pass_probability = model.band_pass_probability();
  rep.source = source_report_expectation(model.source_state(), cfg.source, cfg.ontology);

  ChannelPipelineResult pipe = run_channel_pipeline(cfg, model, chain_spectrometer(cfg));
  rep.channels = std::move(pipe.channels);
  rep.clicks = std::move(pipe.clicks);

  if (!rep.channels.empty())
    rep.discrimination = arrival_regression(rep.channels, chain_dispersion(cfg));

  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rep;
}

DelayedChoiceReport run_delayed_choice(const ExperimentConfig& cfg) {
  std::vector<BandFilterSpec> bands;
  std::vector<FiberSpec> fibers;
  const SpectrometerSpec* spec = nullptr;
  for (const auto& el : cfg.elements) {
    if (const auto* b = std::get_if<BandFilterSpec>(&el)) bands.push_back(*b);
    if (const auto* f = std::get_if<FiberSpec>(&el)) fibers.push_back(*f);
    if (const auto* s = std::get_if<SpectrometerSpec>(&el)) spec = s;
  }

  // Identical configurations except for when the spectrometer acts.  With
  // no spectrometer or no fiber the two arrangements coincide and the
  // comparison is trivially an identity.
  ExperimentConfig first = cfg;
  first.id = ExperimentId::fiber_arrival;
  first.elements.clear();
  for (const auto& b : bands) first.elements.push_back(b);
  for (const auto& f : fibers) first.elements.push_back(f);
  if (spec) first.elements.push_back(*spec);

  ExperimentConfig second = first;
  second.elements.clear();
  for (const auto& b : bands) second.elements.push_back(b);
  if (spec) second.elements.push_back(*spec);
  for (const auto& f : fibers) second.elements.push_back(f);

  DelayedChoiceReport out;
  out.first = run_experiment_3(first);
  out.second = run_experiment_3(second);
  return out;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.id) {
    case ExperimentId::source_analysis: return run_experiment_1(cfg);
    case ExperimentId::channel_coherence: return run_experiment_2(cfg);
    case ExperimentId::fiber_arrival: return run_experiment_3(cfg);
    case ExperimentId::delayed_choice:
      throw DomainError("delayed choice produces a report pair; use run_delayed_choice");
  }
  throw DomainError("unknown experiment");
}

}  // namespace gedanken
