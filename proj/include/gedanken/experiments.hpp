#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gedanken/elements.hpp"
#include "gedanken/estimators.hpp"
#include "gedanken/photon.hpp"
#include "gedanken/spectral.hpp"

namespace gedanken {

enum class ExperimentId {
  source_analysis,    // 1: linewidth, coherence time, uncertainty product
  channel_coherence,  // 2: per-channel coherence after a spectrometer
  fiber_arrival,      // 3: dispersed arrival times, model discrimination
  delayed_choice,     // spectrometer before vs after the fiber
};

enum class RunMode { expectation, monte_carlo };

std::string to_string(ExperimentId id);
std::string to_string(RunMode mode);

// Transport element; the chain order is part of the configuration.
using Element = std::variant<BandFilterSpec, FiberSpec, SpectrometerSpec>;

struct ExperimentConfig {
  ExperimentId id = ExperimentId::source_analysis;
  SourceSpec source;
  double grid_span_hz = 0.0;
  int grid_points = 0;
  std::vector<Element> elements;  // ordered transport chain
  SpectrometerSpec fine_analyzer; // spectral histogramming
  DetectorSpec detector;
  std::vector<double> michelson_delays_s;  // empty: auto fringe-max grid
  OntologyKind ontology = OntologyKind::quantum;
  RunMode mode = RunMode::expectation;
  std::uint64_t trials = 10000;
  std::uint64_t seed = 42;
  int workers = 0;  // <= 0: hardware concurrency

  FrequencyGrid grid() const;
};

// Canonical configurations; the numbers are simulation defaults chosen so
// every guard and tolerance in the test suite holds.
ExperimentConfig default_config(ExperimentId id);

// Rejects chains the grid cannot represent: fiber group delays (over the
// band actually carrying intensity) must fit in the temporal window with an
// 8 tau_R margin and clear of the wraparound guard region.
void validate_chain(const ExperimentConfig& cfg);

struct RunReport {
  ExperimentId id = ExperimentId::source_analysis;
  OntologyKind ontology = OntologyKind::quantum;
  RunMode mode = RunMode::expectation;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::string rng_derivation;
  double band_pass_probability = 1.0;  // acceptance-band post-selection
  std::optional<SourceReport> source;
  std::vector<ChannelReport> channels;
  std::optional<DiscriminationReport> discrimination;
  std::vector<VisibilityPoint> visibility;
  std::vector<ClickRecord> clicks;  // monte_carlo mode only
  bool insufficient_statistics = false;
  double wall_seconds = 0.0;  // in-memory only; kept out of serialized reports
};

struct DelayedChoiceReport {
  RunReport first;   // spectrometer after the propagation step
  RunReport second;  // spectrometer before it
};

// Precomputed per-run sampling model: conditional channel states, arrival
// quantile tables, and the ontology-specific timing rules.
class TransportModel {
 public:
  explicit TransportModel(const ExperimentConfig& cfg);
  ~TransportModel();
  TransportModel(const TransportModel&) = delete;
  TransportModel& operator=(const TransportModel&) = delete;

  // One detection event for the requested ontology.  Every trial produces
  // exactly one click; photons rejected by the acceptance band are
  // re-emitted (post-selected ensemble).
  ClickRecord sample_click(OntologyKind ontology, std::uint64_t trial, TrialRng& rng) const;

  int n_channels() const;
  double band_pass_probability() const;
  double channel_probability(int k) const;
  double calibrated_center_hz(int k) const;
  double channel_dnu_prime_hz(int k) const;
  double channel_tc_prime_s(int k) const;
  // Arrival-time mean / std per channel under the given ontology.
  double arrival_mean_s(OntologyKind ontology, int k) const;
  double arrival_std_s(OntologyKind ontology, int k) const;
  const SpectralAmplitude& source_state() const;
  const SpectralAmplitude& banded_state() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

RunReport run_experiment_1(const ExperimentConfig& cfg);
RunReport run_experiment_2(const ExperimentConfig& cfg);
RunReport run_experiment_3(const ExperimentConfig& cfg);
DelayedChoiceReport run_delayed_choice(const ExperimentConfig& cfg);
RunReport run_experiment(const ExperimentConfig& cfg);  // dispatch on cfg.id

// Monte Carlo driver: trials fanned out over `workers` threads, each trial
// drawing from its own (seed, trial)-derived stream, so the click stream is
// independent of the worker count.
std::vector<ClickRecord> run_trials(const TransportModel& model, OntologyKind ontology,
                                    std::uint64_t trials, std::uint64_t seed, int workers);

// Default Michelson delay grid: nominal points snapped to carrier fringe
// maxima so the bright-port probability directly exposes the envelope.
std::vector<double> fringe_max_delays(double nu0_hz, double tau_max_s, int points);

}  // namespace gedanken
