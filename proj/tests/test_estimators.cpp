#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gedanken/errors.hpp"
#include "gedanken/estimators.hpp"
#include "gedanken/photon.hpp"
#include "gedanken/rng.hpp"
#include "test_support.hpp"

using namespace gedanken;
using namespace testsupport;

TEST_CASE("visibility_scan: Lorentzian envelope values and monotonicity") {
  const SourceSpec src;
  const SpectralAmplitude psi = make_quantum_photon(src, unit_grid(src)).state;

  const std::vector<double> taus{0.0, 2.0 * src.tau_r_s};
  const auto scan = visibility_scan(psi, taus);
  CHECK(scan[0].visibility == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(scan[1].visibility == doctest::Approx(std::exp(-1.0)).epsilon(1e-4));

  std::vector<double> grid;
  for (int i = 0; i < 60; ++i) grid.push_back(i * 0.15 * src.tau_r_s);
  const auto curve = visibility_scan(psi, grid);
  for (std::size_t i = 1; i < curve.size(); ++i)
    CHECK(curve[i].visibility <= curve[i - 1].visibility + 1e-6);

  // Monochromatic limit: visibility stays at one across the scan.
  SpectralAmplitude spike;
  spike.grid = psi.grid;
  spike.values.assign(spike.grid.n_points, 0.0);
  spike.values[spike.grid.n_points / 2] = 1.0 / std::sqrt(spike.grid.d_nu);
  for (const auto& p : visibility_scan(spike, grid))
    CHECK(p.visibility == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("hup_product: bound at 1/(4 pi) with 2% allowance") {
  const SourceSpec src;
  const HupProduct natural = hup_product(src.gamma_hz(), src.tau_r_s);
  CHECK(natural.value == doctest::Approx(1.0 / (4.0 * kPi)).epsilon(1e-12));
  CHECK(natural.passes);

  const HupProduct sharp = hup_product(0.0, 1.0);
  CHECK(sharp.value == 0.0);
  CHECK_FALSE(sharp.passes);

  // Gaussian conditional of HWHM w: product sqrt(ln 2) / (2 pi), width-free.
  const double w = src.gamma_hz() / 8.0;
  const double sigma = w / std::sqrt(2.0 * std::log(2.0));
  const double tc = 1.0 / (2.0 * std::sqrt(2.0) * kPi * sigma);
  const HupProduct gauss = hup_product(w, tc);
  CHECK(gauss.value == doctest::Approx(std::sqrt(std::log(2.0)) / (2.0 * kPi)).epsilon(1e-9));
  CHECK(gauss.value == doctest::Approx(0.1325).epsilon(0.001));
  CHECK(gauss.passes);
}

TEST_CASE("channel_stats: moments, determinism, insufficient-click flag") {
  std::vector<double> same(50, 3.25e-7);
  const ChannelStats constant = channel_stats(same);
  CHECK(constant.mean == doctest::Approx(3.25e-7));
  CHECK(constant.sample_std == 0.0);
  CHECK(constant.stderr_mean == 0.0);
  CHECK(constant.sufficient);

  const std::uint64_t m = 10000;
  const double tau_r = 10e-9;
  std::vector<double> exp_clicks(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    TrialRng rng(5, i);
    exp_clicks[i] = rng.exponential(tau_r);
  }
  const ChannelStats stats = channel_stats(exp_clicks);
  CHECK(stats.mean == doctest::Approx(tau_r).epsilon(3.0 / std::sqrt(double(m))));

  // Aggregation is order-insensitive.
  std::vector<double> shuffled = exp_clicks;
  std::reverse(shuffled.begin(), shuffled.end());
  std::swap(shuffled[3], shuffled[4171]);
  const ChannelStats again = channel_stats(shuffled);
  CHECK(again.mean == stats.mean);
  CHECK(again.sample_std == stats.sample_std);
  CHECK(again.stderr_mean == stats.stderr_mean);

  CHECK_FALSE(channel_stats(std::vector<double>(29, 1.0)).sufficient);
}

namespace {

ChannelReport synthetic_channel(int k, double center, double mean, double stderr_t) {
  ChannelReport ch;
  ch.k = k;
  ch.center_hz = center;
  ch.calibrated_center_hz = center;
  ch.p_hat = 0.1;
  ch.mean_t_s = mean;
  ch.std_t_s = stderr_t * 10.0;
  ch.stderr_t_s = stderr_t;
  ch.clicks = 100;
  return ch;
}

}  // namespace

TEST_CASE("arrival_regression: planted slope, flat curve, degenerate designs") {
  const double d_ref = 5e-14;
  const double t0 = 2e-7;
  const double stderr_t = 2e-9;

  SUBCASE("planted dispersion slope is recovered") {
    std::vector<ChannelReport> channels;
    TrialRng rng(17, 0);
    for (int k = -4; k <= 4; ++k) {
      const double center = k * 4e6;
      const double noise = rng.gaussian(0.1 * stderr_t);
      channels.push_back(
          synthetic_channel(k + 4, center, t0 + d_ref * center + noise, stderr_t));
    }
    const DiscriminationReport rep = arrival_regression(channels, d_ref);
    CHECK(rep.slope_hat == doctest::Approx(d_ref).epsilon(0.01));
    CHECK(rep.z_vs_zero >= 5.0);
    CHECK(std::abs(rep.z_vs_d) < 5.0);
    CHECK(rep.verdict == Verdict::quantum_like);
  }

  SUBCASE("channel-independent arrivals read as a transformer") {
    std::vector<ChannelReport> channels;
    for (int k = -4; k <= 4; ++k)
      channels.push_back(synthetic_channel(k + 4, k * 4e6, t0, stderr_t));
    const DiscriminationReport rep = arrival_regression(channels, d_ref);
    CHECK(rep.slope_hat == doctest::Approx(0.0));
    CHECK(std::abs(rep.z_vs_zero) < 5.0);
    CHECK(std::abs(rep.z_vs_d) >= 5.0);
    CHECK(rep.verdict == Verdict::transformer_like);
  }

  SUBCASE("fewer than three usable channels is an error") {
    std::vector<ChannelReport> two{synthetic_channel(0, -4e6, t0, stderr_t),
                                   synthetic_channel(1, 4e6, t0, stderr_t)};
    CHECK_THROWS_AS(arrival_regression(two, d_ref), DomainError);
  }

  SUBCASE("coincident centers are a degenerate design") {
    std::vector<ChannelReport> flat{synthetic_channel(0, 1e6, t0, stderr_t),
                                    synthetic_channel(1, 1e6, t0, stderr_t),
                                    synthetic_channel(2, 1e6, t0, stderr_t)};
    CHECK_THROWS_AS(arrival_regression(flat, d_ref), DomainError);
  }

  SUBCASE("insufficient channels are excluded") {
    std::vector<ChannelReport> channels;
    for (int k = -2; k <= 2; ++k)
      channels.push_back(
          synthetic_channel(k + 2, k * 4e6, t0 + d_ref * k * 4e6, stderr_t));
    channels[0].insufficient_clicks = true;
    channels[4].insufficient_clicks = true;
    const DiscriminationReport rep = arrival_regression(channels, d_ref);
    CHECK(rep.slope_hat == doctest::Approx(d_ref).epsilon(1e-9));
  }
}

TEST_CASE("arrival_regression: 3-sigma coverage across seeded replications") {
  // Calibration property: the fitted slope lands within 3 stderr of the
  // planted slope in at least 99% of replications.
  const double d_ref = 5e-14;
  const double stderr_t = 5e-9;
  int covered = 0;
  const int reps = 300;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<ChannelReport> channels;
    TrialRng rng(1000 + rep, 0);
    for (int k = -4; k <= 4; ++k) {
      const double center = k * 4e6;
      channels.push_back(synthetic_channel(
          k + 4, center, 1e-7 + d_ref * center + rng.gaussian(stderr_t), stderr_t));
    }
    const DiscriminationReport out = arrival_regression(channels, d_ref);
    if (std::abs(out.slope_hat - d_ref) <= 3.0 * out.slope_stderr) ++covered;
  }
  CHECK(covered >= static_cast<int>(0.99 * reps));
}

TEST_CASE("histogram_spectrum: Lorentzian width, single-bin bound, symmetry") {
  const SourceSpec src;
  const double gamma = src.gamma_hz();

  SUBCASE("counts proportional to channel masses recover the linewidth") {
    const int n = 64;
    const double step = gamma / 4.0;
    std::vector<double> centers(n), counts(n);
    for (int i = 0; i < n; ++i) {
      centers[i] = (i - n / 2) * step;
      counts[i] = 1e5 * (std::atan((centers[i] + 0.5 * step) / gamma) -
                         std::atan((centers[i] - 0.5 * step) / gamma)) / kPi;
    }
    const HistogramSpectrum hist = histogram_spectrum(counts, centers, step / 2.0);
    CHECK(hist.dnu_hat_hz == doctest::Approx(gamma).epsilon(0.10));
    CHECK_FALSE(hist.upper_bound);
    CHECK(std::abs(hist.nu0_hat_offset_hz) <= step / 2.0);
  }

  SUBCASE("all counts in one bin reports an upper bound") {
    std::vector<double> counts(16, 0.0), centers(16);
    for (int i = 0; i < 16; ++i) centers[i] = i * 1e6;
    counts[7] = 5000.0;
    const HistogramSpectrum hist = histogram_spectrum(counts, centers, 0.5e6);
    CHECK(hist.upper_bound);
    CHECK(hist.dnu_hat_hz == doctest::Approx(0.5e6));
    CHECK(hist.nu0_hat_offset_hz == doctest::Approx(7e6));
  }

  SUBCASE("fewer than 1e3 counts is flagged") {
    std::vector<double> counts{10, 50, 10};
    std::vector<double> centers{-1e6, 0.0, 1e6};
    CHECK(histogram_spectrum(counts, centers, 0.5e6).insufficient_statistics);
  }
}
