#include "gedanken/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "gedanken/errors.hpp"

namespace gedanken {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::quantum_like: return "quantum_like";
    case Verdict::transformer_like: return "transformer_like";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

HupProduct hup_product(double dnu_hz, double t_char_s) {
  if (dnu_hz < 0.0 || t_char_s < 0.0)
    throw DomainError("widths entering the uncertainty product must be nonnegative");
  HupProduct out;
  out.value = dnu_hz * t_char_s;
  out.passes = out.value >= kHupBound * (1.0 - kHupSlack);
  return out;
}

std::vector<VisibilityPoint> visibility_scan(const SpectralAmplitude& psi,
                                             const std::vector<double>& tau_grid) {
  const double half_window = 0.5 * psi.grid.window();
  std::vector<VisibilityPoint> out;
  out.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    if (std::abs(tau) > half_window)
      throw DomainError("scan delay outside the representable window");
    VisibilityPoint p;
    p.tau_s = tau;
    p.visibility = michelson_visibility(psi, tau);
    p.p_click = michelson_click_prob(psi, MichelsonSpec{tau, MichelsonPort::bright});
    out.push_back(p);
  }
  return out;
}

ChannelStats channel_stats(std::vector<double> values) {
  ChannelStats stats;
  stats.count = values.size();
  stats.sufficient = stats.count >= 30;
  if (values.empty()) return stats;

  std::sort(values.begin(), values.end());
  if (values.front() == values.back()) {  // all clicks coincide
    stats.mean = values.front();
    return stats;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(values.size());

  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
    stats.sample_std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    stats.stderr_mean = stats.sample_std / std::sqrt(static_cast<double>(values.size()));
  }
  return stats;
}

DiscriminationReport arrival_regression(const std::vector<ChannelReport>& channels,
                                        double d_reference_s_per_hz) {
  std::vector<const ChannelReport*> usable;
  for (const auto& ch : channels) {
    if (ch.empty || ch.insufficient_clicks) continue;
    if (!(ch.stderr_t_s > 0.0)) continue;
    usable.push_back(&ch);
  }
  if (usable.size() < 3)
    throw DomainError("arrival regression needs at least 3 usable channels");

  double sw = 0.0, swx = 0.0, swy = 0.0;
  for (const auto* ch : usable) {
    const double w = 1.0 / (ch->stderr_t_s * ch->stderr_t_s);
    sw += w;
    swx += w * ch->calibrated_center_hz;
    swy += w * ch->mean_t_s;
  }
  const double xbar = swx / sw;
  const double ybar = swy / sw;

  double sxx = 0.0, sxy = 0.0;
  for (const auto* ch : usable) {
    const double w = 1.0 / (ch->stderr_t_s * ch->stderr_t_s);
    const double dx = ch->calibrated_center_hz - xbar;
    sxx += w * dx * dx;
    sxy += w * dx * (ch->mean_t_s - ybar);
  }
  if (!(sxx > 0.0)) throw DomainError("degenerate design: all channel centers equal");

  DiscriminationReport rep;
  rep.d_reference = d_reference_s_per_hz;
  rep.slope_hat = sxy / sxx;
  rep.slope_stderr = 1.0 / std::sqrt(sxx);
  rep.z_vs_zero = rep.slope_hat / rep.slope_stderr;
  rep.z_vs_d = (rep.slope_hat - d_reference_s_per_hz) / rep.slope_stderr;

  if (rep.z_vs_zero >= 5.0 && std::abs(rep.z_vs_d) < 5.0)
    rep.verdict = Verdict::quantum_like;
  else if (std::abs(rep.z_vs_zero) < 5.0 && std::abs(rep.z_vs_d) >= 5.0)
    rep.verdict = Verdict::transformer_like;
  else
    rep.verdict = Verdict::inconclusive;
  return rep;
}

HistogramSpectrum histogram_spectrum(const std::vector<double>& counts,
                                     const std::vector<double>& centers_hz,
                                     double channel_hwhm_hz) {
  if (counts.size() != centers_hz.size() || counts.size() < 2)
    throw DomainError("histogram needs matching counts and centers");

  HistogramSpectrum out;
  out.channel_hwhm_hz = channel_hwhm_hz;

  double total = 0.0, weighted = 0.0;
  std::size_t occupied = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0.0) throw DomainError("negative histogram count");
    total += counts[i];
    weighted += counts[i] * centers_hz[i];
    if (counts[i] > 0.0) ++occupied;
  }
  if (!(total > 0.0)) throw DomainError("empty histogram");
  out.insufficient_statistics = total < 1e3;
  out.nu0_hat_offset_hz = weighted / total;

  if (occupied <= 1) {
    out.dnu_hat_hz = channel_hwhm_hz;  // width unresolved, upper bound
    out.upper_bound = true;
    return out;
  }

  const double step = centers_hz[1] - centers_hz[0];
  try {
    out.dnu_hat_hz = hwhm(counts, step).value;
  } catch (const DomainError&) {
    out.dnu_hat_hz = channel_hwhm_hz;
    out.upper_bound = true;
  }
  return out;
}

}  // namespace gedanken
