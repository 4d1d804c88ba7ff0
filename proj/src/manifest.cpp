#include "gedanken/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "CLI11.hpp"

#include "gedanken/errors.hpp"

namespace gedanken {

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + context);
  }
}

ExperimentId parse_experiment(const std::string& s) {
  if (s == "1") return ExperimentId::source_analysis;
  if (s == "2") return ExperimentId::channel_coherence;
  if (s == "3") return ExperimentId::fiber_arrival;
  if (s == "delayed") return ExperimentId::delayed_choice;
  throw ConfigError("experiment must be one of 1|2|3|delayed, got '" + s + "'");
}

OntologyKind parse_model(const std::string& s) {
  if (s == "quantum") return OntologyKind::quantum;
  if (s == "hv") return OntologyKind::hidden_variable;
  if (s == "transformer") return OntologyKind::coherence_transformer;
  throw ConfigError("model must be one of quantum|hv|transformer, got '" + s + "'");
}

RunMode parse_mode(const std::string& s) {
  if (s == "expectation") return RunMode::expectation;
  if (s == "monte-carlo" || s == "monte_carlo") return RunMode::monte_carlo;
  throw ConfigError("mode must be expectation|monte-carlo, got '" + s + "'");
}

LineShape parse_line_shape(const std::string& s) {
  if (s == "lorentzian") return LineShape::lorentzian;
  if (s == "gaussian") return LineShape::gaussian;
  throw ConfigError("line_shape must be lorentzian|gaussian, got '" + s + "'");
}

ChannelShape parse_channel_shape(const std::string& s) {
  if (s == "gaussian_partition") return ChannelShape::gaussian_partition;
  if (s == "rectangular") return ChannelShape::rectangular;
  throw ConfigError("shape must be gaussian_partition|rectangular, got '" + s + "'");
}

SpectrometerSpec parse_spectrometer(const json& obj, const std::string& context) {
  check_keys(obj, {"type", "n_channels", "spacing_hz", "channel_hwhm_hz", "shape"}, context);
  const int n = obj.at("n_channels").get<int>();
  const double spacing = obj.value("spacing_hz", 0.0);
  const double hwhm = obj.at("channel_hwhm_hz").get<double>();
  const ChannelShape shape =
      parse_channel_shape(obj.value("shape", std::string("gaussian_partition")));
  return make_comb_spectrometer(n, spacing, hwhm, shape);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json spectrometer_to_json(const SpectrometerSpec& spec) {
  json out;
  out["n_channels"] = spec.n_channels();
  out["spacing_hz"] =
      spec.n_channels() > 1 ? spec.centers_hz[1] - spec.centers_hz[0] : 0.0;
  out["channel_hwhm_hz"] = spec.channel_hwhm_hz;
  out["shape"] = spec.shape == ChannelShape::gaussian_partition ? "gaussian_partition"
                                                                : "rectangular";
  return out;
}

}  // namespace

RunManifest manifest_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  check_keys(doc,
             {"schema_version", "experiment", "model", "mode", "trials", "seed", "workers",
              "out_dir", "source", "grid", "elements", "fine_analyzer", "detector",
              "michelson_delays_s"},
             "config root");
  if (!doc.contains("schema_version"))
    throw ConfigError("config is missing schema_version");
  if (doc.at("schema_version").get<int>() != 1)
    throw ConfigError("unsupported schema_version (expected 1)");

  const ExperimentId id = parse_experiment(doc.value("experiment", std::string("1")));
  RunManifest manifest;
  manifest.config = default_config(id);
  ExperimentConfig& cfg = manifest.config;

  if (doc.contains("model")) cfg.ontology = parse_model(doc.at("model").get<std::string>());
  if (doc.contains("mode")) cfg.mode = parse_mode(doc.at("mode").get<std::string>());
  if (doc.contains("trials")) cfg.trials = doc.at("trials").get<std::uint64_t>();
  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("workers")) cfg.workers = doc.at("workers").get<int>();
  if (doc.contains("out_dir")) manifest.out_dir = doc.at("out_dir").get<std::string>();

  if (doc.contains("source")) {
    const json& src = doc.at("source");
    check_keys(src, {"nu0_hz", "tau_r_s", "line_shape"}, "source");
    if (src.contains("nu0_hz")) cfg.source.nu0_hz = src.at("nu0_hz").get<double>();
    if (src.contains("tau_r_s")) cfg.source.tau_r_s = src.at("tau_r_s").get<double>();
    if (src.contains("line_shape"))
      cfg.source.line_shape = parse_line_shape(src.at("line_shape").get<std::string>());
    if (!doc.contains("grid")) {
      // Re-derive the default grid for the new source parameters.
      ExperimentConfig fresh = default_config(id);
      const double scale = cfg.source.gamma_hz() / fresh.source.gamma_hz();
      cfg.grid_span_hz = fresh.grid_span_hz * scale;
    }
  }

  if (doc.contains("grid")) {
    const json& grid = doc.at("grid");
    check_keys(grid, {"span_hz", "n_points"}, "grid");
    if (grid.contains("span_hz")) cfg.grid_span_hz = grid.at("span_hz").get<double>();
    if (grid.contains("n_points")) cfg.grid_points = grid.at("n_points").get<int>();
  }

  if (doc.contains("elements")) {
    cfg.elements.clear();
    for (const json& el : doc.at("elements")) {
      const std::string type = el.value("type", std::string());
      if (type == "band_filter") {
        check_keys(el, {"type", "flat_halfwidth_hz", "stop_halfwidth_hz"}, "band_filter");
        cfg.elements.push_back(BandFilterSpec{el.at("flat_halfwidth_hz").get<double>(),
                                              el.at("stop_halfwidth_hz").get<double>()});
      } else if (type == "fiber") {
        check_keys(el, {"type", "t0_s", "dispersion_s_per_hz"}, "fiber");
        cfg.elements.push_back(
            FiberSpec{el.value("t0_s", 0.0), el.value("dispersion_s_per_hz", 0.0)});
      } else if (type == "spectrometer") {
        cfg.elements.push_back(parse_spectrometer(el, "spectrometer element"));
      } else {
        throw ConfigError("element type must be band_filter|fiber|spectrometer");
      }
    }
  }

  if (doc.contains("fine_analyzer"))
    cfg.fine_analyzer = parse_spectrometer(doc.at("fine_analyzer"), "fine_analyzer");

  if (doc.contains("detector")) {
    const json& det = doc.at("detector");
    check_keys(det, {"jitter_rms_s"}, "detector");
    if (det.contains("jitter_rms_s"))
      cfg.detector.jitter_rms_s = det.at("jitter_rms_s").get<double>();
  }

  if (doc.contains("michelson_delays_s"))
    cfg.michelson_delays_s = doc.at("michelson_delays_s").get<std::vector<double>>();

  return manifest;
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return manifest_from_json(doc);
}

json manifest_to_json(const RunManifest& manifest) {
  const ExperimentConfig& cfg = manifest.config;
  json out;
  out["schema_version"] = 1;
  out["experiment"] = to_string(cfg.id);
  out["model"] = to_string(cfg.ontology);
  out["mode"] = cfg.mode == RunMode::expectation ? "expectation" : "monte-carlo";
  out["trials"] = cfg.trials;
  out["seed"] = cfg.seed;
  out["workers"] = cfg.workers;
  out["out_dir"] = manifest.out_dir;
  out["source"] = {{"nu0_hz", cfg.source.nu0_hz},
                   {"tau_r_s", cfg.source.tau_r_s},
                   {"line_shape", to_string(cfg.source.line_shape)}};
  out["grid"] = {{"span_hz", cfg.grid_span_hz}, {"n_points", cfg.grid_points}};
  json elements = json::array();
  for (const auto& el : cfg.elements) {
    if (const auto* band = std::get_if<BandFilterSpec>(&el)) {
      elements.push_back({{"type", "band_filter"},
                          {"flat_halfwidth_hz", band->flat_halfwidth_hz},
                          {"stop_halfwidth_hz", band->stop_halfwidth_hz}});
    } else if (const auto* fiber = std::get_if<FiberSpec>(&el)) {
      elements.push_back({{"type", "fiber"},
                          {"t0_s", fiber->t0_s},
                          {"dispersion_s_per_hz", fiber->dispersion_s_per_hz}});
    } else if (const auto* spec = std::get_if<SpectrometerSpec>(&el)) {
      json s = spectrometer_to_json(*spec);
      s["type"] = "spectrometer";
      elements.push_back(s);
    }
  }
  out["elements"] = elements;
  out["fine_analyzer"] = spectrometer_to_json(cfg.fine_analyzer);
  out["detector"] = {{"jitter_rms_s", cfg.detector.jitter_rms_s}};
  out["michelson_delays_s"] = cfg.michelson_delays_s;
  return out;
}

namespace {

json source_to_json(const SourceReport& s) {
  return {{"nu0_hat_hz", s.nu0_hat_hz},
          {"dnu_hat_hz", s.dnu_hat_hz},
          {"tc_hat_s", s.tc_hat_s},
          {"lc_hat_m", s.lc_hat_m},
          {"hup_product", s.hup_product},
          {"hup_pass", s.hup_pass},
          {"per_photon_hup_violation", s.per_photon_hup_violation},
          {"insufficient_statistics", s.insufficient_statistics}};
}

json channel_to_json(const ChannelReport& c) {
  return {{"k", c.k},
          {"center_hz", c.center_hz},
          {"calibrated_center_hz", c.calibrated_center_hz},
          {"p_hat", c.p_hat},
          {"dnu_prime_hz", c.dnu_prime_hz},
          {"tc_prime_s", c.tc_prime_s},
          {"hup_product", c.hup_product},
          {"hup_pass", c.hup_pass},
          {"mean_t_s", c.mean_t_s},
          {"std_t_s", c.std_t_s},
          {"stderr_t_s", c.stderr_t_s},
          {"clicks", c.clicks},
          {"empty", c.empty},
          {"insufficient_clicks", c.insufficient_clicks}};
}

json discrimination_to_json(const DiscriminationReport& d) {
  return {{"slope_hat_s_per_hz", d.slope_hat},
          {"slope_stderr_s_per_hz", d.slope_stderr},
          {"z_vs_zero", d.z_vs_zero},
          {"z_vs_d", d.z_vs_d},
          {"d_reference_s_per_hz", d.d_reference},
          {"verdict", to_string(d.verdict)}};
}

}  // namespace

json results_to_json(const RunReport& report) {
  json out;
  out["experiment"] = to_string(report.id);
  out["ontology"] = to_string(report.ontology);
  out["mode"] = to_string(report.mode);
  out["trials"] = report.trials;
  out["seed"] = report.seed;
  out["rng_stream"] = report.rng_derivation;
  out["band_pass_probability"] = report.band_pass_probability;
  out["insufficient_statistics"] = report.insufficient_statistics;
  if (report.source) out["source"] = source_to_json(*report.source);
  if (!report.channels.empty()) {
    json channels = json::array();
    for (const auto& c : report.channels) channels.push_back(channel_to_json(c));
    out["channels"] = channels;
  }
  if (report.discrimination)
    out["discrimination"] = discrimination_to_json(*report.discrimination);
  return out;
}

json report_document(const RunManifest& manifest, const RunReport& report) {
  json out;
  out["schema_version"] = 1;
  out["config"] = manifest_to_json(manifest);
  out["results"] = results_to_json(report);
  return out;
}

json report_document(const RunManifest& manifest, const DelayedChoiceReport& report) {
  json results;
  results["first"] = results_to_json(report.first);
  results["second"] = results_to_json(report.second);
  results["identical_results"] =
      results["first"].dump() == results["second"].dump();
  json out;
  out["schema_version"] = 1;
  out["config"] = manifest_to_json(manifest);
  out["results"] = results;
  return out;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write output file: " + path);
  out << contents;
  if (!out) throw ConfigError("failed while writing: " + path);
}

std::string clicks_csv(const std::vector<ClickRecord>& clicks) {
  std::string out = "trial,channel,t_seconds\n";
  for (const auto& c : clicks) {
    out += std::to_string(c.trial);
    out += ',';
    out += c.port.empty() ? std::to_string(c.channel) : c.port;
    out += ',';
    out += format_double(c.t_click_s);
    out += '\n';
  }
  return out;
}

std::string visibility_csv(const std::vector<VisibilityPoint>& points) {
  std::string out = "tau_seconds,visibility,p_click\n";
  for (const auto& p : points) {
    out += format_double(p.tau_s);
    out += ',';
    out += format_double(p.visibility);
    out += ',';
    out += format_double(p.p_click);
    out += '\n';
  }
  return out;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Single-photon wavepacket experiment runner"};
  app.allow_extras(false);

  std::string config_path, experiment, model, mode, out_dir;
  std::int64_t trials = -1, seed = -1, workers_flag = 0;
  bool workers_given = false;

  app.add_option("--config", config_path, "JSON run description");
  app.add_option("--experiment", experiment, "1|2|3|delayed");
  app.add_option("--model", model, "quantum|hv|transformer");
  app.add_option("--trials", trials, "Monte Carlo trials");
  app.add_option("--seed", seed, "master RNG seed");
  app.add_option("--mode", mode, "expectation|monte-carlo");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers_flag, "worker threads (0 = auto)")
      ->each([&](const std::string&) { workers_given = true; });

  std::vector<const char*> argv;
  argv.push_back("gedanken");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    RunManifest manifest;
    if (!config_path.empty()) {
      manifest = load_manifest(config_path);
    } else if (!experiment.empty()) {
      manifest.config = default_config(parse_experiment(experiment));
    } else {
      throw ConfigError("either --config or --experiment is required");
    }

    // Flags override config values.
    ExperimentConfig& cfg = manifest.config;
    if (!experiment.empty() && !config_path.empty()) {
      const ExperimentId id = parse_experiment(experiment);
      if (id != cfg.id) {
        const RunManifest base = manifest;
        manifest.config = default_config(id);
        manifest.config.ontology = base.config.ontology;
        manifest.config.mode = base.config.mode;
        manifest.config.trials = base.config.trials;
        manifest.config.seed = base.config.seed;
        manifest.config.workers = base.config.workers;
      }
    }
    if (!model.empty()) cfg.ontology = parse_model(model);
    if (!mode.empty()) cfg.mode = parse_mode(mode);
    if (trials >= 0) cfg.trials = static_cast<std::uint64_t>(trials);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (workers_given) {
      cfg.workers = static_cast<int>(workers_flag);
    } else if (cfg.workers <= 0) {
      if (const char* env = std::getenv("GEDANKEN_WORKERS")) {
        try {
          cfg.workers = std::stoi(env);
        } catch (...) {
          throw ConfigError("GEDANKEN_WORKERS is not an integer");
        }
      }
    }
    if (!out_dir.empty()) manifest.out_dir = out_dir;

    std::error_code ec;
    std::filesystem::create_directories(manifest.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory: " + manifest.out_dir);

    const auto out_path = [&](const char* name) {
      return (std::filesystem::path(manifest.out_dir) / name).string();
    };

    if (cfg.id == ExperimentId::delayed_choice) {
      const DelayedChoiceReport pair = run_delayed_choice(cfg);
      write_text_file(out_path("report.json"),
                      report_document(manifest, pair).dump(2) + "\n");
      if (cfg.mode == RunMode::monte_carlo) {
        write_text_file(out_path("clicks.csv"), clicks_csv(pair.first.clicks));
        write_text_file(out_path("clicks_b.csv"), clicks_csv(pair.second.clicks));
      }
      std::printf("wrote %s\n", out_path("report.json").c_str());
      return 0;
    }

    const RunReport report = run_experiment(cfg);
    write_text_file(out_path("report.json"),
                    report_document(manifest, report).dump(2) + "\n");
    if (cfg.mode == RunMode::monte_carlo)
      write_text_file(out_path("clicks.csv"), clicks_csv(report.clicks));
    if (!report.visibility.empty())
      write_text_file(out_path("visibility.csv"), visibility_csv(report.visibility));
    std::printf("wrote %s (%.3f s)\n", out_path("report.json").c_str(), report.wall_seconds);
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const GuardError& e) {
    std::fprintf(stderr, "numerical guard: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace gedanken
