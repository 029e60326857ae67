#include "hjnav/forecast.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "hjnav/error.hpp"

namespace hjnav {

namespace {

Extent window(const FlowSource& f, double t0, double t1) {
  Extent e = f.extent();
  e.t_min = t0;
  e.t_max = t1;
  return e;
}

}  // namespace

void ForecastSeries::validate() const {
  if (!(horizon > 0.0)) throw ConfigError("forecast horizon must be positive");
  if (!(cadence > 0.0)) throw ConfigError("forecast cadence must be positive");
  for (std::size_t i = 0; i < releases.size(); ++i) {
    const ForecastRelease& r = releases[i];
    if (i > 0 && !(r.time > releases[i - 1].time)) {
      throw ConfigError("forecast release times must be strictly increasing");
    }
    if (!r.flow.clamp_time() && !r.flow.extent().covers_time(r.time, r.time + horizon)) {
      throw HorizonError("forecast released at " + std::to_string(r.time) +
                         " s does not cover its horizon");
    }
  }
}

void ErrorModelConfig::validate() const {
  if (!(target_rmse >= 0.0)) throw ConfigError("target_rmse must be >= 0");
  if (!(correlation_length > 0.0)) throw ConfigError("correlation_length must be positive");
  if (!(temporal_correlation > 0.0)) throw ConfigError("temporal_correlation must be positive");
  if (n_modes < 1) throw ConfigError("n_modes must be >= 1");
}

static void check_span(const FlowSource& truth, double cadence, double horizon, TimeSpan span) {
  if (!(cadence > 0.0) || !(horizon > 0.0)) {
    throw ConfigError("cadence and horizon must be positive");
  }
  if (!(span.end >= span.begin)) throw ConfigError("forecast span ends before it begins");
  if (!truth.clamp_time() && !truth.extent().covers_time(span.begin, span.end + horizon)) {
    throw HorizonError("truth does not cover the forecast span plus horizon");
  }
}

static std::vector<double> release_times(double cadence, TimeSpan span) {
  std::vector<double> out;
  for (std::size_t k = 0;; ++k) {
    const double t = span.begin + static_cast<double>(k) * cadence;
    if (t > span.end + 1e-9 * cadence) break;
    out.push_back(t);
  }
  return out;
}

ForecastSeries gen_forecast_series(const FlowSource& truth, const ErrorModelConfig& cfg,
                                   double cadence, double horizon, TimeSpan span) {
  cfg.validate();
  check_span(truth, cadence, horizon, span);
  ForecastSeries out;
  out.horizon = horizon;
  out.cadence = cadence;
  const auto times = release_times(cadence, span);
  if (cfg.target_rmse == 0.0) {
    for (double t : times) out.releases.push_back({t, truth.restricted(window(truth, t, t + horizon))});
    return out;
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double pi = std::numbers::pi;
  FourierField field;
  field.amplitude = cfg.target_rmse / std::sqrt(static_cast<double>(cfg.n_modes));
  for (int m = 0; m < cfg.n_modes; ++m) {
    // Wavelengths spread over [L, 4L].
    const double wavelength = cfg.correlation_length * (1.0 + 3.0 * unit(rng));
    const double dir = 2.0 * pi * unit(rng);
    const double k = 2.0 * pi / wavelength;
    field.modes.push_back({k * std::cos(dir), k * std::sin(dir), 2.0 * pi * unit(rng),
                           2.0 * pi * unit(rng)});
  }
  const double drift = 1.0 - std::exp(-cadence / cfg.temporal_correlation);
  auto base = std::make_shared<const FlowSource>(truth);
  for (std::size_t r = 0; r < times.size(); ++r) {
    if (r > 0) {
      for (auto& mode : field.modes) {
        mode.phase_u += drift * pi * (2.0 * unit(rng) - 1.0);
        mode.phase_v += drift * pi * (2.0 * unit(rng) - 1.0);
      }
    }
    FlowSource f(PerturbedFlow{base, field}, window(truth, times[r], times[r] + horizon),
                 truth.clamp_time());
    out.releases.push_back({times[r], std::move(f)});
  }
  return out;
}

ForecastSeries perfect_forecasts(const FlowSource& truth, double cadence, double horizon,
                                 TimeSpan span) {
  ErrorModelConfig cfg;
  cfg.target_rmse = 0.0;
  return gen_forecast_series(truth, cfg, cadence, horizon, span);
}

const ForecastRelease& current_forecast(const ForecastSeries& series, double t) {
  const auto& rs = series.releases;
  if (rs.empty() || t < rs.front().time) {
    throw AvailabilityError("no forecast released at or before t = " + std::to_string(t) + " s");
  }
  auto it = std::upper_bound(rs.begin(), rs.end(), t,
                             [](double v, const ForecastRelease& r) { return v < r.time; });
  return *std::prev(it);
}

ForecastSeries load_forecast_series(
    const std::vector<std::pair<double, std::filesystem::path>>& files, double horizon,
    double cadence) {
  ForecastSeries out;
  out.horizon = horizon;
  out.cadence = cadence;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (i > 0 && !(files[i].first > files[i - 1].first)) {
      throw ConfigError("forecast release times must be strictly increasing");
    }
  }
  for (const auto& [t, path] : files) out.releases.push_back({t, read_flow_file(path)});
  out.validate();
  return out;
}

ForecastSeries load_forecast_series(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ConfigError("cannot open forecast manifest " + manifest.string());
  nlohmann::json j;
  try {
    in >> j;
    std::vector<std::pair<double, std::filesystem::path>> files;
    for (const auto& r : j.at("releases")) {
      std::filesystem::path p = r.at("path").get<std::string>();
      if (p.is_relative()) p = manifest.parent_path() / p;
      files.emplace_back(r.at("time_s").get<double>(), p);
    }
    return load_forecast_series(files, j.at("horizon_s").get<double>(),
                                j.value("cadence_s", 86400.0));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("forecast manifest " + manifest.string() + ": " + e.what());
  }
}

}  // namespace hjnav
