#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "hjnav/flowfield.hpp"

namespace hjnav {

struct ForecastRelease {
  double time = 0.0;  // s
  FlowSource flow;    // valid over [time, time + horizon]
};

struct ForecastSeries {
  std::vector<ForecastRelease> releases;
  double horizon = 5 * 86400.0;  // s
  double cadence = 86400.0;      // s

  /// Strictly increasing release times; every flow covers its horizon.
  /// Throws ConfigError / HorizonError.
  void validate() const;
};

struct ErrorModelConfig {
  double target_rmse = 0.2;                // m/s, vector RMSE
  double correlation_length = 100000.0;   // m, shortest mode wavelength
  double temporal_correlation = 86400.0;  // s
  int n_modes = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TimeSpan {
  double begin = 0.0;
  double end = 0.0;
};

/// Releases at span.begin, span.begin + cadence, ... up to span.end, each
/// the truth plus a random Fourier error field. Error modes keep their wave
/// vectors across releases; phases drift by (1 - rho) U(-pi, pi) per release
/// with rho = exp(-cadence / temporal_correlation). Mode amplitudes give a
/// mean-square error of target_rmse^2 / 2 per component.
ForecastSeries gen_forecast_series(const FlowSource& truth, const ErrorModelConfig& cfg,
                                   double cadence, double horizon, TimeSpan span);

/// Series whose releases are the truth itself (perfect forecasts).
ForecastSeries perfect_forecasts(const FlowSource& truth, double cadence, double horizon,
                                 TimeSpan span);

/// Latest release at or before t. AvailabilityError before the first one.
const ForecastRelease& current_forecast(const ForecastSeries& series, double t);

/// Builds a series from OFG1 files. Release times must be strictly
/// increasing and each file must span [release, release + horizon].
ForecastSeries load_forecast_series(
    const std::vector<std::pair<double, std::filesystem::path>>& files, double horizon,
    double cadence);

/// JSON manifest: {"horizon_s": .., "cadence_s": .., "releases": [{"time_s": .., "path": ..}]}.
/// Relative paths resolve against the manifest's directory.
ForecastSeries load_forecast_series(const std::filesystem::path& manifest);

}  // namespace hjnav
