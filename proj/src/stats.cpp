#include "hjnav/stats.hpp"

#include <cmath>

#include "hjnav/error.hpp"

namespace hjnav {

OutcomeRates rates(const OutcomeTally& t) {
  if (t.n_total == 0) throw DegenerateError("rates of an empty tally are undefined");
  const auto n = static_cast<double>(t.n_total);
  return {static_cast<double>(t.n_stranded) / n, static_cast<double>(t.n_success) / n,
          static_cast<double>(t.n_timeout) / n, static_cast<double>(t.n_left_region) / n,
          static_cast<double>(t.n_aborted) / n};
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

TestResult z_prop_test(std::size_t k_base, std::size_t n_base, std::size_t k_alt,
                       std::size_t n_alt) {
  if (n_base == 0 || n_alt == 0) throw ParameterError("z test needs non-empty samples");
  if (k_base > n_base || k_alt > n_alt) throw ParameterError("z test count exceeds sample size");
  const double nb = static_cast<double>(n_base), na = static_cast<double>(n_alt);
  const double pooled = static_cast<double>(k_base + k_alt) / (nb + na);
  if (pooled <= 0.0 || pooled >= 1.0) {
    throw DegenerateError("pooled proportion is 0 or 1; the z test is undefined");
  }
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / nb + 1.0 / na));
  const double z = (static_cast<double>(k_base) / nb - static_cast<double>(k_alt) / na) / se;
  return {z, normal_sf(z)};
}

double vector_rmse(std::span<const Vec2> truth, std::span<const Vec2> forecast) {
  if (truth.size() != forecast.size()) throw ParameterError("rmse inputs differ in length");
  if (truth.empty()) throw DegenerateError("rmse of an empty sample is undefined");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Vec2 d = truth[i] - forecast[i];
    sum += dot(d, d);
  }
  return std::sqrt(sum / static_cast<double>(truth.size()));
}

namespace {

struct Mat2 {
  double a = 0, b = 0, c = 0, d = 0;  // [[a, b], [c, d]]

  Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  double det() const { return a * d - b * c; }
  Mat2 inverse() const {
    const double k = 1.0 / det();
    return {d * k, -b * k, -c * k, a * k};
  }
  Mat2 transposed() const { return {a, c, b, d}; }
  double trace() const { return a + d; }
};

Mat2 cross_cov(std::span<const Vec2> p, Vec2 mp, std::span<const Vec2> q, Vec2 mq) {
  Mat2 s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2 dp = p[i] - mp, dq = q[i] - mq;
    s.a += dp.x * dq.x;
    s.b += dp.x * dq.y;
    s.c += dp.y * dq.x;
    s.d += dp.y * dq.y;
  }
  const double k = 1.0 / static_cast<double>(p.size() - 1);
  return {s.a * k, s.b * k, s.c * k, s.d * k};
}

Vec2 mean(std::span<const Vec2> p) {
  Vec2 m;
  for (const Vec2& v : p) m += v;
  return m * (1.0 / static_cast<double>(p.size()));
}

}  // namespace

double vector_correlation(std::span<const Vec2> a, std::span<const Vec2> b) {
  if (a.size() != b.size()) throw ParameterError("correlation inputs differ in length");
  if (a.size() < 3) throw DegenerateError("vector correlation needs at least 3 samples");
  const Vec2 ma = mean(a), mb = mean(b);
  const Mat2 s11 = cross_cov(a, ma, a, ma);
  const Mat2 s22 = cross_cov(b, mb, b, mb);
  const Mat2 s12 = cross_cov(a, ma, b, mb);
  // Relative singularity test: det vs the squared scale of the matrix.
  auto singular = [](const Mat2& m) {
    const double scale = m.a * m.a + m.d * m.d + m.b * m.b + m.c * m.c;
    return !(scale > 0.0) || std::abs(m.det()) <= 1e-12 * scale;
  };
  if (singular(s11) || singular(s22)) {
    throw DegenerateError("singular covariance; vector correlation undefined");
  }
  return (s11.inverse() * s12 * s22.inverse() * s12.transposed()).trace();
}

}  // namespace hjnav
