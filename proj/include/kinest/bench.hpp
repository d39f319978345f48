#pragma once

// Timing of the quadratic matrix form against the chunked scan.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "kinest/error.hpp"
#include "kinest/ssd.hpp"
#include "kinest/synthetic.hpp"

namespace kinest::bench {

struct BenchOptions {
  std::vector<std::size_t> lengths = {512, 1024, 2048, 4096};
  std::size_t chunk = 16;
  std::size_t trials = 3;
  std::size_t state_dim = 16;
  std::size_t channels = 16;
  std::uint64_t seed = 0;
  double tolerance = 1e-5;
};

struct BenchRow {
  std::size_t length = 0;
  double matrix_ms = 0.0;   // median
  double chunked_ms = 0.0;  // median
  double max_rel_diff = 0.0;
  bool agree = false;
  double speedup() const { return chunked_ms > 0.0 ? matrix_ms / chunked_ms : 0.0; }
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double matrix_slope = 0.0;   // log-log, time vs T
  double chunked_slope = 0.0;
  bool all_agree() const {
    return std::all_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.agree; });
  }
  std::string to_text() const;
};

inline ssd::SsdParams random_params(std::uint64_t seed, std::size_t t, std::size_t n, std::size_t p) {
  synth::Rng rng(seed);
  std::vector<double> a(t);
  for (double& v : a) v = rng.uniform(0.5, 1.0);
  ssd::RowMatrix b(t, n), c(t, n), x(t, p);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return {std::move(a), std::move(b), std::move(c), std::move(x)};
}

/// max |a - b| / max(max |b|, 1).
inline double max_relative_difference(const ssd::RowMatrix& a, const ssd::RowMatrix& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1.0);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  kinest::detail::require_dims(x.size() == y.size() && x.size() >= 2, "log_log_slope: need two or more points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

template <class F>
double median_ms(std::size_t trials, F&& fn) {
  std::vector<double> ms;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  return ms[ms.size() / 2];
}

/// Each length is checked for agreement before it is timed; disagreeing
/// lengths are reported but not timed.
inline BenchReport run(const BenchOptions& opt) {
  kinest::detail::require_domain(opt.trials >= 1, "bench: trials must be at least 1");
  BenchReport rep;
  volatile double sink = 0.0;
  for (std::size_t t : opt.lengths) {
    const auto p = random_params(opt.seed + t, t, opt.state_dim, opt.channels);
    BenchRow row;
    row.length = t;
    const std::size_t chunk = std::min(opt.chunk, t);
    row.max_rel_diff = max_relative_difference(ssd::chunked_scan(p, chunk), ssd::ssd_matrix_form(p));
    row.agree = row.max_rel_diff <= opt.tolerance;
    if (row.agree) {
      row.matrix_ms = median_ms(opt.trials, [&] { sink = sink + ssd::ssd_matrix_form(p)(0, 0); });
      row.chunked_ms = median_ms(opt.trials, [&] { sink = sink + ssd::chunked_scan(p, chunk)(0, 0); });
    }
    rep.rows.push_back(row);
  }
  if (rep.all_agree() && rep.rows.size() >= 2) {
    std::vector<double> ts, m, c;
    for (const auto& r : rep.rows) {
      ts.push_back(static_cast<double>(r.length));
      m.push_back(r.matrix_ms);
      c.push_back(r.chunked_ms);
    }
    rep.matrix_slope = log_log_slope(ts, m);
    rep.chunked_slope = log_log_slope(ts, c);
  }
  return rep;
}

inline std::string BenchReport::to_text() const {
  std::string out = "T,matrix_ms,chunked_ms,speedup,max_rel_diff,agree\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.3f,%.3f,%.2f,%.3e,%s\n", r.length, r.matrix_ms, r.chunked_ms, r.speedup(),
                  r.max_rel_diff, r.agree ? "yes" : "no");
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "slope_matrix,%.3f\nslope_chunked,%.3f\n", matrix_slope, chunked_slope);
  out += buf;
  return out;
}

}  // namespace kinest::bench
