#include "driftguard/estimators.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numeric>
#include <sstream>

namespace driftguard {

double InputDist::quantile(double u) const {
  if (kind == Kind::Uniform) return a + (b - a) * u;
  return boost::math::quantile(boost::math::normal(a, b), u);
}

namespace {

// Open-interval uniform so Normal quantiles stay finite.
double open_uniform(Rng& rng) { return rng.uniform() + 0x1.0p-54; }

// n x cols matrix of unit draws, row-major.
std::vector<double> unit_matrix(long long n, int cols, std::uint64_t seed, const RunOptions& opt) {
  std::vector<double> u(static_cast<std::size_t>(n) * cols);
  auto fill = [&](long long r0, long long r1, std::uint64_t s) {
    Rng rng(s);
    long long m = r1 - r0;
    if (m <= 0) return;
    if (opt.sampling == Sampling::MonteCarlo) {
      for (long long r = r0; r < r1; ++r)
        for (int c = 0; c < cols; ++c) u[r * cols + c] = open_uniform(rng);
      return;
    }
    std::vector<long long> perm(m);
    for (int c = 0; c < cols; ++c) {
      std::iota(perm.begin(), perm.end(), 0);
      for (long long k = m - 1; k > 0; --k) std::swap(perm[k], perm[rng.below(k + 1)]);
      for (long long r = 0; r < m; ++r) {
        double v = (double(perm[r]) + rng.uniform()) / double(m);
        u[(r0 + r) * cols + c] = std::clamp(v, 0x1.0p-54, 1.0 - 0x1.0p-53);
      }
    }
  };
  if (opt.staged) {
    long long half = n / 2;
    fill(0, half, mix_seed(seed, "stage", 0));
    fill(half, n, mix_seed(seed, "stage", 1));
  } else {
    fill(0, n, mix_seed(seed, "batch"));
  }
  return u;
}

double scalarize(const std::vector<double>& y, OutputTreatment t) {
  if (y.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (t == OutputTreatment::Scalar) return y[0];
  return std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
}

double eval_point(const BenchmarkModel& m, const std::vector<double>& x, const RunOptions& opt) {
  return scalarize(m.evaluate(x), opt.treatment);
}

std::vector<double> to_inputs(const BenchmarkModel& m, const double* u) {
  std::vector<double> x(m.d_in);
  for (int i = 0; i < m.d_in; ++i) x[i] = m.input_dists[i].quantile(u[i]);
  return x;
}

void finish(SAResult& r) {
  int nan = 0;
  bool neg_var = false;
  for (auto* v : {&r.s1, &r.st, &r.rank_indices, &r.mu_star, &r.sigma, &r.generalized_s1, &r.generalized_st}) {
    if (!*v) continue;
    for (double x : **v)
      if (std::isnan(x)) ++nan;
  }
  if (r.s1)
    for (double x : *r.s1)
      if (x < -0.05) neg_var = true;
  if (r.st)
    for (double x : *r.st)
      if (x < -0.05) neg_var = true;
  r.nan_count = nan;
  r.negative_variance_flag = neg_var;
  auto check_negative = [&](const std::optional<std::vector<double>>& v) {
    if (!v) return;
    for (double x : *v)
      if (x < -0.01) {
        r.warnings.push_back({"negative_index", "estimated index below zero", false, false});
        return;
      }
  };
  check_negative(r.s1);
  check_negative(r.rank_indices);
}

void degenerate(SAResult& r, std::optional<std::vector<double>>& a, int d) {
  a = std::vector<double>(d, std::numeric_limits<double>::quiet_NaN());
  if (std::none_of(r.warnings.begin(), r.warnings.end(), [](auto& w) { return w.code == "degenerate_variance"; }))
    r.warnings.push_back({"degenerate_variance", "output variance below 1e-14", true, false});
}

std::vector<double> midranks(const std::vector<double>& y) {
  std::size_t n = y.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && y[idx[j + 1]] == y[idx[i]]) ++j;
    double mid = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mid;
    i = j + 1;
  }
  return r;
}

struct PickFreeze {
  std::vector<double> fA, fB;
  std::vector<std::vector<double>> fAB;  // per input
};

PickFreeze pick_freeze(const BenchmarkModel& m, long long n, std::uint64_t seed, const RunOptions& opt) {
  int d = m.d_in;
  auto u = unit_matrix(n, 2 * d, seed, opt);
  PickFreeze pf;
  pf.fA.resize(n);
  pf.fB.resize(n);
  pf.fAB.assign(d, std::vector<double>(n));
  std::vector<double> ab(d);
  for (long long r = 0; r < n; ++r) {
    const double* ua = &u[r * 2 * d];
    const double* ub = ua + d;
    auto xa = to_inputs(m, ua);
    auto xb = to_inputs(m, ub);
    pf.fA[r] = eval_point(m, xa, opt);
    pf.fB[r] = eval_point(m, xb, opt);
    for (int i = 0; i < d; ++i) {
      auto x = xa;
      x[i] = xb[i];
      pf.fAB[i][r] = eval_point(m, x, opt);
    }
  }
  return pf;
}

void require_n(long long n, long long min, const char* what) {
  if (n < min)
    throw InsufficientSamples(std::string(what) + " needs at least " + std::to_string(min) + " samples, got " +
                              std::to_string(n));
}

std::vector<double> product_s1(const std::vector<double>& v) {
  double prod = 1.0;
  for (double x : v) prod *= 1.0 + x;
  double var = prod - 1.0;
  std::vector<double> s(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i] / var;
  return s;
}

std::vector<double> product_st(const std::vector<double>& v) {
  double prod = 1.0;
  for (double x : v) prod *= 1.0 + x;
  double var = prod - 1.0;
  std::vector<double> s(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i] * prod / (1.0 + v[i]) / var;
  return s;
}

}  // namespace

BenchmarkModel g_function(const std::vector<double>& a, const std::string& id) {
  BenchmarkModel m;
  m.id = id;
  m.d_in = static_cast<int>(a.size());
  m.d_out = 1;
  m.model_class = "multiplicative";
  m.input_dists.assign(a.size(), InputDist::uniform(0.0, 1.0));
  m.evaluate = [a](const std::vector<double>& x) {
    double p = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) p *= (std::abs(4.0 * x[i] - 2.0) + a[i]) / (1.0 + a[i]);
    return std::vector<double>{p};
  };
  std::vector<double> v;
  for (double ai : a) v.push_back((1.0 / 3.0) / ((1.0 + ai) * (1.0 + ai)));
  m.analytic_s1 = product_s1(v);
  m.analytic_st = product_st(v);
  return m;
}

BenchmarkModel ishigami(double a, double b) {
  BenchmarkModel m;
  m.id = "ishigami";
  m.d_in = 3;
  m.model_class = "mixed";
  m.input_dists.assign(3, InputDist::uniform(-M_PI, M_PI));
  m.evaluate = [a, b](const std::vector<double>& x) {
    return std::vector<double>{std::sin(x[0]) + a * std::pow(std::sin(x[1]), 2) +
                               b * std::pow(x[2], 4) * std::sin(x[0])};
  };
  double pi4 = std::pow(M_PI, 4), pi8 = std::pow(M_PI, 8);
  double D = a * a / 8 + b * pi4 / 5 + b * b * pi8 / 18 + 0.5;
  double D1 = b * pi4 / 5 + b * b * pi8 / 50 + 0.5;
  double D2 = a * a / 8;
  double D13 = b * b * pi8 * (1.0 / 18 - 1.0 / 50);
  m.analytic_s1 = std::vector<double>{D1 / D, D2 / D, 0.0};
  m.analytic_st = std::vector<double>{(D1 + D13) / D, D2 / D, D13 / D};
  return m;
}

BenchmarkModel structural_response() {
  BenchmarkModel m;
  m.id = "structural_response";
  m.d_in = 4;
  m.model_class = "mixed";
  m.input_dists = {InputDist::uniform(-2, 2), InputDist::uniform(0, 3), InputDist::uniform(1, 4),
                   InputDist::uniform(-1, 1)};
  m.evaluate = [](const std::vector<double>& x) {
    return std::vector<double>{x[0] * x[0] * x[0] + x[1] * x[2] + std::exp(0.1 * x[3]) - x[0] * x[3]};
  };
  double v1 = 64.0 / 7.0;
  double v2 = 2.5 * 2.5 * 0.75;
  double v3 = 1.5 * 1.5 * 0.75;
  double v4 = std::sinh(0.2) / 0.2 - std::pow(std::sinh(0.1) / 0.1, 2);
  double v23 = 0.75 * 0.75;
  double v14 = (4.0 / 3.0) * (1.0 / 3.0);
  double V = v1 + v2 + v3 + v4 + v23 + v14;
  m.analytic_s1 = std::vector<double>{v1 / V, v2 / V, v3 / V, v4 / V};
  m.analytic_st = std::vector<double>{(v1 + v14) / V, (v2 + v23) / V, (v3 + v23) / V, (v4 + v14) / V};
  return m;
}

BenchmarkModel cantilever_beam() {
  BenchmarkModel m;
  m.id = "cantilever_beam";
  m.d_in = 4;
  m.model_class = "multiplicative";
  // P [N], L [m], E [Pa], I [m^4]
  m.input_dists = {InputDist::normal(2000, 100), InputDist::normal(2.0, 0.024), InputDist::normal(2e11, 2e10),
                   InputDist::normal(4e-6, 4e-7)};
  m.evaluate = [](const std::vector<double>& x) {
    return std::vector<double>{x[0] * x[1] * x[1] * x[1] / (3.0 * x[2] * x[3])};
  };
  // delta is a product of independent factors g_i(X_i); first and total
  // indices follow from E[g_i] and E[g_i^2].
  std::vector<std::function<double(double)>> g = {[](double p) { return p; }, [](double l) { return l * l * l; },
                                                   [](double e) { return 1.0 / e; }, [](double i) { return 1.0 / i; }};
  std::vector<double> mean(4), second(4);
  for (int k = 0; k < 4; ++k) {
    double mu = m.input_dists[k].a, sd = m.input_dists[k].b;
    auto pdf = [&](double x) { return std::exp(-0.5 * std::pow((x - mu) / sd, 2)) / (sd * std::sqrt(2 * M_PI)); };
    double lo = mu - 8 * sd, hi = mu + 8 * sd;
    using Q = boost::math::quadrature::gauss<double, 30>;
    mean[k] = Q::integrate([&](double x) { return g[k](x) * pdf(x); }, lo, hi);
    second[k] = Q::integrate([&](double x) { return g[k](x) * g[k](x) * pdf(x); }, lo, hi);
  }
  double all_m2 = 1, all_s = 1;
  for (int k = 0; k < 4; ++k) {
    all_m2 *= mean[k] * mean[k];
    all_s *= second[k];
  }
  double V = all_s - all_m2;
  std::vector<double> s1(4), st(4);
  for (int k = 0; k < 4; ++k) {
    double vk = second[k] - mean[k] * mean[k];
    s1[k] = vk * all_m2 / (mean[k] * mean[k]) / V;
    st[k] = vk * all_s / second[k] / V;
  }
  m.analytic_s1 = s1;
  m.analytic_st = st;
  return m;
}

BenchmarkModel thermal_stub() {
  BenchmarkModel m;
  m.id = "thermal_stub";
  m.d_in = 20;
  m.model_class = "multiplicative";
  m.input_dists.assign(20, InputDist::uniform(0, 1));
  std::vector<double> b(20);
  for (int i = 0; i < 20; ++i) b[i] = 1.8 * std::pow(0.75, i);
  m.evaluate = [b](const std::vector<double>& x) {
    double p = 1.0;
    for (std::size_t i = 0; i < b.size(); ++i) p *= 1.0 + b[i] * (x[i] - 0.5);
    return std::vector<double>{p};
  };
  std::vector<double> v;
  for (double bi : b) v.push_back(bi * bi / 12.0);
  m.analytic_s1 = product_s1(v);
  m.analytic_st = product_st(v);
  return m;
}

const std::vector<double>& g_function_a15() {
  static const std::vector<double> a{0, 0.5, 1, 2, 3, 4, 6, 8, 10, 15, 20, 30, 50, 80, 100};
  return a;
}

const std::vector<double>& g_function_a8() {
  static const std::vector<double> a{0, 1, 4.5, 9, 99, 99, 99, 99};
  return a;
}

const std::map<std::string, BenchmarkModel>& benchmark_catalog() {
  static const std::map<std::string, BenchmarkModel> cat = [] {
    std::map<std::string, BenchmarkModel> c;
    for (auto m : {g_function(g_function_a15(), "g_function_15"), g_function(g_function_a8(), "g_function_8"),
                   ishigami(), cantilever_beam(), structural_response(), thermal_stub()})
      c.emplace(m.id, m);
    return c;
  }();
  return cat;
}

const BenchmarkModel& benchmark_model(const std::string& id) {
  auto& c = benchmark_catalog();
  auto it = c.find(id);
  if (it == c.end()) throw UnknownModel("unknown model: " + id);
  return it->second;
}

SAResult sobol_saltelli(const BenchmarkModel& m, long long n, std::uint64_t seed, const RunOptions& opt) {
  require_n(n, 2, "Sobol");
  int d = m.d_in;
  auto pf = pick_freeze(m, n, seed, opt);
  SAResult r;
  r.estimator = "Sobol";
  r.evaluations_used = n * (d + 2);
  double mean = 0;
  for (long long k = 0; k < n; ++k) mean += pf.fA[k] + pf.fB[k];
  mean /= 2.0 * n;
  double var = 0;
  for (long long k = 0; k < n; ++k) var += std::pow(pf.fA[k] - mean, 2) + std::pow(pf.fB[k] - mean, 2);
  var /= 2.0 * n;
  if (!(var >= 1e-14)) {
    degenerate(r, r.s1, d);
    degenerate(r, r.st, d);
  } else {
    std::vector<double> s1(d), st(d);
    for (int i = 0; i < d; ++i) {
      double a = 0, b = 0;
      for (long long k = 0; k < n; ++k) {
        a += (pf.fB[k] - mean) * (pf.fAB[i][k] - pf.fA[k]);
        b += std::pow(pf.fA[k] - pf.fAB[i][k], 2);
      }
      s1[i] = a / n / var;
      st[i] = b / (2.0 * n) / var;
    }
    r.s1 = s1;
    r.st = st;
  }
  finish(r);
  return r;
}

double chatterjee_xi(const std::vector<double>& x, const std::vector<double>& y) {
  std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  auto r = midranks(y);
  double s = 0;
  for (std::size_t j = 0; j + 1 < n; ++j) s += std::abs(r[idx[j + 1]] - r[idx[j]]);
  double nn = double(n);
  return 1.0 - 3.0 * s / (nn * nn - 1.0);
}

SAResult chatterjee(const BenchmarkModel& m, long long n, std::uint64_t seed, const RunOptions& opt) {
  require_n(n, 10, "Chatterjee");
  int d = m.d_in;
  auto u = unit_matrix(n, d, seed, opt);
  std::vector<std::vector<double>> cols(d, std::vector<double>(n));
  std::vector<double> y(n);
  for (long long k = 0; k < n; ++k) {
    auto x = to_inputs(m, &u[k * d]);
    for (int i = 0; i < d; ++i) cols[i][k] = x[i];
    y[k] = eval_point(m, x, opt);
  }
  SAResult r;
  r.estimator = "Chatterjee";
  r.evaluations_used = n;
  bool constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
  if (constant) {
    degenerate(r, r.rank_indices, d);
  } else {
    std::vector<double> xi(d);
    for (int i = 0; i < d; ++i) xi[i] = chatterjee_xi(cols[i], y);
    r.rank_indices = xi;
  }
  finish(r);
  return r;
}

SAResult cvm(const BenchmarkModel& m, long long n, std::uint64_t seed, const RunOptions& opt) {
  require_n(n, 10, "CVM");
  int d = m.d_in;
  auto pf = pick_freeze(m, n, seed, opt);
  SAResult r;
  r.estimator = "CVM";
  r.evaluations_used = n * (d + 2);
  std::vector<double> xi(d);
  for (int i = 0; i < d; ++i) {
    std::vector<double> w;
    w.reserve(3 * n);
    w.insert(w.end(), pf.fA.begin(), pf.fA.end());
    w.insert(w.end(), pf.fB.begin(), pf.fB.end());
    w.insert(w.end(), pf.fAB[i].begin(), pf.fAB[i].end());
    std::sort(w.begin(), w.end());
    std::vector<double> z(n);
    for (long long k = 0; k < n; ++k) z[k] = std::max(pf.fB[k], pf.fAB[i][k]);
    std::sort(z.begin(), z.end());
    double num = 0, den = 0;
    for (double t : w) {
      double F = double(std::upper_bound(w.begin(), w.end(), t) - w.begin()) / double(w.size());
      double joint = double(std::upper_bound(z.begin(), z.end(), t) - z.begin()) / double(n);
      num += joint - F * F;
      den += F * (1.0 - F);
    }
    xi[i] = den > 0 ? num / den : std::numeric_limits<double>::quiet_NaN();
  }
  if (std::any_of(xi.begin(), xi.end(), [](double v) { return std::isnan(v); }))
    degenerate(r, r.rank_indices, d);
  else
    r.rank_indices = xi;
  finish(r);
  return r;
}

SAResult morris(const BenchmarkModel& m, long long trajectories, int levels, std::uint64_t seed,
                const RunOptions& opt) {
  require_n(trajectories, 2, "Morris");
  if (levels < 4 || levels % 2 != 0) throw ConfigError("Morris levels must be even and at least 4");
  int d = m.d_in;
  int step = levels / 2;
  // Levels sit at cell midpoints (k + 0.5) / levels, so a jump of `step` levels moves u by step / levels.
  double delta = double(step) / double(levels);
  Rng rng(mix_seed(seed, "morris"));
  std::vector<std::vector<double>> ee(d);
  auto to_x = [&](const std::vector<int>& k) {
    std::vector<double> x(d);
    for (int i = 0; i < d; ++i) x[i] = m.input_dists[i].quantile((k[i] + 0.5) / double(levels));
    return x;
  };
  for (long long t = 0; t < trajectories; ++t) {
    std::vector<int> k(d);
    for (int i = 0; i < d; ++i) k[i] = static_cast<int>(rng.below(levels));
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    for (int j = d - 1; j > 0; --j) std::swap(order[j], order[rng.below(j + 1)]);
    double y = eval_point(m, to_x(k), opt);
    for (int i : order) {
      int sign = k[i] + step <= levels - 1 ? 1 : -1;
      k[i] += sign * step;
      double y2 = eval_point(m, to_x(k), opt);
      ee[i].push_back((y2 - y) / (sign * delta));
      y = y2;
    }
  }
  SAResult r;
  r.estimator = "Morris";
  r.evaluations_used = trajectories * (d + 1);
  std::vector<double> mu(d), sg(d);
  for (int i = 0; i < d; ++i) {
    double sa = 0, s = 0;
    for (double e : ee[i]) {
      sa += std::abs(e);
      s += e;
    }
    double n = double(ee[i].size());
    mu[i] = sa / n;
    double mean = s / n, ss = 0;
    for (double e : ee[i]) ss += (e - mean) * (e - mean);
    sg[i] = std::sqrt(ss / (n - 1));
  }
  r.mu_star = mu;
  r.sigma = sg;
  if (d == 1) r.warnings.push_back({"screening_low_dim", "screening a single input", false, false});
  finish(r);
  return r;
}

namespace {

std::vector<double> jitter(const std::vector<double>& ref, Rng& rng, double noise) {
  std::vector<double> v(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) v[i] = ref[i] + noise * rng.normal();
  return v;
}

void require_reference(const BenchmarkModel& m, const char* what) {
  if (!m.analytic_s1 || !m.analytic_st)
    throw Unrecoverable(std::string(what) + " executor is simulated and needs analytic references for " + m.id);
}

}  // namespace

SAResult simulated_pce(const BenchmarkModel& m, long long n, std::uint64_t seed, double noise) {
  require_n(n, 1, "PCE_SA");
  require_reference(m, "PCE_SA");
  Rng rng(mix_seed(seed, "pce"));
  SAResult r;
  r.estimator = "PCE_SA";
  r.simulated = true;
  r.evaluations_used = n;
  r.s1 = jitter(*m.analytic_s1, rng, noise);
  r.st = jitter(*m.analytic_st, rng, noise);
  finish(r);
  return r;
}

SAResult simulated_generalized_sobol(const BenchmarkModel& m, long long n, std::uint64_t seed, double noise) {
  require_n(n, 1, "Generalized_Sobol");
  require_reference(m, "Generalized_Sobol");
  Rng rng(mix_seed(seed, "gsobol"));
  SAResult r;
  r.estimator = "Generalized_Sobol";
  r.simulated = true;
  r.evaluations_used = n * (m.d_in + 2);
  r.generalized_s1 = jitter(*m.analytic_s1, rng, noise);
  r.generalized_st = jitter(*m.analytic_st, rng, noise);
  finish(r);
  return r;
}

RunOptions run_options_for(const ActionTuple& a) {
  RunOptions o;
  if (a.task != Task::SA || a.dims.size() != 4) return o;
  o.sampling = a.dims[0] == "LatinHypercube" ? Sampling::LatinHypercube : Sampling::MonteCarlo;
  o.staged = a.dims[2] == "Staged";
  o.treatment = a.dims[3] == "Aggregated" ? OutputTreatment::Aggregated : OutputTreatment::Scalar;
  return o;
}

SAResult run_estimator(const std::string& est, const BenchmarkModel& m, const std::map<std::string, double>& hp,
                       std::uint64_t seed, const RunOptions& opt) {
  auto it = hp.find("n_samples");
  if (it == hp.end()) throw InsufficientSamples("n_samples not set");
  auto n = static_cast<long long>(std::llround(it->second));
  if (est == "Sobol") return sobol_saltelli(m, n, seed, opt);
  if (est == "Chatterjee") return chatterjee(m, n, seed, opt);
  if (est == "CVM") return cvm(m, n, seed, opt);
  if (est == "Morris") {
    auto lv = hp.find("levels");
    int levels = lv == hp.end() ? 4 : static_cast<int>(std::lround(lv->second));
    return morris(m, n, levels, seed, opt);
  }
  if (est == "PCE_SA") return simulated_pce(m, n, seed);
  if (est == "Generalized_Sobol") return simulated_generalized_sobol(m, n, seed);
  throw UnknownEstimator("no executor for estimator: " + est);
}

std::string index_table_csv(const SAResult& r) {
  std::vector<std::pair<std::string, const std::vector<double>*>> cols;
  for (auto& name : r.populated_attributes()) cols.emplace_back(name, r.attribute(name));
  std::ostringstream os;
  os.precision(10);
  os << "input";
  for (auto& c : cols) os << "," << c.first;
  os << "\n";
  std::size_t d = cols.empty() ? 0 : cols.front().second->size();
  for (std::size_t i = 0; i < d; ++i) {
    os << "X" << (i + 1);
    for (auto& c : cols) os << "," << (*c.second)[i];
    os << "\n";
  }
  return os.str();
}

}  // namespace driftguard
