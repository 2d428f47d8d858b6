#include "stlab/local_time_law.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stlab/laplace.hpp"
#include "stlab/special.hpp"

namespace stlab {

namespace {

using cplx = std::complex<double>;

cplx log1p_c(cplx w) {
  if (std::abs(w) > 1e-4) return std::log(1.0 + w);
  cplx w2 = w * w;
  return w - w2 / 2.0 + w2 * w / 3.0 - w2 * w2 / 4.0 + w2 * w2 * w / 5.0;
}

cplx expm1_c(cplx z) {
  if (std::abs(z) > 1e-4) return std::exp(z) - 1.0;
  cplx z2 = z * z;
  return z + z2 / 2.0 + z2 * z / 6.0 + z2 * z2 / 24.0;
}

// transform of P(X > x):  (s^b + 1/b)^{-1/b},  b = gamma-1
cplx transform_sf(cplx s, double b) {
  return std::pow(std::pow(s, b) + 1.0 / b, -1.0 / b);
}

// transform of P(X <= x):  1/s - (s^b + 1/b)^{-1/b}, rearranged to avoid the
// cancellation of the two 1/s-sized terms at large |s|
cplx transform_cdf(cplx s, double b) {
  cplx w = (1.0 / b) * std::pow(s, -b);
  return -expm1_c(-log1p_c(w) / b) / s;
}

struct PchipData {
  std::vector<double> slopes;
};

// Fritsch-Carlson monotone cubic slopes.
std::vector<double> pchip_slopes(const std::vector<double>& x,
                                 const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> m(n, 0.0);
  if (n < 2) return m;
  std::vector<double> h(n - 1), d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    d[i] = (y[i + 1] - y[i]) / h[i];
  }
  m[0] = d[0];
  m[n - 1] = d[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (d[i - 1] * d[i] <= 0.0) {
      m[i] = 0.0;
    } else {
      double w1 = 2.0 * h[i] + h[i - 1];
      double w2 = h[i] + 2.0 * h[i - 1];
      m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
  }
  return m;
}

double hermite(double x0, double x1, double y0, double y1, double m0,
               double m1, double x) {
  double h = x1 - x0;
  double t = (x - x0) / h;
  double t2 = t * t, t3 = t2 * t;
  return y0 * (2.0 * t3 - 3.0 * t2 + 1.0) + h * m0 * (t3 - 2.0 * t2 + t) +
         y1 * (-2.0 * t3 + 3.0 * t2) + h * m1 * (t3 - t2);
}

double interp_pchip(const std::vector<double>& xs, const std::vector<double>& ys,
                    const std::vector<double>& ms, double x) {
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t i = (it == xs.begin()) ? 0 : (it - xs.begin() - 1);
  if (i + 1 >= xs.size()) i = xs.size() - 2;
  return hermite(xs[i], xs[i + 1], ys[i], ys[i + 1], ms[i], ms[i + 1], x);
}

}  // namespace

double LocalTimeLawTable::survival_by_talbot(double x, const ModelParams& p,
                                             int M) {
  const double b = p.gm1();
  return talbot_invert([b](cplx s) { return transform_sf(s, b); }, x, M);
}

// G(x) = sum_{k>=0} (1/b)_k (-z)^k / (k! Gamma(bk+1)), z = x^b/b.
// Entire series; reliable while the cancellation stays below ~1e12.
double LocalTimeLawTable::survival_by_series(double x, const ModelParams& p) {
  const double b = p.gm1();
  const double z = std::pow(x, b) / b;
  double sum = 0.0, max_term = 0.0;
  double log_poch = 0.0;  // log (1/b)_k
  double log_zk = 0.0;    // k log z
  const double lz = std::log(z);
  for (int k = 0; k < 4000; ++k) {
    if (k > 0) {
      log_poch += std::log(1.0 / b + (k - 1));
      log_zk += lz;
    }
    double lt = log_poch + log_zk - lgamma_fn(k + 1.0) - lgamma_fn(b * k + 1.0);
    double term = ((k % 2) ? -1.0 : 1.0) * std::exp(lt);
    sum += term;
    max_term = std::max(max_term, std::fabs(term));
    if (k > 4 && std::fabs(term) < 1e-18 * std::max(1.0, std::fabs(sum)) &&
        std::fabs(term) < 1e-18 * max_term)
      break;
  }
  // the result is a probability; deep cancellation or blow-up means the
  // series is out of its reliable range
  if (max_term > 1e8 || !(std::fabs(sum) <= 1.0 + 1e-9))
    return std::numeric_limits<double>::quiet_NaN();
  return sum;
}

// Large-x expansion G(x) ~ sum_{j>=1} (-1)^j (1/b)_j / j! * z^{-1/b-j} / Gamma(-jb).
double LocalTimeLawTable::survival_by_asymptotic(double x, const ModelParams& p,
                                                 int terms) {
  const double b = p.gm1();
  const double z = std::pow(x, b) / b;
  double sum = 0.0;
  double poch = 1.0, fact = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= terms; ++j) {
    poch *= (1.0 / b + (j - 1));
    fact *= j;
    double t = ((j % 2) ? -1.0 : 1.0) * (poch / fact) *
               std::pow(z, -1.0 / b - j) * rgamma_fn(-j * b);
    if (std::fabs(t) > prev) break;  // divergent part of the expansion
    sum += t;
    if (t != 0.0) prev = std::fabs(t);
  }
  return sum;
}

LocalTimeLawTable LocalTimeLawTable::build(const ModelParams& p,
                                           std::size_t resolution) {
  if (resolution < 256)
    throw std::domain_error("LocalTimeLawTable: resolution must be >= 256");
  const double g = p.gamma;
  const double b = p.gm1();

  LocalTimeLawTable t;
  t.gamma_ = g;
  t.left_coef_ = 1.0 / (b * b * gamma_fn(g));
  t.right_coef_ =
      (g < 2.0) ? tail_asymptotics(TailKind::local_time_right, 1.0, 0.0, p) : 0.0;

  // span the CDF from ~1e-7 up to survival ~1e-8: the junction then sits
  // deep enough that the power asymptote has converged, so the stitched
  // tail carries the true coefficient rather than a finite-x one
  const double x_min = std::pow(1e-7 / t.left_coef_, 1.0 / b);
  const double x_max = (g < 2.0) ? std::pow(t.right_coef_ / 1e-8, 1.0 / g)
                                 : -std::log(1e-8);
  const double lx0 = std::log(x_min), lx1 = std::log(x_max);

  t.xs_.resize(resolution);
  t.us_.resize(resolution);
  t.res_.resize(resolution);
  double worst = 0.0, worst_x = x_min;
  for (std::size_t i = 0; i < resolution; ++i) {
    double x = std::exp(lx0 + (lx1 - lx0) * i / (resolution - 1.0));
    double u, residual;
    // invert whichever side is small: CDF transform on the left flank,
    // survival transform on the right
    double probe = talbot_invert(
        [b](cplx s) { return transform_cdf(s, b); }, x, 24);
    if (probe < 0.5) {
      double f28 = talbot_invert([b](cplx s) { return transform_cdf(s, b); }, x, 28);
      double f32 = talbot_invert([b](cplx s) { return transform_cdf(s, b); }, x, 32);
      u = std::clamp(f28, 0.0, 1.0);
      residual = std::fabs(f28 - f32);
      if (g == 2.0) residual = std::fabs(f28 - (-std::expm1(-x)));
    } else {
      double g28 = talbot_invert([b](cplx s) { return transform_sf(s, b); }, x, 28);
      double g32 = talbot_invert([b](cplx s) { return transform_sf(s, b); }, x, 32);
      u = std::clamp(1.0 - g28, 0.0, 1.0);
      residual = std::fabs(g28 - g32);
      if (g == 2.0) residual = std::fabs(g28 - std::exp(-x));
    }
    t.xs_[i] = x;
    t.us_[i] = u;
    t.res_[i] = residual;
    if (residual > worst) {
      worst = residual;
      worst_x = x;
    }
  }
  if (worst > 1e-6) {
    std::ostringstream os;
    os << "LocalTimeLawTable: inversion residual " << worst << " at x = "
       << worst_x << " exceeds 1e-6";
    throw std::runtime_error(os.str());
  }

  // strict monotonicity (inversion noise may tie adjacent nodes)
  for (std::size_t i = 1; i < t.us_.size(); ++i) {
    if (t.us_[i] <= t.us_[i - 1]) {
      if (t.us_[i] < t.us_[i - 1] - 1e-10)
        throw std::runtime_error("LocalTimeLawTable: non-monotone CDF");
      t.us_[i] = std::nextafter(t.us_[i - 1], 1.0);
    }
  }

  // the right tail is stitched where the residual rule would cut, or at the
  // end of the grid; residuals above 1e-6 already aborted the build, so the
  // junction is the last node (far beyond the 0.999 floor)
  t.junction_ = t.us_.size() - 1;

  t.diag_.max_residual = worst;
  t.diag_.worst_node_x = worst_x;
  t.finalize();
  return t;
}

void LocalTimeLawTable::finalize() {
  lxs_.resize(xs_.size());
  for (std::size_t i = 0; i < xs_.size(); ++i) lxs_[i] = std::log(xs_[i]);
  dydu_ = pchip_slopes(us_, lxs_);
  dudy_ = pchip_slopes(lxs_, us_);

  const double xj = xs_.back(), uj = us_.back();
  diag_.junction_x = xj;
  diag_.junction_u = uj;
  // empirical log-slope of the implied survival just outside the junction
  double x1 = xj * 1.05, x2 = xj * 1.6;
  diag_.junction_slope =
      (std::log(sf(x2)) - std::log(sf(x1))) / (std::log(x2) - std::log(x1));
  if (gamma_ < 2.0)
    diag_.junction_coef_rel_err =
        std::fabs(std::pow(xj, gamma_) * (1.0 - uj) / right_coef_ - 1.0);
  else
    diag_.junction_coef_rel_err = 0.0;
}

double LocalTimeLawTable::quantile(double u) const {
  if (!(u > 0.0) || !(u < 1.0))
    throw std::domain_error("LocalTimeLawTable::quantile: u outside (0,1)");
  if (u <= us_.front())
    return xs_.front() * std::pow(u / us_.front(), 1.0 / (gamma_ - 1.0));
  if (u >= us_.back()) {
    double ratio = (1.0 - us_.back()) / (1.0 - u);
    if (gamma_ < 2.0) return xs_.back() * std::pow(ratio, 1.0 / gamma_);
    return xs_.back() + std::log(ratio);
  }
  return std::exp(interp_pchip(us_, lxs_, dydu_, u));
}

double LocalTimeLawTable::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x <= xs_.front())
    return us_.front() * std::pow(x / xs_.front(), gamma_ - 1.0);
  if (x >= xs_.back()) {
    if (gamma_ < 2.0)
      return 1.0 - (1.0 - us_.back()) * std::pow(xs_.back() / x, gamma_);
    return 1.0 - (1.0 - us_.back()) * std::exp(-(x - xs_.back()));
  }
  double u = interp_pchip(lxs_, us_, dudy_, std::log(x));
  return std::clamp(u, 0.0, 1.0);
}

double LocalTimeLawTable::level_scale(double a) const {
  if (!(a > 0.0)) throw std::domain_error("level_scale: a must be > 0");
  return std::pow(a, 1.0 / (gamma_ - 1.0));
}

double LocalTimeLawTable::sample(double a, RandomStream& rng) const {
  return level_scale(a) * quantile(rng.u01());
}

double LocalTimeLawTable::mean() const {
  return std::pow(gamma_ - 1.0, 1.0 / (gamma_ - 1.0));
}

double LocalTimeLawTable::tail_expectation(double threshold) const {
  const double xj = xs_.back(), uj = us_.back();
  double acc = threshold * sf(threshold);
  if (threshold < xj) {
    // integrate the tabulated survival between threshold and the junction
    const int steps = 2000;
    double l0 = std::log(std::max(threshold, xs_.front() * 1e-6));
    double l1 = std::log(xj);
    if (threshold <= 0.0) l0 = std::log(xs_.front()) - 14.0;
    double prev_x = std::exp(l0), prev_g = sf(prev_x);
    for (int i = 1; i <= steps; ++i) {
      double x = std::exp(l0 + (l1 - l0) * i / steps);
      double gx = sf(x);
      acc += 0.5 * (prev_g + gx) * (x - prev_x);
      prev_x = x;
      prev_g = gx;
    }
    if (gamma_ < 2.0)
      acc += (1.0 - uj) * xj / (gamma_ - 1.0);
    else
      acc += (1.0 - uj);
  } else {
    if (gamma_ < 2.0)
      acc += (1.0 - uj) * std::pow(xj, gamma_) *
             std::pow(threshold, 1.0 - gamma_) / (gamma_ - 1.0);
    else
      acc += (1.0 - uj) * std::exp(-(threshold - xj));
  }
  return acc;
}

std::string LocalTimeLawTable::cache_filename(const ModelParams& p,
                                              std::size_t resolution) {
  std::ostringstream os;
  os << "law_gamma" << p.gamma << "_res" << resolution << ".csv";
  return os.str();
}

void LocalTimeLawTable::save(const std::string& path) const {
  std::ostringstream os;
  os << "# stlab local-time law cache, schema 1\n";
  os.precision(17);
  os << "gamma," << gamma_ << "\n";
  os << "resolution," << xs_.size() << "\n";
  os << "x,u,residual\n";
  for (std::size_t i = 0; i < xs_.size(); ++i)
    os << xs_[i] << "," << us_[i] << "," << res_[i] << "\n";
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    f << os.str();
  }
  std::filesystem::rename(tmp, path);
}

bool LocalTimeLawTable::try_load(const std::string& path, const ModelParams& p,
                                 std::size_t resolution,
                                 LocalTimeLawTable& out) {
  std::ifstream f(path);
  if (!f) return false;
  std::string line;
  if (!std::getline(f, line) || line.find("schema 1") == std::string::npos)
    return false;
  double g = 0.0;
  std::size_t n = 0;
  if (!std::getline(f, line) || std::sscanf(line.c_str(), "gamma,%lf", &g) != 1)
    return false;
  if (!std::getline(f, line) ||
      std::sscanf(line.c_str(), "resolution,%zu", &n) != 1)
    return false;
  if (std::fabs(g - p.gamma) > 1e-12) return false;
  if (!std::getline(f, line) || line != "x,u,residual") return false;

  LocalTimeLawTable t;
  t.gamma_ = p.gamma;
  t.left_coef_ = 1.0 / (p.gm1() * p.gm1() * gamma_fn(p.gamma));
  t.right_coef_ = (p.gamma < 2.0)
                      ? tail_asymptotics(TailKind::local_time_right, 1.0, 0.0, p)
                      : 0.0;
  double x, u, r;
  while (std::getline(f, line)) {
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &u, &r) != 3) return false;
    t.xs_.push_back(x);
    t.us_.push_back(u);
    t.res_.push_back(r);
  }
  if (t.xs_.size() != n || t.xs_.size() < 8) return false;
  for (std::size_t i = 1; i < t.xs_.size(); ++i)
    if (t.xs_[i] <= t.xs_[i - 1] || t.us_[i] <= t.us_[i - 1]) return false;
  // the cache stores the table as truncated at the junction
  (void)resolution;
  t.junction_ = t.xs_.size() - 1;
  for (double rr : t.res_) t.diag_.max_residual = std::max(t.diag_.max_residual, rr);
  t.finalize();
  out = std::move(t);
  return true;
}

}  // namespace stlab
