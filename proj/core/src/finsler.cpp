#include "rp3/finsler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "rp3/errors.hpp"
#include "rp3/integrator.hpp"

namespace rp3 {

void CurvatureProfile::validate() const {
  if (t.size() < 2 || t.size() != k.size()) throw DomainError("CurvatureProfile: need matching t and K with >= 2 knots");
  if (t.front() != 0) throw DomainError("CurvatureProfile: knots must start at 0");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(k[i])) throw DomainError("CurvatureProfile: non-finite sample");
    if (i > 0 && !(t[i] > t[i - 1])) throw DomainError("CurvatureProfile: knots must increase strictly");
    if (k[i] < 0) throw DomainError("CurvatureProfile: K must be non-negative");
    if (k[i] < k_lo || k[i] > k_hi)
      throw DomainError(fmt::format("CurvatureProfile: K = {} outside the declared bounds [{}, {}]", k[i], k_lo, k_hi));
  }
  if (!(reversibility >= 1)) throw DomainError("CurvatureProfile: reversibility must be >= 1");
}

double CurvatureProfile::operator()(double s) const {
  if (s <= t.front()) return k.front();
  if (s >= t.back()) return k.back();
  const auto it = std::upper_bound(t.begin(), t.end(), s);
  const std::size_t i = std::size_t(it - t.begin()) - 1;
  const double w = (s - t[i]) / (t[i + 1] - t[i]);
  return (1 - w) * k[i] + w * k[i + 1];
}

double CurvatureProfile::min_k() const { return *std::min_element(k.begin(), k.end()); }
double CurvatureProfile::max_k() const { return *std::max_element(k.begin(), k.end()); }

bool CurvatureProfile::pinched() const {
  const double r = reversibility;
  const double lo = (r / (r + 1)) * (r / (r + 1));
  return min_k() > lo && max_k() <= 1;
}

CurvatureProfile CurvatureProfile::constant(double value, double length) {
  if (!(length > 0) || !std::isfinite(length)) throw DomainError("CurvatureProfile: length must be positive");
  CurvatureProfile p;
  p.t = {0, length};
  p.k = {value, value};
  p.validate();
  return p;
}

double rotation_angle(const CurvatureProfile& p, double theta0) {
  p.validate();
  if (!std::isfinite(theta0)) throw DomainError("rotation_angle: theta0 must be finite");
  using V1 = Eigen::Matrix<double, 1, 1>;
  V1 th(theta0);
  const IntegratorOptions opt{1e-14, 1e-14, 0, 0, 5'000'000};
  // K is only piecewise smooth, so integrate knot to knot.
  for (std::size_t i = 0; i + 1 < p.t.size(); ++i) {
    const double ta = p.t[i], tb = p.t[i + 1], ka = p.k[i], kb = p.k[i + 1];
    auto f = [&](double s, const V1& y) {
      const double w = (s - ta) / (tb - ta);
      const double kk = (1 - w) * ka + w * kb;
      const double c = std::cos(y[0]), sn = std::sin(y[0]);
      return V1(kk * c * c + sn * sn);
    };
    th = dop853<1>(f, ta, th, tb, opt);
  }
  return th[0] - theta0;
}

namespace {

// The rotation is pi-periodic in theta0: scan, then polish the best cell.
template <class F>
double min_over_theta(F&& total) {
  constexpr int n = 64;
  const double h = std::numbers::pi / n;
  int best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double v = total(h * i);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  const auto res = boost::math::tools::brent_find_minima(total, (best - 1) * h, (best + 1) * h, 50);
  return std::min(best_v, res.second);
}

}  // namespace

double min_rotation(const CurvatureProfile& p) {
  return min_over_theta([&](double th) { return rotation_angle(p, th); });
}

LoopBound loop_index_bound(const std::vector<CurvatureProfile>& loops) {
  if (loops.empty()) throw DomainError("loop_index_bound: no loops given");
  for (std::size_t j = 0; j < loops.size(); ++j) {
    const auto& l = loops[j];
    l.validate();
    if (!(l.length() > std::numbers::pi))
      throw DomainError(fmt::format("loop_index_bound: loop {} has length {} <= pi", j, l.length()));
    if (l.min_k() < 1)
      throw DomainError(fmt::format("loop_index_bound: K = {} < 1 on loop {}; expected normalized 1 <= K", l.min_k(), j));
  }
  LoopBound out;
  out.delta_theta = min_over_theta([&](double th0) {
    double th = th0;
    for (const auto& l : loops) th += rotation_angle(l, th);
    return th - th0;
  });
  const double pi = std::numbers::pi;
  const int k = int(std::ceil(out.delta_theta / (2 * pi))) - 1;
  out.mu_lower = 2 * std::max(k, 0) + 1;
  out.exceeds_four_pi = out.delta_theta > 4 * pi;
  return out;
}

CurvatureProfile read_profile_csv(std::istream& is) {
  CurvatureProfile p;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw ParseError(fmt::format("profile line {}: expected two columns", n));
    const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
    std::size_t ea = 0, eb = 0;
    double ta = 0, kb = 0;
    try {
      ta = std::stod(a, &ea);
      kb = std::stod(b, &eb);
    } catch (const std::exception&) {
      if (p.t.empty() && n == 1) continue;  // header row
      throw ParseError(fmt::format("profile line {}: not a number", n));
    }
    if (ea != a.size() || eb != b.size()) throw ParseError(fmt::format("profile line {}: trailing characters", n));
    p.t.push_back(ta);
    p.k.push_back(kb);
  }
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ParseError(std::string("profile: ") + e.what());
  }
  return p;
}

CurvatureProfile load_profile_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("load_profile_csv: cannot open " + path.string());
  return read_profile_csv(f);
}

}  // namespace rp3
