// Galerkin discretization of the asymptotic operator -J0 d/dt - S(t) in the
// real orthonormal basis {1, sqrt2 cos 2 pi k t, sqrt2 sin 2 pi k t} (x) R^2.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "rp3/errors.hpp"
#include "rp3/index.hpp"

namespace rp3 {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

struct Coefficients {
  std::vector<double> c, s;  // (1/M) sum S cos, (1/M) sum S sin, index 0..2n
  double cos_at(int p) const { return c[std::abs(p)]; }
  double sin_at(int p) const { return p >= 0 ? s[p] : -s[-p]; }
};

Coefficients fourier(const std::vector<double>& f, int pmax, const std::vector<double>& ct,
                     const std::vector<double>& st) {
  const std::size_t m = f.size();
  Coefficients out;
  out.c.assign(pmax + 1, 0.0);
  out.s.assign(pmax + 1, 0.0);
  for (int p = 0; p <= pmax; ++p) {
    double a = 0, b = 0;
    std::size_t idx = 0;
    for (std::size_t l = 0; l < m; ++l) {
      a += f[l] * ct[idx];
      b += f[l] * st[idx];
      idx += std::size_t(p);
      if (idx >= m) idx %= m;
    }
    out.c[p] = a / double(m);
    out.s[p] = b / double(m);
  }
  return out;
}

// Basis function index f: 0 constant, 2k-1 cosine k, 2k sine k.
struct Mode {
  int type;  // 0 const, 1 cos, 2 sin
  int k;
};

Mode mode_of(int f) {
  if (f == 0) return {0, 0};
  return {(f % 2 == 1) ? 1 : 2, (f + 1) / 2};
}

double inner(const Mode& a, const Mode& b, const Coefficients& q) {
  constexpr double r2 = std::numbers::sqrt2;
  if (a.type == 0 && b.type == 0) return q.cos_at(0);
  if (a.type == 0) return r2 * (b.type == 1 ? q.cos_at(b.k) : q.sin_at(b.k));
  if (b.type == 0) return r2 * (a.type == 1 ? q.cos_at(a.k) : q.sin_at(a.k));
  if (a.type == 1 && b.type == 1) return q.cos_at(a.k - b.k) + q.cos_at(a.k + b.k);
  if (a.type == 2 && b.type == 2) return q.cos_at(a.k - b.k) - q.cos_at(a.k + b.k);
  if (a.type == 2) return q.sin_at(a.k + b.k) + q.sin_at(a.k - b.k);
  return q.sin_at(a.k + b.k) + q.sin_at(b.k - a.k);
}

struct Eigenpair {
  double nu;
  std::vector<double> z;
};

int winding_of(const std::vector<double>& z, int n, int m) {
  const int grid = 8 * (n + 1);
  std::vector<double> x(grid), y(grid);
  std::vector<double> ct(grid), st(grid);
  for (int g = 0; g < grid; ++g) {
    ct[g] = std::numbers::sqrt2 * std::cos(two_pi * g / grid);
    st[g] = std::numbers::sqrt2 * std::sin(two_pi * g / grid);
  }
  double vmax = 0, vmin = 1e300;
  for (int g = 0; g < grid; ++g) {
    double a = z[0], b = z[m];
    int idx = 0;
    for (int k = 1; k <= n; ++k) {
      idx += g;
      if (idx >= grid) idx -= grid;
      const double c = ct[idx], s = st[idx];
      a += z[2 * k - 1] * c + z[2 * k] * s;
      b += z[m + 2 * k - 1] * c + z[m + 2 * k] * s;
    }
    x[g] = a;
    y[g] = b;
    const double r = std::hypot(a, b);
    vmax = std::max(vmax, r);
    vmin = std::min(vmin, r);
  }
  if (vmin < 1e-8 * vmax)
    throw NumericalError("asymptotic_spectrum: eigenvector vanishes, winding undefined");
  double total = 0;
  for (int g = 0; g < grid; ++g) {
    const int h = (g + 1) % grid;
    const double d = std::atan2(x[g] * y[h] - y[g] * x[h], x[g] * x[h] + y[g] * y[h]);
    if (std::abs(d) >= 0.5 * std::numbers::pi)
      throw NumericalError("asymptotic_spectrum: eigenvector under-resolved on the winding grid");
    total += d;
  }
  const double w = total / two_pi;
  if (std::abs(w - std::round(w)) > 1e-6) throw NumericalError("asymptotic_spectrum: non-integer winding");
  return int(std::round(w));
}

}  // namespace

AsymptoticSpectrum asymptotic_spectrum(const std::vector<Mat2>& s, int n_modes) {
  const int n = n_modes;
  if (n < 64) throw DomainError("asymptotic_spectrum: n_modes must be >= 64");
  if (s.size() < std::size_t(4 * n))
    throw DomainError("asymptotic_spectrum: need at least 4 n_modes samples of S");
  for (const auto& m : s)
    if (!m.allFinite() || std::abs(m(0, 1) - m(1, 0)) > 1e-12 * std::max(1.0, m.norm()))
      throw DomainError("asymptotic_spectrum: S must be finite and symmetric");

  const std::size_t big_m = s.size();
  std::vector<double> ct(big_m), st(big_m);
  for (std::size_t l = 0; l < big_m; ++l) {
    ct[l] = std::cos(two_pi * double(l) / double(big_m));
    st[l] = std::sin(two_pi * double(l) / double(big_m));
  }
  std::vector<double> s00(big_m), s01(big_m), s11(big_m);
  for (std::size_t l = 0; l < big_m; ++l) {
    s00[l] = s[l](0, 0);
    s01[l] = 0.5 * (s[l](0, 1) + s[l](1, 0));
    s11[l] = s[l](1, 1);
  }
  const Coefficients q[3] = {fourier(s00, 2 * n, ct, st), fourier(s01, 2 * n, ct, st),
                             fourier(s11, 2 * n, ct, st)};

  const int m = 2 * n + 1;
  const int dim = 2 * m;
  std::vector<double> a(std::size_t(dim) * dim, 0.0);
  auto at = [&](int r, int c) -> double& { return a[std::size_t(c) * dim + r]; };
  for (int fa = 0; fa < m; ++fa) {
    const Mode ma = mode_of(fa);
    for (int fb = 0; fb <= fa; ++fb) {
      const Mode mb = mode_of(fb);
      const double e00 = inner(ma, mb, q[0]);
      const double e01 = inner(ma, mb, q[1]);
      const double e11 = inner(ma, mb, q[2]);
      at(fa, fb) = at(fb, fa) = -e00;
      at(m + fa, m + fb) = at(m + fb, m + fa) = -e11;
      at(fa, m + fb) = at(m + fb, fa) = -e01;
      at(m + fa, fb) = at(fb, m + fa) = -e01;
    }
  }
  for (int k = 1; k <= n; ++k) {
    const int c = 2 * k - 1, sn = 2 * k;
    const double w = two_pi * k;
    at(m + sn, c) += w;
    at(c, m + sn) += w;
    at(sn, m + c) -= w;
    at(m + c, sn) -= w;
  }

  // Householder tridiagonalization in Eigen, then MRRR on the tridiagonal
  // for the window only. The dense LAPACK drivers are avoided because some
  // OpenBLAS kernel selections return wrong eigenvectors for them.
  const Eigen::Map<const Eigen::MatrixXd> amat(a.data(), dim, dim);
  const Eigen::Tridiagonalization<Eigen::MatrixXd> tri(amat);
  const Eigen::VectorXd diag = tri.diagonal(), sub = tri.subDiagonal();
  const double anorm = amat.cwiseAbs().colwise().sum().maxCoeff();

  AsymptoticSpectrum out;
  out.n_modes = n;
  const double window_cap = 0.25 * two_pi * n;
  for (double window = 4 * std::numbers::pi; window <= window_cap; window *= 2) {
    Eigen::VectorXd d = diag, e(dim);
    e.head(dim - 1) = sub;
    e[dim - 1] = 0;
    std::vector<double> w(dim), zt(std::size_t(dim) * dim);
    std::vector<lapack_int> support(2 * std::size_t(dim));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'V', dim, d.data(), e.data(), -window, window, 0,
                                           0, 0.0, &found, w.data(), zt.data(), dim, support.data());
    if (info != 0) throw NumericalError("asymptotic_spectrum: eigensolver failed");
    const Eigen::MatrixXd zmat = tri.matrixQ() * Eigen::Map<const Eigen::MatrixXd>(zt.data(), dim, found);
    for (lapack_int i = 0; i < found; ++i)
      if ((amat * zmat.col(i) - w[i] * zmat.col(i)).norm() > 1e-9 * anorm)
        throw NumericalError("asymptotic_spectrum: eigenpair residual check failed");
    std::vector<double> z(zmat.data(), zmat.data() + zmat.size());

    bool has_neg = false, has_nonneg = false;
    for (lapack_int i = 0; i < found; ++i) (w[i] < 0 ? has_neg : has_nonneg) = true;
    if (!(has_neg && has_nonneg)) continue;

    std::vector<Eigenpair> pairs;
    for (lapack_int i = 0; i < found; ++i) {
      std::vector<double> vec(z.begin() + std::ptrdiff_t(i) * dim, z.begin() + std::ptrdiff_t(i + 1) * dim);
      double tail = 0;
      for (int f = 2 * (3 * n / 4) - 1; f < m; ++f) tail += vec[f] * vec[f] + vec[m + f] * vec[m + f];
      if (tail > 1e-10)
        throw NumericalError("asymptotic_spectrum: eigenvector reaches the truncation boundary; enlarge n_modes");
      pairs.push_back({w[i], std::move(vec)});
    }
    std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) { return x.nu < y.nu; });

    out.entries.clear();
    for (const auto& p : pairs) {
      const int wind = winding_of(p.z, n, m);
      if (!out.entries.empty()) {
        auto& last = out.entries.back();
        if (last.multiplicity == 1 && last.winding == wind &&
            std::abs(p.nu - last.nu) <= 1e-9 * std::max(1.0, std::abs(p.nu))) {
          last.multiplicity = 2;
          continue;
        }
      }
      out.entries.push_back({p.nu, wind, 1});
    }
    for (const auto& e : out.entries) {
      if (e.nu < 0) out.wind_neg = e.winding;
    }
    for (auto it = out.entries.rbegin(); it != out.entries.rend(); ++it)
      if (it->nu >= 0) out.wind_nonneg = it->winding;
    out.window = window;
    return out;
  }
  throw NumericalError("asymptotic_spectrum: no eigenvalues on one side of zero; enlarge n_modes");
}

}  // namespace rp3
