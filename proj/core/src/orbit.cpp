#include "rp3/orbit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "rp3/errors.hpp"
#include "rp3/geom.hpp"

namespace rp3 {

const char* to_string(Chart c) {
  switch (c) {
    case Chart::rotating: return "rotating";
    case Chart::levi_civita: return "levi-civita";
    case Chart::ellipsoid: return "ellipsoid";
  }
  return "?";
}

Chart chart_from_string(std::string_view s) {
  if (s == "rotating") return Chart::rotating;
  if (s == "levi-civita") return Chart::levi_civita;
  if (s == "ellipsoid") return Chart::ellipsoid;
  throw ParseError("unknown chart '" + std::string(s) + "'");
}

Trajectory::Trajectory(std::vector<DenseStep<4>> steps, IntegratorStats stats)
    : steps_(std::move(steps)), stats_(stats) {
  if (steps_.empty()) throw DomainError("Trajectory: empty integration interval");
}

Vec4 Trajectory::operator()(double t) const {
  const bool forward = steps_.front().h > 0;
  const double lo = std::min(t0(), t1()), hi = std::max(t0(), t1());
  if (t < lo - 1e-12 * std::max(1.0, std::abs(lo)) || t > hi + 1e-12 * std::max(1.0, std::abs(hi)))
    throw DomainError("Trajectory: time outside the integrated interval");
  auto it = std::upper_bound(steps_.begin(), steps_.end(), t, [&](double x, const DenseStep<4>& s) {
    return forward ? x < s.t0 : x > s.t0;
  });
  if (it != steps_.begin()) --it;
  return (*it)(t);
}

std::vector<Vec4> Trajectory::sample(std::size_t n) const {
  if (n < 2) throw DomainError("Trajectory::sample: need at least two samples");
  std::vector<Vec4> out(n);
  const double a = t0(), b = t1();
  out.front() = steps_.front().start();
  out.back() = steps_.back().end();
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (*this)(a + (b - a) * double(i) / double(n - 1));
  return out;
}

namespace {

template <class F>
Trajectory collect(F&& f, const Vec4& x0, double t0, double t1, const IntegratorOptions& opt) {
  std::vector<DenseStep<4>> steps;
  IntegratorStats stats;
  dop853<4>(std::forward<F>(f), t0, x0, t1, opt,
            [&](const DenseStep<4>& s) {
              steps.push_back(s);
              return true;
            },
            &stats);
  return Trajectory(std::move(steps), stats);
}

constexpr double primary_guard = 1e-3;

}  // namespace

Trajectory integrate(const Hamiltonian& h, const Vec4& x0, double t0, double t1,
                     const IntegratorOptions& opt) {
  return collect([&](double, const Vec4& x) { return h.vector_field(x); }, x0, t0, t1, opt);
}

std::unique_ptr<Hamiltonian> chart_hamiltonian(const ModelParams& params, Chart chart) {
  params.validate();
  switch (chart) {
    case Chart::rotating: return std::make_unique<RotatingHamiltonian>(params.mu);
    case Chart::levi_civita: return std::make_unique<RegularizedHamiltonian>(params);
    case Chart::ellipsoid: break;
  }
  throw DomainError("chart_hamiltonian: the ellipsoid chart carries no PCR3BP Hamiltonian");
}

namespace {

void guard_primaries(const Vec4& x, Chart chart) {
  if (chart != Chart::rotating) return;
  const double r0 = std::hypot(x[0], x[1]);
  const double r1 = std::hypot(x[0] - 1.0, x[1]);
  if (r0 < primary_guard || r1 < primary_guard)
    throw SingularityError(
        "trajectory passes within 1e-3 of a primary; integrate in the levi-civita chart instead");
}

}  // namespace

Trajectory integrate(const Vec4& state, const ModelParams& params, double t0, double t1, Chart chart,
                     const IntegratorOptions& opt) {
  const auto h = chart_hamiltonian(params, chart);
  guard_primaries(state, chart);
  return collect(
      [&](double, const Vec4& x) {
        guard_primaries(x, chart);
        return h->vector_field(x);
      },
      state, t0, t1, opt);
}

namespace {

using Var = Eigen::Matrix<double, 20, 1>;

template <class Guard>
VariationalSamples variational(const Hamiltonian& h, const Vec4& x0, double t0, double t1,
                               std::size_t samples, const IntegratorOptions& opt, Guard&& guard) {
  const Mat4 j = j4();
  Var y0;
  y0.head<4>() = x0;
  Eigen::Map<Mat4>(y0.data() + 4) = Mat4::Identity();
  auto rhs = [&](double, const Var& y) {
    const Vec4 x = y.head<4>();
    guard(x);
    Var dy;
    dy.head<4>() = j * h.gradient(x);
    Eigen::Map<Mat4>(dy.data() + 4) = j * h.hessian(x) * Eigen::Map<const Mat4>(y.data() + 4);
    return dy;
  };
  VariationalSamples out;
  const auto ys = dop853_uniform<20>(rhs, t0, y0, t1, samples, opt, &out.stats);
  out.times.resize(samples);
  out.states.resize(samples);
  out.matrices.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    out.times[i] = t0 + (t1 - t0) * double(i) / double(samples - 1);
    out.states[i] = ys[i].template head<4>();
    out.matrices[i] = Eigen::Map<const Mat4>(ys[i].data() + 4);
  }
  return out;
}

}  // namespace

VariationalSamples integrate_variational(const Hamiltonian& h, const Vec4& x0, double t0, double t1,
                                         std::size_t samples, const IntegratorOptions& opt) {
  return variational(h, x0, t0, t1, samples, opt, [](const Vec4&) {});
}

VariationalSamples integrate_variational(const Vec4& state, const ModelParams& params, double t0,
                                         double t1, Chart chart, std::size_t samples,
                                         const IntegratorOptions& opt) {
  const auto h = chart_hamiltonian(params, chart);
  guard_primaries(state, chart);
  return variational(*h, state, t0, t1, samples, opt, [&](const Vec4& x) { guard_primaries(x, chart); });
}

ClosedOrbit make_closed_orbit(const Hamiltonian& h, const Vec4& x0, double period, bool antipodal,
                              std::size_t samples, const IntegratorOptions& opt) {
  if (!(period > 0)) throw DomainError("make_closed_orbit: period must be positive");
  if (samples < 17 || (antipodal && samples % 2 == 0))
    throw DomainError("make_closed_orbit: need at least 17 samples, an odd count for antipodal orbits");
  ClosedOrbit o;
  o.period = period;
  o.antipodal = antipodal;
  o.samples = dop853_uniform<4>([&](double, const Vec4& x) { return h.vector_field(x); }, 0.0, x0,
                                period, samples, opt);
  o.times.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) o.times[i] = period * double(i) / double(samples - 1);
  o.energy = h.value(x0);
  for (const auto& x : o.samples) o.energy_residual = std::max(o.energy_residual, std::abs(h.value(x) - o.energy));
  o.closure_residual = (o.samples.back() - x0).norm();
  if (antipodal) {
    const double d = (o.samples[(samples - 1) / 2] + x0).norm();
    if (d > 1e-7) throw NumericalError("make_closed_orbit: half-period state is not antipodal (" +
                                       std::to_string(d) + ")");
  }
  return o;
}

double antipodal_return_time(const Hamiltonian& h, const Vec4& x0, double t_max, double match_tol,
                             const IntegratorOptions& opt) {
  const Vec4 f0 = h.vector_field(x0);
  if (!(f0.norm() > 0)) throw DomainError("antipodal_return_time: x0 is an equilibrium");
  auto g = [&](const Vec4& x) { return (x + x0).dot(f0); };
  double found = -1;
  dop853<4>([&](double, const Vec4& x) { return h.vector_field(x); }, 0.0, x0, t_max, opt,
            [&](const DenseStep<4>& st) {
              const int sub = 8;
              for (int k = 0; k < sub; ++k) {
                const double a = st.t0 + st.h * k / sub, b = st.t0 + st.h * (k + 1) / sub;
                const double ga = g(st(a)), gb = g(st(b));
                // Near -x0 the flow runs along -f0, so g falls through zero.
                if (!(ga > 0 && gb <= 0)) continue;
                double lo = a, hi = b;
                for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
                  const double mid = 0.5 * (lo + hi);
                  (g(st(mid)) > 0 ? lo : hi) = mid;
                }
                const double t = 0.5 * (lo + hi);
                if ((st(t) + x0).norm() <= match_tol) {
                  found = t;
                  return false;
                }
              }
              return true;
            });
  if (found < 0) throw NoReturnError("antipodal_return_time: no antipodal return before t_max");
  return found;
}

// ---------------------------------------------------------------------------
// Retrograde orbit by symmetric shooting.

namespace {

const IntegratorOptions shooting_opt{1e-13, 1e-13, 0, 0, 5'000'000};

// Start (v1, 0, 0, u2) on {K = 0}; v rotates clockwise when sign < 0.
Vec4 symmetric_start(double a, const ModelParams& p, double sign) {
  const double b = 2 * a * a * a - p.mu * a;
  const double c0 = -0.5 * (1 - p.mu) - p.mu * a * a / std::abs(2 * a * a - 1) + p.c * a * a;
  const double disc = b * b - 2 * c0;
  if (!(disc > 0) || !(a > 0) || std::abs(2 * a * a - 1) < 1e-6)
    throw DomainError("symmetric orbit: no symmetric start point for v1 = " + std::to_string(a));
  return {a, 0, 0, -b + sign * std::sqrt(disc)};
}

struct ShotResult {
  Vec2 f;
  Mat2 jac;
};

ShotResult shoot(const ModelParams& p, double a, double tau, double sign, const RetrogradeOptions& opt) {
  const RegularizedHamiltonian h(p);
  const Vec4 x0 = symmetric_start(a, p, sign);
  if (!(tau > 0)) throw DomainError("symmetric orbit: non-positive quarter period");
  auto residual = [&](const Vec4& x) { return Vec2(x[0], x[3]); };
  ShotResult r;
  if (opt.variational_jacobian) {
    const auto v = integrate_variational(h, x0, 0.0, tau, 2, shooting_opt);
    const Vec4 xt = v.states.back();
    const Mat4& phi = v.matrices.back();
    const Vec4 g = h.gradient(x0);
    const Vec4 dx0(1, 0, 0, -g[0] / g[3]);
    const Vec4 col_a = phi * dx0;
    const Vec4 col_t = h.vector_field(xt);
    r.f = residual(xt);
    r.jac << col_a[0], col_t[0], col_a[3], col_t[3];
  } else {
    auto eval = [&](double aa, double tt) {
      return residual(dop853<4>([&](double, const Vec4& x) { return h.vector_field(x); }, 0.0,
                                symmetric_start(aa, p, sign), tt, shooting_opt));
    };
    r.f = eval(a, tau);
    const double da = opt.fd_step * std::max(1.0, std::abs(a));
    const double dt = opt.fd_step * std::max(1.0, tau);
    r.jac.col(0) = (eval(a + da, tau) - eval(a - da, tau)) / (2 * da);
    r.jac.col(1) = (eval(a, tau + dt) - eval(a, tau - dt)) / (2 * dt);
  }
  return r;
}

struct NewtonOutcome {
  bool converged = false;
  double a = 0, tau = 0;
  std::vector<double> history;
};

NewtonOutcome newton(const ModelParams& p, double a, double tau, double sign, const RetrogradeOptions& opt) {
  NewtonOutcome out;
  try {
    ShotResult s = shoot(p, a, tau, sign, opt);
    double res = s.f.cwiseAbs().maxCoeff();
    out.history.push_back(res);
    for (int it = 0; it < opt.max_newton; ++it) {
      if (res < opt.newton_tol) {
        out.converged = true;
        break;
      }
      const Vec2 step = s.jac.fullPivLu().solve(-s.f);
      if (!step.allFinite()) break;
      double lam = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 6 && !accepted; ++ls, lam *= 0.5) {
        try {
          const ShotResult trial = shoot(p, a + lam * step[0], tau + lam * step[1], sign, opt);
          const double tres = trial.f.cwiseAbs().maxCoeff();
          if (tres < res || tres < opt.newton_tol) {
            a += lam * step[0];
            tau += lam * step[1];
            s = trial;
            res = tres;
            accepted = true;
          }
        } catch (const DomainError&) {
        }
      }
      if (!accepted) break;
      out.history.push_back(res);
    }
    if (!out.converged && res < opt.newton_tol) out.converged = true;
  } catch (const DomainError&) {
    out.converged = false;
  } catch (const NumericalError&) {
    out.converged = false;
  }
  out.a = a;
  out.tau = tau;
  return out;
}

void check_level(const ModelParams& p) {
  p.validate();
  const double l1 = lagrange_points(p.mu).points[0].value;
  if (!(-p.c < l1))
    throw DomainError("symmetric orbit: energy level -c is not below the first critical value");
}

double orientation_sign(Orientation o) { return o == Orientation::clockwise ? -1.0 : 1.0; }

ClosedOrbit finish(const ModelParams& p, const NewtonOutcome& n, double sign, const RetrogradeOptions& opt) {
  const RegularizedHamiltonian h(p);
  std::size_t samples = opt.samples | 1;
  ClosedOrbit o =
      make_closed_orbit(h, symmetric_start(n.a, p, sign), 4 * n.tau, true, samples, shooting_opt);
  o.params = p;
  o.chart = Chart::levi_civita;
  o.symmetry = SymmetryTag::doubly_symmetric;
  o.shooting_residual = n.history.back();
  o.newton_history = n.history;
  return o;
}

struct Continuation {
  double a, tau;
};

// Follows the solution from lambda = 0 to 1 along params(lambda).
template <class Params>
Continuation continue_family(Params&& params, double a, double tau, double sign,
                             const RetrogradeOptions& opt, const char* what) {
  double lam = 0, step = 0.05;
  double prev_lam = -1, prev_a = a, prev_tau = tau;
  while (lam < 1) {
    const double next = std::min(1.0, lam + step);
    double ga = a, gt = tau;
    if (prev_lam >= 0) {
      const double s = (next - lam) / (lam - prev_lam);
      ga = a + s * (a - prev_a);
      gt = tau + s * (tau - prev_tau);
    }
    const ModelParams p = params(next);
    NewtonOutcome n = newton(p, ga, gt, sign, opt);
    if (!n.converged && prev_lam >= 0) n = newton(p, a, tau, sign, opt);
    if (n.converged) {
      prev_lam = lam;
      prev_a = a;
      prev_tau = tau;
      lam = next;
      a = n.a;
      tau = n.tau;
      if (n.history.size() <= 4) step = std::min(0.25, step * 1.5);
    } else {
      step *= 0.5;
      if (step < opt.min_step)
        throw NumericalError(std::string("symmetric orbit: continuation in ") + what +
                             " stalled; Newton does not converge");
    }
  }
  return {a, tau};
}

}  // namespace

ClosedOrbit refine_symmetric_orbit(const ModelParams& params, Orientation orientation, double v1,
                                   double quarter_period, const RetrogradeOptions& opt) {
  check_level(params);
  const double sign = orientation_sign(orientation);
  const NewtonOutcome n = newton(params, v1, quarter_period, sign, opt);
  if (!n.converged)
    throw NumericalError("symmetric orbit: Newton did not reach the residual tolerance");
  return finish(params, n, sign, opt);
}

ClosedOrbit find_symmetric_orbit(const ModelParams& target, Orientation orientation,
                                 const std::optional<ClosedOrbit>& from, const RetrogradeOptions& opt) {
  check_level(target);
  double sign = orientation_sign(orientation);
  ModelParams start;
  double a, tau;
  if (from) {
    if (!from->params || from->chart != Chart::levi_civita || from->symmetry != SymmetryTag::doubly_symmetric)
      throw DomainError("symmetric orbit: continuation needs a doubly symmetric Levi-Civita orbit");
    start = *from->params;
    a = from->initial()[0];
    tau = 0.25 * from->period;
    const Vec4& x0 = from->initial();
    if ((x0[3] + 2 * a * a * a - start.mu * a) * sign <= 0)
      throw DomainError("symmetric orbit: continuation orbit has the opposite orientation");
  } else {
    start = {target.mu, std::max(opt.c_start, target.c)};
    // Harmonic approximation near the light primary.
    const double ce = start.c - start.mu;
    a = std::sqrt((1 - start.mu) / (4 * ce));
    tau = 0.5 * std::numbers::pi / std::sqrt(2 * ce);
  }
  NewtonOutcome n0 = newton(start, a, tau, sign, opt);
  if (!n0.converged) throw NumericalError("symmetric orbit: Newton failed at the starting parameters");
  auto [ca, ct] = continue_family(
      [&](double l) { return ModelParams{start.mu, start.c + l * (target.c - start.c)}; }, n0.a, n0.tau,
      sign, opt, "c");
  auto [ma, mt] = continue_family(
      [&](double l) {
        const ModelParams p{start.mu + l * (target.mu - start.mu), target.c};
        check_level(p);
        return p;
      },
      ca, ct, sign, opt, "mu");
  const NewtonOutcome n = newton(target, ma, mt, sign, opt);
  if (!n.converged) throw NumericalError("symmetric orbit: final Newton refinement failed");
  return finish(target, n, sign, opt);
}

ClosedOrbit find_retrograde(const ModelParams& params, const std::optional<ClosedOrbit>& from,
                            const RetrogradeOptions& opt) {
  return find_symmetric_orbit(params, Orientation::clockwise, from, opt);
}

ClosedOrbit refine_retrograde(const ModelParams& params, double v1, double quarter_period,
                              const RetrogradeOptions& opt) {
  return refine_symmetric_orbit(params, Orientation::clockwise, v1, quarter_period, opt);
}

std::vector<double> convergence_orders(const std::vector<double>& h, double floor) {
  std::vector<double> out;
  for (std::size_t k = 1; k + 1 < h.size(); ++k) {
    if (h[k + 1] <= floor || h[k] <= floor || h[k - 1] >= 1.0 || h[k] >= h[k - 1]) continue;
    out.push_back(std::log(h[k + 1] / h[k]) / std::log(h[k] / h[k - 1]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monodromy and transverse path.

Monodromy monodromy(const Hamiltonian& h, const ClosedOrbit& orbit, std::size_t path_samples,
                    const IntegratorOptions& opt) {
  if (path_samples < 17) throw DomainError("monodromy: need at least 17 path samples");
  const double tp = orbit.prime_period();
  const Vec4 x0 = orbit.initial();
  const auto var = integrate_variational(h, x0, 0.0, tp, path_samples, opt);
  const Mat4 p = c2_basis_change();

  const Vec4 z0 = p * x0;
  const Vec4 g0 = p * h.gradient(x0);
  Eigen::Matrix<double, 4, 2> e;
  e.col(0) = p.transpose() * lift_from_contact(z0, g0, Vec2(1, 0));
  e.col(1) = p.transpose() * lift_from_contact(z0, g0, Vec2(0, 1));

  std::vector<Mat2> phis(path_samples);
  for (std::size_t i = 0; i < path_samples; ++i) {
    const Vec4& x = var.states[i];
    const Vec4 z = p * x;
    const Vec4 reeb = p * h.vector_field(x);
    for (int c = 0; c < 2; ++c)
      phis[i].col(c) = project_to_contact(z, reeb, p * (var.matrices[i] * e.col(c)));
  }
  const Mat2 phi0_inv = phis.front().inverse();
  for (auto& m : phis) m = m * phi0_inv;

  Monodromy out;
  out.quotient = orbit.antipodal;
  out.full = orbit.antipodal ? Mat4(-var.matrices.back()) : var.matrices.back();
  out.path = SymplecticPath(std::move(phis), tp);
  out.transverse = out.path.back();

  Eigen::EigenSolver<Mat4> es(out.full, false);
  std::vector<double> dist;
  for (int k = 0; k < 4; ++k) dist.push_back(std::abs(es.eigenvalues()[k] - std::complex<double>(1, 0)));
  std::sort(dist.begin(), dist.end());
  out.trivial_pair_defect = dist[1];
  if (out.trivial_pair_defect > 1e-4)
    throw NumericalError("monodromy: trivial eigenvalue pair off by " +
                         std::to_string(out.trivial_pair_defect) + "; integration is not accurate enough");
  return out;
}

Monodromy monodromy(const ClosedOrbit& orbit, std::size_t path_samples) {
  if (!orbit.params) throw DomainError("monodromy: orbit carries no model parameters");
  const auto h = chart_hamiltonian(*orbit.params, orbit.chart);
  return monodromy(*h, orbit, path_samples, shooting_opt);
}

OrbitClassification classify(const Monodromy& m) {
  OrbitClassification out;
  out.report = index_report(m.path);
  if (m.quotient) out.mu_cz_doubled = conley_zehnder(m.path.iterate(2));
  const auto [l1, l2] = out.report.multipliers;
  out.elliptic_parabolic = std::abs(std::abs(l1) - 1.0) < 1e-6 && std::abs(std::abs(l2) - 1.0) < 1e-6;
  out.rho_in_half_one = out.report.rho > 0.5 + 1e-6 && out.report.rho <= 1.0 + 1e-6;
  return out;
}

int q_winding(const ClosedOrbit& orbit) {
  if (orbit.chart == Chart::ellipsoid) throw DomainError("q_winding: not a PCR3BP orbit");
  const std::size_t n = orbit.antipodal ? (orbit.samples.size() - 1) / 2 : orbit.samples.size() - 1;
  auto q_of = [&](const Vec4& x) {
    if (orbit.chart == Chart::rotating) return Vec2(x[0], x[1]);
    const PhaseState s = levi_civita(RegState::from(x));
    return Vec2(s.q1, s.q2);
  };
  double total = 0;
  Vec2 prev = q_of(orbit.samples[0]);
  for (std::size_t i = 1; i <= n; ++i) {
    const Vec2 cur = q_of(orbit.samples[i]);
    const double d = std::atan2(prev[0] * cur[1] - prev[1] * cur[0], prev.dot(cur));
    if (std::abs(d) > 0.5 * std::numbers::pi)
      throw NumericalError("q_winding: orbit under-sampled near the light primary");
    total += d;
    prev = cur;
  }
  const double w = total / (2 * std::numbers::pi);
  if (std::abs(w - std::round(w)) > 1e-6) throw NumericalError("q_winding: projection does not close");
  return int(std::round(w));
}

}  // namespace rp3
