#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rp3/hamiltonian.hpp"
#include "rp3/index.hpp"
#include "rp3/integrator.hpp"
#include "rp3/pcr3bp.hpp"
#include "rp3/types.hpp"

namespace rp3 {

enum class Chart { rotating, levi_civita, ellipsoid };

const char* to_string(Chart c);
Chart chart_from_string(std::string_view s);

// Dense solution of a Hamiltonian flow built from accepted DOP853 steps.
class Trajectory {
 public:
  Trajectory(std::vector<DenseStep<4>> steps, IntegratorStats stats);

  Vec4 operator()(double t) const;
  double t0() const { return steps_.front().t0; }
  double t1() const { return steps_.back().t1(); }
  const std::vector<DenseStep<4>>& steps() const { return steps_; }
  const IntegratorStats& stats() const { return stats_; }
  // Values at n uniform times on [t0, t1], endpoints exact.
  std::vector<Vec4> sample(std::size_t n) const;

 private:
  std::vector<DenseStep<4>> steps_;
  IntegratorStats stats_;
};

Trajectory integrate(const Hamiltonian& h, const Vec4& x0, double t0, double t1,
                     const IntegratorOptions& opt = {});

// PCR3BP flow of H (rotating chart, state (q, p)) or K (Levi-Civita chart,
// state (v, u)). The rotating chart refuses to approach a primary closer
// than 1e-3 and reports that the Levi-Civita chart should be used instead.
Trajectory integrate(const Vec4& state, const ModelParams& params, double t0, double t1, Chart chart,
                     const IntegratorOptions& opt = {});

struct VariationalSamples {
  std::vector<double> times;
  std::vector<Vec4> states;
  std::vector<Mat4> matrices;  // Phi(t) with Phi(t0) = I
  IntegratorStats stats;
};

VariationalSamples integrate_variational(const Hamiltonian& h, const Vec4& x0, double t0, double t1,
                                         std::size_t samples, const IntegratorOptions& opt = {});

VariationalSamples integrate_variational(const Vec4& state, const ModelParams& params, double t0,
                                         double t1, Chart chart, std::size_t samples,
                                         const IntegratorOptions& opt = {});

// Hamiltonian of a chart; throws for Chart::ellipsoid (use EllipsoidHamiltonian).
std::unique_ptr<Hamiltonian> chart_hamiltonian(const ModelParams& params, Chart chart);

enum class SymmetryTag { none, doubly_symmetric };

struct ClosedOrbit {
  std::optional<ModelParams> params;  // absent for orbits of other Hamiltonians
  Chart chart = Chart::levi_civita;
  std::vector<double> times;          // uniform on [0, period]
  std::vector<Vec4> samples;          // includes both endpoints
  double period = 0;                  // period of the lift
  bool antipodal = false;             // x(period / 2) = -x(0)
  double energy = 0;                  // level value of the Hamiltonian
  double energy_residual = 0;         // max |H - energy| over the samples
  double closure_residual = 0;        // |x(period) - x(0)|
  double shooting_residual = 0;       // final Newton residual, 0 if not shot
  SymmetryTag symmetry = SymmetryTag::none;
  std::vector<double> newton_history;

  double prime_period() const { return antipodal ? 0.5 * period : period; }
  const Vec4& initial() const { return samples.front(); }
};

// Integrates x0 over [0, period] and records samples and residuals. With
// antipodal set, the half-period state must equal -x0 within 1e-7.
ClosedOrbit make_closed_orbit(const Hamiltonian& h, const Vec4& x0, double period, bool antipodal,
                              std::size_t samples = 2049, const IntegratorOptions& opt = {});

// First time t in (0, t_max] with x(t) = -x0 to within match_tol, located
// as a downward zero of <x(t) + x0, f(x0)> refined to 1e-13. Throws
// NoReturnError if there is none.
double antipodal_return_time(const Hamiltonian& h, const Vec4& x0, double t_max,
                             double match_tol = 1e-6, const IntegratorOptions& opt = {});

struct RetrogradeOptions {
  double c_start = 50.0;
  double newton_tol = 1e-12;
  int max_newton = 25;
  double min_step = 1e-6;    // smallest continuation step, relative to the range
  bool variational_jacobian = true;
  double fd_step = 1e-7;     // used when variational_jacobian is false
  std::size_t samples = 2049;
};

// Sense of rotation of v (and of the q-projection) around the light primary.
enum class Orientation { clockwise, counterclockwise };

// Doubly symmetric orbit in the Levi-Civita chart: starts perpendicularly on
// {v2 = 0, u1 = 0} and reaches {v1 = 0, u2 = 0} after a quarter of the
// lifted period. Seeded from the harmonic approximation at c_start and
// continued in c, then in mu (or continued from a given orbit).
ClosedOrbit find_symmetric_orbit(const ModelParams& params, Orientation orientation,
                                 const std::optional<ClosedOrbit>& continuation_from = std::nullopt,
                                 const RetrogradeOptions& opt = {});

ClosedOrbit refine_symmetric_orbit(const ModelParams& params, Orientation orientation, double v1,
                                   double quarter_period, const RetrogradeOptions& opt = {});

// The clockwise symmetric orbit.
ClosedOrbit find_retrograde(const ModelParams& params,
                            const std::optional<ClosedOrbit>& continuation_from = std::nullopt,
                            const RetrogradeOptions& opt = {});

// Newton refinement at fixed parameters from a guess (v1, quarter period).
ClosedOrbit refine_retrograde(const ModelParams& params, double v1, double quarter_period,
                              const RetrogradeOptions& opt = {});

// Observed convergence orders r_{k+1} ~ r_k^p over a residual history.
std::vector<double> convergence_orders(const std::vector<double>& history, double floor = 1e-13);

struct Monodromy {
  Mat4 full;                // linearized return map of the prime period
  Mat2 transverse;          // endpoint of path
  SymplecticPath path;      // transverse path over the prime period
  std::string trivialization = "global-quaternion";
  double trivial_pair_defect = 0;  // distance of the two eigenvalues closest to 1 from 1
  bool quotient = false;           // computed over half the lift of an antipodal orbit
};

// Linearized flow over the prime period projected along the flow and the
// radial direction onto the quaternion frame (Levi-Civita/ellipsoid states
// are read in C^2 through to_c2). Throws NumericalError if the trivial
// eigenvalue pair is off by more than 1e-4.
Monodromy monodromy(const Hamiltonian& h, const ClosedOrbit& orbit, std::size_t path_samples = 2049,
                    const IntegratorOptions& opt = {});
Monodromy monodromy(const ClosedOrbit& orbit, std::size_t path_samples = 2049);

struct OrbitClassification {
  IndexReport report;
  std::optional<int> mu_cz_doubled;  // index of the double cover for quotient orbits
  bool elliptic_parabolic = false;   // both multipliers within 1e-6 of the unit circle
  bool rho_in_half_one = false;      // rho in (1/2 + 1e-6, 1 + 1e-6]
};

OrbitClassification classify(const Monodromy& m);

// Winding of the q-projection around the light primary over the prime
// period (Levi-Civita orbits) or the period (rotating orbits).
int q_winding(const ClosedOrbit& orbit);

}  // namespace rp3
