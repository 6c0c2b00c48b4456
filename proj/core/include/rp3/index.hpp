#pragma once

#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "rp3/types.hpp"

namespace rp3 {

// Samples of a path of symplectic 2x2 matrices at uniform times on
// [0, span]; the first sample is the identity.
class SymplecticPath {
 public:
  SymplecticPath() = default;
  // Throws DomainError unless every sample is symplectic to tol_symp and the
  // first sample is the identity to 1e-12 (it is then stored as exactly I).
  explicit SymplecticPath(std::vector<Mat2> samples, double span = 1.0);

  std::size_t size() const { return m_.size(); }
  const Mat2& operator[](std::size_t i) const { return m_[i]; }
  const Mat2& back() const { return m_.back(); }
  double span() const { return span_; }
  double time(std::size_t i) const { return span_ * double(i) / double(m_.size() - 1); }
  const std::vector<Mat2>& samples() const { return m_; }

  // n-fold concatenation t -> phi(t - k) phi(1)^k on [0, n span].
  SymplecticPath iterate(int n) const;
  // t -> C phi(t) C^{-1}.
  SymplecticPath conjugated(const Mat2& c) const;

 private:
  std::vector<Mat2> m_;
  double span_ = 1.0;
};

// Path of the linear system phi' = J0 S(t) phi, phi(0) = I, on [0, 1].
SymplecticPath path_from_generator(const std::function<Mat2(double)>& s, std::size_t samples);

// Rigid rotation by 2 pi turns t.
SymplecticPath rotation_path(double turns, std::size_t samples = 257);

struct RotationInterval {
  double lo = 0;
  double hi = 0;
  double width() const { return hi - lo; }
  bool contains(double x, double tol = 0) const { return x >= lo - tol && x <= hi + tol; }
};

// Total turning of phi(t) v over the path, in turns.
double rotation_increment(const SymplecticPath& path, const Vec2& v);

RotationInterval rotation_interval(const SymplecticPath& path, int n_dirs = 128);

struct CzDetail {
  int index = 0;
  RotationInterval interval;
  double epsilon = 0;
  bool degenerate = false;  // an endpoint of J sits on an integer
};

CzDetail conley_zehnder_detail(const SymplecticPath& path, int n_dirs = 128);
inline int conley_zehnder(const SymplecticPath& path) { return conley_zehnder_detail(path).index; }

// Applies the J_eps rule to a given interval.
CzDetail conley_zehnder_from_interval(const RotationInterval& j);

enum class FloquetKind { elliptic, hyperbolic, parabolic_degenerate };

const char* to_string(FloquetKind k);

struct FloquetData {
  FloquetKind kind;
  std::pair<std::complex<double>, std::complex<double>> multipliers;
  double turns_mod1;  // elliptic: rotation angle of the conjugated rotation in (0,1)
};

inline constexpr double tol_parabolic = 1e-6;

FloquetData floquet(const Mat2& m);

struct RotationNumber {
  double rho = 0;
  FloquetKind kind = FloquetKind::elliptic;
  // False when the value is the integer or half-integer turning of a real
  // eigendirection rather than an irrational-capable rotation angle.
  bool from_rotation = true;
};

// periods == 1: Floquet-based evaluation over one period (exact for
// elliptic monodromy, independent of v0). periods >= 20: the path spans
// that many periods and rho is the averaged turning of v0.
RotationNumber rotation_number(const SymplecticPath& path, int periods = 1,
                               const Vec2& v0 = Vec2(1, 0));

struct IterateIndex {
  double rho_n;
  int mu_n;
};

IterateIndex iterate_index(double rho, int n, FloquetKind kind, int mu1);

struct IndexReport {
  RotationInterval rotation_interval;
  double rho = 0;
  int mu_cz = 0;
  FloquetKind floquet = FloquetKind::elliptic;
  std::pair<std::complex<double>, std::complex<double>> multipliers;
  bool degenerate = false;
};

IndexReport index_report(const SymplecticPath& path);

struct SpectralEntry {
  double nu;
  int winding;
  int multiplicity;
};

struct AsymptoticSpectrum {
  std::vector<SpectralEntry> entries;  // sorted by nu, clustered pairs merged
  int wind_neg = 0;
  int wind_nonneg = 0;
  int n_modes = 0;
  double window = 0;
};

// Spectrum of -J0 d/dt - S(t) on 1-periodic loops, S sampled at uniform
// times t_l = l / M (M = s.size() >= 4 n_modes).
AsymptoticSpectrum asymptotic_spectrum(const std::vector<Mat2>& s, int n_modes = 256);

}  // namespace rp3
