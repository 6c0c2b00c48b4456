#include <doctest.h>

#include <map>
#include <numbers>

#include "rp3/errors.hpp"
#include "rp3/index.hpp"
#include "support.hpp"

using namespace rp3;
using rp3::test::Rng;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<Mat2> constant_loop(const Mat2& s, std::size_t m = 1024) { return std::vector<Mat2>(m, s); }

void check_structure(const AsymptoticSpectrum& sp) {
  // Winding is monotone in the eigenvalue.
  for (std::size_t i = 1; i < sp.entries.size(); ++i) {
    CHECK(sp.entries[i - 1].nu <= sp.entries[i].nu);
    CHECK(sp.entries[i - 1].winding <= sp.entries[i].winding);
  }
  // Two eigenvalues per winding; the first and last winding in the window
  // may be cut by the window edges.
  std::map<int, int> count;
  for (const SpectralEntry& e : sp.entries) count[e.winding] += e.multiplicity;
  if (count.size() > 2) {
    auto it = std::next(count.begin());
    for (; std::next(it) != count.end(); ++it) CHECK(it->second == 2);
  }
}

}  // namespace

TEST_CASE("zero loop: eigenvalues 2 pi k with winding k") {
  const AsymptoticSpectrum sp = asymptotic_spectrum(constant_loop(Mat2::Zero()), 256);
  CHECK(sp.wind_neg == -1);
  CHECK(sp.wind_nonneg == 0);
  for (const SpectralEntry& e : sp.entries) {
    const double k = e.nu / (2 * pi);
    CHECK(std::abs(k - std::round(k)) < 1e-9);
    CHECK(e.winding == int(std::round(k)));
  }
  check_structure(sp);
}

TEST_CASE("constant multiple of the identity shifts the spectrum") {
  const AsymptoticSpectrum sp = asymptotic_spectrum(constant_loop(1.3 * Mat2::Identity()), 256);
  CHECK(sp.wind_neg == 0);
  CHECK(sp.wind_nonneg == 1);
  for (const SpectralEntry& e : sp.entries) {
    const double k = (e.nu + 1.3) / (2 * pi);
    CHECK(std::abs(k - std::round(k)) < 1e-9);
  }
  check_structure(sp);
}

TEST_CASE("spectrum needs enough samples per mode") {
  CHECK_THROWS_AS(asymptotic_spectrum(constant_loop(Mat2::Zero(), 100), 256), DomainError);
}

TEST_CASE("property: index equals the sum of the extremal windings") {
  Rng rng(31);
  for (int n = 0; n < 12; ++n) {
    const test::SymmetricLoop s(rng, 3.0, 15.0);
    const AsymptoticSpectrum sp = asymptotic_spectrum(s.sampled(1024), 256);
    const CzDetail d = conley_zehnder_detail(path_from_generator(s, 8193));
    CHECK_FALSE(d.degenerate);
    CHECK(d.index == sp.wind_neg + sp.wind_nonneg);
    check_structure(sp);
  }
}
