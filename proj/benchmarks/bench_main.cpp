#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "rp3/ellipsoid.hpp"
#include "rp3/index.hpp"
#include "rp3/orbit.hpp"
#include "rp3/pcr3bp.hpp"
#include "rp3/section.hpp"

using namespace rp3;

namespace {

const ClosedOrbit& retrograde_099() {
  static const ClosedOrbit o = find_retrograde({0.99, 2.0});
  return o;
}

void BM_IntegrateRegularized(benchmark::State& state) {
  const ClosedOrbit& o = retrograde_099();
  const RegularizedHamiltonian k(*o.params);
  const double t1 = double(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(integrate(k, o.initial(), 0, t1));
  state.SetLabel("mu = 0.99, c = 2");
}
BENCHMARK(BM_IntegrateRegularized)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FindRetrograde(benchmark::State& state) {
  const double mu = 0.9 + 0.01 * double(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(find_retrograde({mu, 2.0}));
}
BENCHMARK(BM_FindRetrograde)->Arg(5)->Arg(9)->Unit(benchmark::kMillisecond);

void BM_AsymptoticSpectrum(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<Mat2> s(1024);
  const double a = u(rng), b = u(rng), c = u(rng);
  for (std::size_t l = 0; l < s.size(); ++l) {
    const double t = 2 * std::numbers::pi * double(l) / double(s.size());
    s[l] << 3 + a * std::cos(t), b * std::sin(t), b * std::sin(t), 3 + c * std::cos(2 * t);
  }
  const int modes = int(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(asymptotic_spectrum(s, modes));
}
BENCHMARK(BM_AsymptoticSpectrum)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ConleyZehnder(benchmark::State& state) {
  const SymplecticPath p = rotation_path(2.3, std::size_t(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(conley_zehnder(p));
}
BENCHMARK(BM_ConleyZehnder)->Arg(257)->Arg(4097)->Unit(benchmark::kMillisecond);

void BM_ReturnMap(benchmark::State& state) {
  static const SectionDef s = build_section(retrograde_099(), 0.0);
  const Vec2 a = 0.4 * s.boundary_radius(0.3) * Vec2(std::cos(0.3), std::sin(0.3));
  for (auto _ : state) benchmark::DoNotOptimize(return_map(s, a));
}
BENCHMARK(BM_ReturnMap)->Unit(benchmark::kMillisecond);

void BM_EllipsoidMonodromy(benchmark::State& state) {
  const EllipsoidParams p{1.0, std::sqrt(std::numbers::e)};
  const EllipsoidHamiltonian h(p);
  const ClosedOrbit o = ellipsoid_fiber(Fiber::P2, p);
  for (auto _ : state) benchmark::DoNotOptimize(monodromy(h, o));
}
BENCHMARK(BM_EllipsoidMonodromy)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
