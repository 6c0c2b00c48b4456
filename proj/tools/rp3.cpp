// rp3: command-line driver for the PCR3BP / ellipsoid / Finsler toolkit.
//
// Exit codes: 0 success, 1 usage error, 2 invalid configuration, 3 malformed
// input file, 4 numerical failure, 5 a self-check or validation mismatch.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <array>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rp3/archive.hpp"
#include "rp3/ellipsoid.hpp"
#include "rp3/errors.hpp"
#include "rp3/finsler.hpp"
#include "rp3/index.hpp"
#include "rp3/orbit.hpp"
#include "rp3/pcr3bp.hpp"
#include "rp3/section.hpp"
#include "run_config.hpp"

using namespace rp3;
using rp3::cli::ConfigError;
using rp3::cli::JsonLine;
using rp3::cli::RunConfig;

namespace {

constexpr int exit_usage = 1;
constexpr int exit_config = 2;
constexpr int exit_input = 3;
constexpr int exit_numerical = 4;
constexpr int exit_mismatch = 5;

struct Flag {
  const char* name;
  const char* help;
};

struct Command {
  CLI::App* app = nullptr;
  std::vector<std::string> keys;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
};

Command& add_command(CLI::App& app, std::map<std::string, Command>& cmds, const char* name, const char* about,
                     const std::vector<Flag>& flags) {
  Command& c = cmds[name];
  c.app = app.add_subcommand(name, about);
  for (const auto& f : flags) {
    c.keys.emplace_back(f.name);
    c.options[f.name] = c.app->add_option(std::string("--") + f.name, c.values[f.name], f.help);
  }
  c.app->add_option("--config", c.config_path, "flat key = value file; command-line flags override it");
  return c;
}

RunConfig make_config(const std::string& name, const Command& c) {
  RunConfig cfg(name, std::set<std::string>(c.keys.begin(), c.keys.end()));
  if (!c.config_path.empty()) cfg.load_file(c.config_path);
  for (const auto& [key, opt] : c.options)
    if (opt->count() > 0) cfg.set(key, c.values.at(key));
  return cfg;
}

ModelParams model_params(const RunConfig& cfg) {
  ModelParams p{cfg.number("mu"), cfg.number("c")};
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  const double l1 = lagrange_points(p.mu).points[0].value;
  if (!(-p.c < l1))
    throw ConfigError(fmt::format("energy -c = {} is not below H(L1) = {}; the bounded component is not isolated",
                                  -p.c, l1));
  return p;
}

std::optional<std::filesystem::path> output_path(const RunConfig& cfg) {
  if (!cfg.has("out")) return std::nullopt;
  std::filesystem::path p = cfg.text_or("out", "");
  cli::check_output_path(p);
  return p;
}

RetrogradeOptions retrograde_options(const RunConfig& cfg) {
  RetrogradeOptions opt;
  opt.newton_tol = cfg.number_or("tol", opt.newton_tol);
  if (!(opt.newton_tol > 0 && opt.newton_tol < 1e-3)) throw ConfigError("--tol must lie in (0, 1e-3)");
  return opt;
}

std::vector<double> complex_pair(const std::pair<std::complex<double>, std::complex<double>>& m) {
  return {m.first.real(), m.first.imag(), m.second.real(), m.second.imag()};
}

// Everything here is a function of the archived data only, so a rerun from
// the archive reproduces it byte for byte.
JsonLine orbit_report(const ClosedOrbit& o) {
  const Monodromy m = monodromy(o);
  const OrbitClassification c = classify(m);
  JsonLine j;
  j.add("mu", o.params->mu)
      .add("c", o.params->c)
      .add("chart", to_string(o.chart))
      .add("period", o.period)
      .add("prime_period", o.prime_period())
      .add("shooting_residual", o.shooting_residual)
      .add("q_winding", q_winding(o))
      .add("floquet", to_string(c.report.floquet))
      .add("multipliers", complex_pair(c.report.multipliers))
      .add("rho", c.report.rho)
      .add("rho_doubled", 2 * c.report.rho)
      .add("rotation_interval", std::vector<double>{c.report.rotation_interval.lo, c.report.rotation_interval.hi})
      .add("mu_cz", c.report.mu_cz);
  if (c.mu_cz_doubled) j.add("mu_cz_doubled", *c.mu_cz_doubled);
  else j.add_null("mu_cz_doubled");
  j.add("trivial_pair_defect", m.trivial_pair_defect)
      .add("elliptic_parabolic", c.elliptic_parabolic)
      .add("rho_in_half_one", c.rho_in_half_one);
  return j;
}

int cmd_convexity_scan(const RunConfig& cfg) {
  const std::vector<double> mus = cfg.list("mu"), cs = cfg.list("c");
  const long samples = cfg.integer_or("grid", 2000);
  const std::uint64_t seed = cfg.seed_or("seed", 1);
  if (samples < 16) throw ConfigError("--grid (samples per cell) must be >= 16");
  for (double mu : mus)
    if (!(mu > 0 && mu < 1)) throw ConfigError(fmt::format("--mu {} is outside (0, 1)", mu));
  for (double c : cs)
    if (!std::isfinite(c)) throw ConfigError("--c must be finite");
  const auto out = output_path(cfg);

  std::string csv = "mu,c,is_convex,min_eig,status\n";
  std::size_t cells = 0, convex = 0, failed = 0;
  for (double mu : mus)
    for (double c : cs) {
      ++cells;
      const ModelParams p{mu, c};
      try {
        const auto sample = sample_hypersurface(p, std::size_t(samples), seed, std::size_t(samples / 10));
        const auto r = convexity_check(p, sample);
        convex += r.is_convex;
        csv += fmt::format("{:.17g},{:.17g},{},{:.17g},ok\n", mu, c, r.is_convex ? "true" : "false", r.min_eig);
      } catch (const Error& e) {
        ++failed;
        std::string msg = e.what();
        for (char& ch : msg)
          if (ch == ',' || ch == '\n') ch = ';';
        csv += fmt::format("{:.17g},{:.17g},,,error: {}\n", mu, c, msg);
      }
    }
  JsonLine j;
  j.add("command", "convexity-scan").add("cells", cells).add("convex", convex).add("failed", failed);
  if (out) {
    cli::write_file(*out, csv);
    std::cout << j.str() << '\n';
  } else {
    std::cout << csv;
    std::cerr << j.str() << '\n';
  }
  return 0;
}

int cmd_retrograde(const RunConfig& cfg) {
  const auto out = output_path(cfg);
  ClosedOrbit orbit;
  if (cfg.has("from")) {
    if (cfg.has("mu") || cfg.has("c") || cfg.has("tol"))
      throw ConfigError("--from takes mu, c and the orbit from the archive; drop --mu/--c/--tol");
    try {
      orbit = load_archive(cfg.text_or("from", ""));
    } catch (const ParseError& e) {
      std::cerr << "rp3: " << e.what() << '\n';
      return exit_input;
    }
  } else {
    const ModelParams p = model_params(cfg);
    const RetrogradeOptions opt = retrograde_options(cfg);
    orbit = find_retrograde(p, std::nullopt, opt);
  }
  const std::string report = orbit_report(orbit).str();
  if (out) {
    std::ostringstream ss;
    write_archive(ss, orbit);
    cli::write_file(*out, ss.str());
  }
  std::cout << report << '\n';
  return 0;
}

SectionDef pcr3bp_section(const ModelParams& p, const RetrogradeOptions& opt, ClosedOrbit& boundary) {
  boundary = find_retrograde(p, std::nullopt, opt);
  return build_section(boundary);
}

int cmd_return_map(const RunConfig& cfg) {
  const ModelParams p = model_params(cfg);
  const RetrogradeOptions opt = retrograde_options(cfg);
  const long rings = cfg.integer_or("grid", 4);
  if (rings < 1 || rings > 64) throw ConfigError("--grid (rings) must lie in [1, 64]");
  const auto out = output_path(cfg);

  ClosedOrbit boundary;
  const SectionDef s = pcr3bp_section(p, opt, boundary);
  std::vector<ReturnMapSample> rows;
  std::size_t failures = 0;
  for (const Vec2& a : section_grid(s, int(rings), 0.9)) {
    try {
      rows.push_back(return_map(s, a));
    } catch (const NumericalError&) {
      ++failures;
    }
  }
  std::ostringstream csv;
  write_return_csv(csv, rows);
  JsonLine j;
  j.add("command", "return-map")
      .add("mu", p.mu)
      .add("c", p.c)
      .add("binding_period", boundary.period)
      .add("transversality_margin", s.margin())
      .add("points", rows.size())
      .add("failures", failures);
  if (out) {
    cli::write_file(*out, csv.str());
    std::cout << j.str() << '\n';
  } else {
    std::cout << csv.str();
    std::cerr << j.str() << '\n';
  }
  return 0;
}

int cmd_direct_orbit(const RunConfig& cfg) {
  const ModelParams p = model_params(cfg);
  const RetrogradeOptions opt = retrograde_options(cfg);
  const long rings = cfg.integer_or("grid", 6);
  if (rings < 1 || rings > 64) throw ConfigError("--grid (seed rings) must lie in [1, 64]");
  const auto out = output_path(cfg);

  ClosedOrbit boundary;
  const SectionDef s = pcr3bp_section(p, opt, boundary);
  const FixedPoint fp = find_fixed_point(s, int(rings));
  JsonLine j = orbit_report(fp.orbit);
  j.add("map_residual", fp.map_residual)
      .add("section_point", std::vector<double>{fp.coords[0], fp.coords[1]})
      .add("link_with_binding", verify_hopf_link(boundary, fp.orbit));
  if (out) {
    std::ostringstream ss;
    write_archive(ss, fp.orbit);
    cli::write_file(*out, ss.str());
  }
  std::cout << j.str() << '\n';
  return 0;
}

EllipsoidParams ellipsoid_params(const RunConfig& cfg) {
  EllipsoidParams p{cfg.number_or("r1", 1.0), cfg.number("r2")};
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

int cmd_link(const RunConfig& cfg) {
  const bool ellipsoid = cfg.has("r1") || cfg.has("r2");
  if (ellipsoid && (cfg.has("mu") || cfg.has("c"))) throw ConfigError("give either --r1/--r2 or --mu/--c, not both");
  JsonLine j;
  j.add("command", "link");
  if (ellipsoid) {
    const EllipsoidParams p = ellipsoid_params(cfg);
    const int lk = verify_hopf_link(ellipsoid_fiber(Fiber::P1, p), ellipsoid_fiber(Fiber::P2, p));
    j.add("system", "ellipsoid").add("r1", p.r1).add("r2", p.r2).add("link", lk);
  } else {
    const ModelParams p = model_params(cfg);
    const RetrogradeOptions opt = retrograde_options(cfg);
    ClosedOrbit boundary;
    const SectionDef s = pcr3bp_section(p, opt, boundary);
    const FixedPoint fp = find_fixed_point(s);
    j.add("system", "pcr3bp").add("mu", p.mu).add("c", p.c).add("link", verify_hopf_link(boundary, fp.orbit));
  }
  std::cout << j.str() << '\n';
  return 0;
}

int cmd_ellipsoid_validate(const RunConfig& cfg) {
  const EllipsoidParams p = ellipsoid_params(cfg);
  if (p.near_rational())
    throw ConfigError("r2^2 / r1^2 is within 1e-9 of a rational with denominator <= 50; indices are degenerate");
  const EllipsoidIndices exact = ellipsoid_indices(p);
  const EllipsoidHamiltonian h(p);

  JsonLine j;
  j.add("command", "ellipsoid-validate").add("r1", p.r1).add("r2", p.r2);
  j.add("indices", std::vector<int>{exact.mu_p1_sq, exact.mu_p2_sq, exact.k});
  bool ok = true;
  for (const Fiber f : {Fiber::P1, Fiber::P2}) {
    const ClosedOrbit fiber = ellipsoid_fiber(f, p);
    const double tq = ellipsoid_period(f, p);
    const double t = antipodal_return_time(h, fiber.initial(), 4 * tq);
    const ClosedOrbit o = make_closed_orbit(h, fiber.initial(), 2 * t, true);
    const OrbitClassification c = classify(monodromy(h, o));
    const int expected = f == Fiber::P1 ? exact.mu_p1_sq : exact.mu_p2_sq;
    const int got = c.mu_cz_doubled.value_or(-1);
    ok = ok && got == expected;
    JsonLine fj;
    fj.add("prime_period", t)
        .add("exact_prime_period", tq)
        .add("rho", c.report.rho)
        .add("mu_cz_doubled", got)
        .add("expected", expected);
    j.add_object(f == Fiber::P1 ? "P1" : "P2", fj);
  }
  j.add("match", ok);
  std::cout << j.str() << '\n';
  return ok ? 0 : exit_mismatch;
}

int cmd_finsler(const RunConfig& cfg) {
  CurvatureProfile prof;
  if (cfg.has("profile")) {
    if (cfg.has("k") || cfg.has("length")) throw ConfigError("--profile excludes --k and --length");
    try {
      prof = load_profile_csv(cfg.text_or("profile", ""));
    } catch (const ParseError& e) {
      std::cerr << "rp3: " << e.what() << '\n';
      return exit_input;
    }
  } else {
    const double k = cfg.number_or("k", 1.0);
    const double len = cfg.number_or("length", 2 * std::numbers::pi);
    if (!(k >= 0)) throw ConfigError("--k must be >= 0");
    if (!(len > 0)) throw ConfigError("--length must be positive");
    prof = CurvatureProfile::constant(k, len);
  }
  const double theta0 = cfg.number_or("theta0", 0.0);
  const long loops = cfg.integer_or("loops", 0);
  if (loops < 0 || loops > 64) throw ConfigError("--loops must lie in [0, 64]");
  if (loops > 0) {
    if (!(prof.length() > std::numbers::pi)) throw ConfigError("--loops needs a loop longer than pi");
    if (prof.min_k() < 1) throw ConfigError("--loops needs the normalized convention K >= 1");
  }

  JsonLine j;
  j.add("command", "finsler")
      .add("length", prof.length())
      .add("theta0", theta0)
      .add("delta_theta", rotation_angle(prof, theta0))
      .add("min_rotation", min_rotation(prof));
  if (loops > 0) {
    const LoopBound b = loop_index_bound(std::vector<CurvatureProfile>(std::size_t(loops), prof));
    JsonLine bj;
    bj.add("loops", loops).add("delta_theta", b.delta_theta).add("mu_lower", b.mu_lower).add("exceeds_4pi", b.exceeds_four_pi);
    j.add_object("loop_bound", bj);
  }
  std::cout << j.str() << '\n';
  return 0;
}

// Random loop of symmetric matrices with three harmonics; the constant
// diagonal shift spreads the indices over a wide range.
struct RandomLoop {
  std::array<std::array<double, 6>, 3> coef{};

  explicit RandomLoop(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    std::uniform_real_distribution<double> shift(-15, 15);
    for (int h = 0; h < 3; ++h)
      for (auto& x : coef[h]) x = u(rng) * (h == 0 ? 3.0 : 1.5);
    // Shift both diagonal entries together: extra rotation, no extra
    // hyperbolic growth, so det phi = 1 stays resolvable.
    const double c = shift(rng);
    coef[0][0] += c;
    coef[0][2] += c;
  }

  Mat2 operator()(double t) const {
    double e[3] = {0, 0, 0};
    for (int h = 0; h < 3; ++h) {
      const double c = std::cos(2 * std::numbers::pi * h * t), s = std::sin(2 * std::numbers::pi * h * t);
      for (int q = 0; q < 3; ++q) e[q] += coef[h][q] * c + coef[h][q + 3] * s;
    }
    Mat2 m;
    m << e[0], e[1], e[1], e[2];
    return m;
  }
};

int cmd_index_selftest(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.seed_or("seed", 1);
  const long loops = cfg.integer_or("grid", 10);
  if (loops < 1 || loops > 1000) throw ConfigError("--grid (random loops) must lie in [1, 1000]");

  JsonLine j;
  j.add("command", "index-selftest");
  bool ok = true;

  const IndexReport r = index_report(rotation_path(0.8));
  const IterateIndex it = iterate_index(r.rho, 2, r.floquet, r.mu_cz);
  const bool rot_ok = r.floquet == FloquetKind::elliptic && r.mu_cz == 1 && it.mu_n == 3;
  j.add("rotation_0.8", rot_ok);
  ok = ok && rot_ok;

  Mat2 hyp;
  hyp << 2.0, 0.0, 0.0, 0.5;
  const FloquetData fd = floquet(hyp);
  const bool hyp_ok = fd.kind == FloquetKind::hyperbolic;
  j.add("hyperbolic_trace_2.5", hyp_ok);
  ok = ok && hyp_ok;

  std::mt19937_64 rng(seed);
  int agree = 0;
  for (long n = 0; n < loops; ++n) {
    const RandomLoop loop(rng);
    std::vector<Mat2> samples(1024);
    for (int l = 0; l < 1024; ++l) samples[l] = loop(l / 1024.0);
    const AsymptoticSpectrum sp = asymptotic_spectrum(samples, 256);
    const int mu = conley_zehnder(path_from_generator(loop, 8193));
    agree += mu == sp.wind_neg + sp.wind_nonneg;
  }
  j.add("winding_identity", fmt::format("{}/{}", agree, loops));
  ok = ok && agree == loops;
  j.add("pass", ok);
  std::cout << j.str() << '\n';
  return ok ? 0 : exit_mismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rp3: periodic orbits, indices and surfaces of section on RP^3-type energy levels"};
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 ok, 1 usage error, 2 invalid configuration or parameters (nothing is written), "
      "3 unreadable or malformed input file, 4 numerical failure, 5 a self-check or validation mismatched.");
  std::map<std::string, Command> cmds;

  add_command(app, cmds, "convexity-scan", "convexity check of the regularized level over a mu x c grid",
              {{"mu", "comma-separated mass ratios in (0,1); empty gives a header-only file"},
               {"c", "comma-separated energies"},
               {"grid", "hypersurface samples per cell (default 2000, plus 10% adversarial)"},
               {"seed", "sampling seed (default 1)"},
               {"out", "CSV path; without it CSV goes to stdout and the summary to stderr"}});
  add_command(app, cmds, "retrograde", "continue, refine and classify the clockwise symmetric orbit",
              {{"mu", "mass ratio in (0,1)"},
               {"c", "energy parameter, level H = -c"},
               {"tol", "Newton tolerance on the shooting residual (default 1e-12)"},
               {"from", "orbit archive to classify instead of searching"},
               {"out", "write the orbit archive here"}});
  add_command(app, cmds, "return-map", "first-return map sweep on the section bounded by the retrograde orbit",
              {{"mu", "mass ratio in (0,1)"},
               {"c", "energy parameter"},
               {"tol", "Newton tolerance for the binding orbit (default 1e-12)"},
               {"grid", "polar grid rings (default 4)"},
               {"out", "CSV path (x1,x2,x1_next,x2_next,return_time)"}});
  add_command(app, cmds, "direct-orbit", "fixed point of the return map and its classification",
              {{"mu", "mass ratio in (0,1)"},
               {"c", "energy parameter"},
               {"tol", "Newton tolerance for the binding orbit (default 1e-12)"},
               {"grid", "seed grid rings (default 6)"},
               {"out", "write the orbit archive here"}});
  add_command(app, cmds, "link", "linking number of the binding orbit and the direct orbit (or ellipsoid fibers)",
              {{"mu", "mass ratio in (0,1)"},
               {"c", "energy parameter"},
               {"tol", "Newton tolerance for the binding orbit (default 1e-12)"},
               {"r1", "ellipsoid semi-axis r1 (default 1); selects the ellipsoid"},
               {"r2", "ellipsoid semi-axis r2 > r1; selects the ellipsoid"}});
  add_command(app, cmds, "ellipsoid-validate", "closed-form versus numerical indices of the ellipsoid fibers",
              {{"r1", "semi-axis r1 (default 1)"}, {"r2", "semi-axis r2 > r1 (required)"}});
  add_command(app, cmds, "finsler", "rotation angle of the linearized geodesic flow",
              {{"k", "constant curvature (default 1)"},
               {"length", "geodesic length (default 2 pi)"},
               {"profile", "CSV file with t,K columns instead of --k/--length"},
               {"theta0", "initial angle (default 0)"},
               {"loops", "also bound the index over this many copies of the loop (default 0: off)"}});
  add_command(app, cmds, "index-selftest", "internal consistency checks of the index machinery",
              {{"seed", "seed for the random loops (default 1)"}, {"grid", "number of random loops (default 10)"}});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version report success; everything else is a usage error.
    return app.exit(e) == 0 ? 0 : exit_usage;
  }

  using Handler = int (*)(const RunConfig&);
  const std::map<std::string, Handler> handlers = {
      {"convexity-scan", cmd_convexity_scan}, {"retrograde", cmd_retrograde},
      {"return-map", cmd_return_map},         {"direct-orbit", cmd_direct_orbit},
      {"link", cmd_link},                     {"ellipsoid-validate", cmd_ellipsoid_validate},
      {"finsler", cmd_finsler},               {"index-selftest", cmd_index_selftest}};

  for (auto& [name, cmd] : cmds) {
    if (!cmd.app->parsed()) continue;
    try {
      const RunConfig cfg = make_config(name, cmd);
      return handlers.at(name)(cfg);
    } catch (const ConfigError& e) {
      std::cerr << "rp3 " << name << ": " << e.what() << '\n';
      return exit_config;
    } catch (const ParseError& e) {
      std::cerr << "rp3 " << name << ": " << e.what() << '\n';
      return exit_input;
    } catch (const DomainError& e) {
      std::cerr << "rp3 " << name << ": " << e.what() << '\n';
      return exit_config;
    } catch (const Error& e) {
      std::cerr << "rp3 " << name << ": " << e.what() << '\n';
      return exit_numerical;
    }
  }
  return exit_usage;
}
