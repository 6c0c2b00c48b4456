#include "rp3/archive.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "rp3/errors.hpp"

namespace rp3 {

namespace {

const char* columns(Chart c) {
  switch (c) {
    case Chart::rotating: return "t,q1,q2,p1,p2";
    case Chart::levi_civita: return "t,v1,v2,u1,u2";
    case Chart::ellipsoid: break;
  }
  throw DomainError("archive: ellipsoid orbits carry no model parameters");
}

double parse_double(std::string_view s, int line) {
  double v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw ParseError(fmt::format("archive line {}: '{}' is not a number", line, s));
  return v;
}

std::map<std::string, std::string> parse_header(const std::string& text, int line) {
  if (text.rfind("# ", 0) != 0) throw ParseError(fmt::format("archive line {}: expected a '# ' header", line));
  std::map<std::string, std::string> kv;
  std::istringstream ss(text.substr(2));
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == tok.size())
      throw ParseError(fmt::format("archive line {}: malformed field '{}'", line, tok));
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

const std::string& field(const std::map<std::string, std::string>& kv, const char* key, int line) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw ParseError(fmt::format("archive line {}: missing '{}'", line, key));
  return it->second;
}

}  // namespace

void write_archive(std::ostream& os, const ClosedOrbit& o) {
  if (!o.params) throw DomainError("write_archive: orbit carries no model parameters");
  const char* cols = columns(o.chart);
  os << fmt::format("# mu={:.17g} c={:.17g} period={:.17g} chart={} residual={:.17g}\n", o.params->mu,
                    o.params->c, o.period, to_string(o.chart), o.shooting_residual);
  os << fmt::format("# antipodal={} symmetry={}\n", o.antipodal ? 1 : 0,
                    o.symmetry == SymmetryTag::doubly_symmetric ? "doubly-symmetric" : "none");
  os << cols << '\n';
  for (std::size_t i = 0; i < o.samples.size(); ++i) {
    const Vec4& x = o.samples[i];
    os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", o.times[i], x[0], x[1], x[2], x[3]);
  }
}

ClosedOrbit read_archive(std::istream& is) {
  std::string text;
  int line = 0;
  auto next = [&]() -> bool {
    ++line;
    return bool(std::getline(is, text));
  };
  if (!next()) throw ParseError("archive: empty input");
  const auto h1 = parse_header(text, line);
  ClosedOrbit o;
  ModelParams p;
  p.mu = parse_double(field(h1, "mu", line), line);
  p.c = parse_double(field(h1, "c", line), line);
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ParseError(fmt::format("archive line {}: {}", line, e.what()));
  }
  o.params = p;
  o.period = parse_double(field(h1, "period", line), line);
  try {
    o.chart = chart_from_string(field(h1, "chart", line));
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("archive line {}: {}", line, e.what()));
  }
  o.shooting_residual = parse_double(field(h1, "residual", line), line);
  if (!(o.period > 0)) throw ParseError("archive line 1: period must be positive");

  if (!next()) throw ParseError("archive: missing second header line");
  const auto h2 = parse_header(text, line);
  const std::string& anti = field(h2, "antipodal", line);
  if (anti != "0" && anti != "1") throw ParseError(fmt::format("archive line {}: antipodal must be 0 or 1", line));
  o.antipodal = anti == "1";
  const std::string& sym = field(h2, "symmetry", line);
  if (sym == "doubly-symmetric") o.symmetry = SymmetryTag::doubly_symmetric;
  else if (sym != "none") throw ParseError(fmt::format("archive line {}: unknown symmetry '{}'", line, sym));

  if (!next() || text != columns(o.chart))
    throw ParseError(fmt::format("archive line {}: expected column header '{}'", line, columns(o.chart)));

  while (next()) {
    if (text.empty()) continue;
    std::vector<double> v;
    std::size_t start = 0;
    while (true) {
      const auto comma = text.find(',', start);
      v.push_back(parse_double(std::string_view(text).substr(start, comma - start), line));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (v.size() != 5) throw ParseError(fmt::format("archive line {}: expected 5 columns, got {}", line, v.size()));
    o.times.push_back(v[0]);
    o.samples.emplace_back(v[1], v[2], v[3], v[4]);
  }
  if (o.samples.size() < 3) throw ParseError("archive: too few sample rows");
  if (o.antipodal && o.samples.size() % 2 == 0) throw ParseError("archive: antipodal orbit needs an odd row count");

  const auto h = chart_hamiltonian(p, o.chart);
  o.energy = h->value(o.samples.front());
  for (const auto& x : o.samples) o.energy_residual = std::max(o.energy_residual, std::abs(h->value(x) - o.energy));
  o.closure_residual = (o.samples.back() - o.samples.front()).norm();
  return o;
}

void save_archive(const std::filesystem::path& path, const ClosedOrbit& orbit) {
  std::ostringstream ss;
  write_archive(ss, orbit);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("save_archive: cannot open " + path.string());
  f << ss.str();
  if (!f) throw Error("save_archive: write failed for " + path.string());
}

ClosedOrbit load_archive(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("load_archive: cannot open " + path.string());
  return read_archive(f);
}

}  // namespace rp3
