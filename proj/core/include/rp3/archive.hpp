#pragma once

// Plain-text orbit archive:
//   # mu=<mu> c=<c> period=<T> chart=<name> residual=<shooting residual>
//   # antipodal=<0|1> symmetry=<none|doubly-symmetric>
//   t,<four state columns>
//   rows...
// Doubles are written at 17 significant digits, so reading an archive
// reproduces every stored value exactly.

#include <filesystem>
#include <iosfwd>

#include "rp3/orbit.hpp"

namespace rp3 {

// Requires model parameters on the orbit.
void write_archive(std::ostream& os, const ClosedOrbit& orbit);

// Throws ParseError on any malformed header, row or column count.
ClosedOrbit read_archive(std::istream& is);

void save_archive(const std::filesystem::path& path, const ClosedOrbit& orbit);
ClosedOrbit load_archive(const std::filesystem::path& path);

}  // namespace rp3
