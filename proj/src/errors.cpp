#include "promptevo/errors.hpp"

#include <sstream>

namespace promptevo {

namespace {

std::string describe_missing(const std::vector<std::size_t>& missing) {
  std::ostringstream out;
  out << "groups do not cover indices [";
  for (std::size_t i = 0; i < missing.size(); ++i) {
    if (i) out << ", ";
    out << missing[i] + 1;
  }
  out << "]";
  return out.str();
}

}  // namespace

CoverageError::CoverageError(std::vector<std::size_t> missing, std::string raw)
    : ParseError(describe_missing(missing), std::move(raw)), missing_(std::move(missing)) {}

}  // namespace promptevo
