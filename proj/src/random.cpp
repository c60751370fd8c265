#include "promptevo/random.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace promptevo {

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string serialize_rng(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

Rng deserialize_rng(const std::string& state) {
  std::istringstream in(state);
  Rng rng;
  in >> rng;
  if (!in) throw std::runtime_error("corrupt rng state");
  return rng;
}

}  // namespace promptevo
