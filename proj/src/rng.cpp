#include "pid/rng.hpp"

#include <sstream>

#include "pid/errors.hpp"

namespace pid {

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::set_state(const std::string& s) {
  std::istringstream is(s);
  is >> engine_;
  if (is.fail()) throw ConfigError("rng_state: not a valid mt19937_64 state string");
}

}  // namespace pid
