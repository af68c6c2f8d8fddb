#include "loorisk/parallel.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace loorisk {

int resolve_threads(std::optional<int> requested) {
  if (requested) {
    if (*requested < 1) throw std::invalid_argument("threads must be >= 1");
    return *requested;
  }
  if (const char* env = std::getenv("LOORISK_THREADS"); env && *env) {
    const int v = std::stoi(env);
    if (v < 1) throw std::invalid_argument("LOORISK_THREADS must be >= 1");
    return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace loorisk
