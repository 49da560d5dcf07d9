#include "peeriv/parallel.hpp"

#include <cstdlib>
#include <string>

#include "peeriv/errors.hpp"

namespace peeriv {

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PEERIV_THREADS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0' || v == 0 || v > 4096) {
      throw ConfigError("PEERIV_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace peeriv
