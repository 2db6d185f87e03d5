#include "ebsdict/parallel.hpp"

#include <cstdlib>
#include <string>

namespace ebsdict {

int default_workers() {
  if (const char* env = std::getenv("EBSDICT_WORKERS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace ebsdict
