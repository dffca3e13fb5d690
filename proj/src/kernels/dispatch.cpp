#include <atomic>
#include <cstdlib>
#include <string>

#include "scrabble/kernels.hpp"

namespace scrabble::kernels {
namespace {

const KernelTable* pick_default() {
  if (const char* env = std::getenv("SCRABBLE_KERNELS")) {
    if (std::string(env) == "scalar") return &scalar_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{pick_default()};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
  if (name == "scalar") {
    slot().store(&scalar_table());
    return true;
  }
  if (name == "avx2") {
    if (const KernelTable* t = avx2_table()) {
      slot().store(t);
      return true;
    }
  }
  return false;
}

}  // namespace scrabble::kernels
