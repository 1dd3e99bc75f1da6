#include "bloch/parallel.hpp"

namespace bloch {

namespace {
int g_workers = 0;
}

int worker_count() {
    if (g_workers > 0) return g_workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_worker_count(int jobs) { g_workers = jobs > 0 ? jobs : 0; }

}  // namespace bloch
