#include "numerologic/kernels.hpp"

#include <atomic>

namespace numerologic::kernels {

namespace {
std::atomic<Backend> g_backend{Backend::parallel};
}

void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

}  // namespace numerologic::kernels
