#include "wavescore/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace wavescore {

namespace {

int env_thread_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* s = std::getenv("WAVESCORE_THREADS")) {
    int v = std::atoi(s);
    if (v > 0) return std::min(v, hw);
  }
  return hw;
}

std::atomic<int> g_override{0};

}  // namespace

int thread_count() {
  int v = g_override.load(std::memory_order_relaxed);
  if (v > 0) return v;
  static const int env = env_thread_count();
  return env;
}

void set_thread_count(int n) { g_override.store(n, std::memory_order_relaxed); }

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
  if (n <= 0) return;
  int workers = std::min<int64_t>(thread_count(), n);
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) {
    int64_t b = w * chunk, e = std::min<int64_t>(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(0, std::min<int64_t>(n, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace wavescore
