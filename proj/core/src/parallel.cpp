#include <slqheat/parallel.hpp>

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace slqheat {

namespace {
std::atomic<int> g_workers{1};
}  // namespace

void set_worker_threads(int n) {
  g_workers.store(std::max(1, n));
}

int worker_threads() {
  return g_workers.load();
}

void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::min(worker_threads(), n);
  // Thread spawn overhead dwarfs tiny loops; run those inline.
  if (workers <= 1 || n < 64) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace slqheat
