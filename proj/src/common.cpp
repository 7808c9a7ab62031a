#include "common.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <atomic>
#include <thread>

namespace slipstokes {

GaussRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ConfigError("Gauss-Legendre rule needs at least one node");
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(a, b, i, &r.x[i], &r.w[i], t);
  gsl_integration_glfixed_table_free(t);
  // GSL orders nodes symmetrically about the midpoint; sort for stable layouts.
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  std::sort(p.begin(), p.end(), [&](int i, int j) { return r.x[i] < r.x[j]; });
  GaussRule s;
  for (int i : p) {
    s.x.push_back(r.x[i]);
    s.w.push_back(r.w[i]);
  }
  return s;
}

namespace {
std::atomic<int> g_jobs{0};
}

void set_jobs(int n) { g_jobs = std::max(0, n); }

int jobs() {
  int n = g_jobs.load();
  if (n > 0) return n;
  unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : static_cast<int>(std::min(h, 16u));
}

std::pair<int, int> chunk_range(int n, int chunks, int c) {
  long b = static_cast<long>(n) * c / chunks, e = static_cast<long>(n) * (c + 1) / chunks;
  return {static_cast<int>(b), static_cast<int>(e)};
}

int reduction_chunks(int n) { return std::max(1, std::min(n, 64)); }

void parallel_for(int n, const std::function<void(int, int)>& body) {
  if (n <= 0) return;
  int w = std::min(jobs(), n);
  if (w <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(w);
  for (int t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      try {
        auto [b, e] = chunk_range(n, w, t);
        body(b, e);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace slipstokes
