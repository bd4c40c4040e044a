#include "trext/core.hpp"

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <thread>

namespace trext {

int worker_threads() {
  static int n = [] {
    const char* env = std::getenv("TREXT_THREADS");
    if (!env) return 1;
    int v = std::atoi(env);
    return v < 1 ? 1 : v;
  }();
  return n;
}

double reduce_blocks(std::size_t count, std::size_t block,
                     const std::function<double(std::size_t, std::size_t)>& fn) {
  if (count == 0) return 0.0;
  if (block == 0) block = 1;
  const std::size_t nblocks = (count + block - 1) / block;
  std::vector<double> partial(nblocks, 0.0);
  const int nthreads = worker_threads();
  if (nthreads <= 1 || nblocks == 1) {
    for (std::size_t b = 0; b < nblocks; ++b)
      partial[b] = fn(b * block, std::min(count, (b + 1) * block));
  } else {
    std::vector<std::thread> pool;
    std::size_t stride = static_cast<std::size_t>(nthreads);
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t b = static_cast<std::size_t>(t); b < nblocks; b += stride)
          partial[b] = fn(b * block, std::min(count, (b + 1) * block));
      });
    }
    for (auto& th : pool) th.join();
  }
  double sum = 0.0;
  for (double v : partial) sum += v;  // fixed combine order
  return sum;
}

std::string format(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  va_list copy;
  va_copy(copy, args);
  int len = std::vsnprintf(nullptr, 0, fmt, copy);
  va_end(copy);
  std::string out(static_cast<std::size_t>(len), '\0');
  std::vsnprintf(out.data(), out.size() + 1, fmt, args);
  va_end(args);
  return out;
}

}  // namespace trext
