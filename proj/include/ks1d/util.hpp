// SPDX-License-Identifier: Apache-2.0

#ifndef KS1D_UTIL_HPP
#define KS1D_UTIL_HPP

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace ks1d
{

inline constexpr const char *kVersion = "0.1.0";

// splitmix64 step; used to derive independent per-sample RNG seeds so that
// results do not depend on thread count or sample evaluation order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index)
{
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Runs fn(i) for i in [0, count). Each index writes only its own output slot,
// so the result is identical for any thread count.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)> &fn)
{
  if (threads <= 1 || count <= 1)
  {
    for (std::size_t i = 0; i < count; i++)
    {
      fn(i);
    }
    return;
  }
  const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(nw);
  pool.reserve(nw);
  for (std::size_t w = 0; w < nw; w++)
  {
    pool.emplace_back(
        [&, w]()
        {
          try
          {
            for (std::size_t i = w; i < count; i += nw)
            {
              fn(i);
            }
          }
          catch (...)
          {
            errors[w] = std::current_exception();
          }
        });
  }
  for (auto &t : pool)
  {
    t.join();
  }
  for (const auto &err : errors)
  {
    if (err)
    {
      std::rethrow_exception(err);
    }
  }
}

}  // namespace ks1d

#endif  // KS1D_UTIL_HPP
