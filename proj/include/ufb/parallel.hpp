#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ufb {

/*!
  Fixed set of workers that split an index range into contiguous chunks.
  Callers only use it for loops whose iterations write disjoint locations, so
  results do not depend on the worker count.
*/
class WorkerPool {
public:
  explicit WorkerPool(int threads) : threads_(std::max(1, threads)) {
    for (int w = 1; w < threads_; ++w)
      workers_.emplace_back([this, w] { run(w); });
  }
  WorkerPool(const WorkerPool &) = delete;
  WorkerPool &operator=(const WorkerPool &) = delete;
  ~WorkerPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
      ++generation_;
    }
    cv_.notify_all();
  }

  int threads() const { return threads_; }

  //! Calls body(begin, end) on [0, n) split into one chunk per worker.
  void for_chunks(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)> &body) {
    if (threads_ == 1 || n < 256) {
      body(0, n);
      return;
    }
    {
      std::lock_guard lock(mu_);
      body_ = &body;
      n_ = n;
      pending_ = threads_ - 1;
      ++generation_;
    }
    cv_.notify_all();
    body(0, chunk_end(0));
    std::unique_lock lock(mu_);
    done_.wait(lock, [this] { return pending_ == 0; });
    body_ = nullptr;
  }

private:
  std::size_t chunk_begin(int w) const { return n_ * w / threads_; }
  std::size_t chunk_end(int w) const { return n_ * (w + 1) / threads_; }

  void run(int w) {
    std::size_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t, std::size_t)> *body;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return generation_ != seen; });
        seen = generation_;
        if (stop_)
          return;
        body = body_;
      }
      (*body)(chunk_begin(w), chunk_end(w));
      {
        std::lock_guard lock(mu_);
        --pending_;
      }
      done_.notify_one();
    }
  }

  int threads_;
  std::vector<std::jthread> workers_;
  std::mutex mu_;
  std::condition_variable cv_, done_;
  const std::function<void(std::size_t, std::size_t)> *body_ = nullptr;
  std::size_t n_ = 0;
  int pending_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
};

namespace detail {
inline int &default_thread_slot() {
  static int threads = [] {
    if (const char *env = std::getenv("UFB_THREADS")) {
      const int t = std::atoi(env);
      if (t > 0)
        return t;
    }
    return 1;
  }();
  return threads;
}
} // namespace detail

//! Worker count used by solvers unless overridden; seeded from UFB_THREADS.
inline int default_threads() { return detail::default_thread_slot(); }
inline void set_default_threads(int t) {
  detail::default_thread_slot() = std::max(1, t);
}

} // namespace ufb
