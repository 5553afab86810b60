#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace moonshine {

/// Token bucket shared by concurrent network workers. rate <= 0 disables limiting.
class TokenBucket {
 public:
  TokenBucket(double rate_per_second, double burst)
      : rate_(rate_per_second), capacity_(std::max(burst, 1.0)), tokens_(capacity_),
        last_(std::chrono::steady_clock::now()) {}

  void acquire() {
    if (rate_ <= 0) return;
    std::unique_lock lock(mutex_);
    for (;;) {
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(capacity_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

 private:
  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mutex_;
};

// Runs fn(i) for i in [0, count) on at most `workers` threads. The first
// exception (lowest index) is rethrown after all workers stop.
inline void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::clamp(workers, 1, std::max(count, 1));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  int error_index = count;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (i < error_index) {
            error_index = i;
            error = std::current_exception();
          }
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// At most `active` holders at once; up to `queue` more callers wait for a slot and
/// anyone beyond that is turned away.
class AdmissionGate {
 public:
  AdmissionGate(int active, int queue) : active_limit_(std::max(active, 1)), queue_limit_(std::max(queue, 0)) {}

  class Ticket {
   public:
    explicit Ticket(AdmissionGate* gate = nullptr) : gate_(gate) {}
    Ticket(Ticket&& other) noexcept : gate_(std::exchange(other.gate_, nullptr)) {}
    Ticket& operator=(Ticket&& other) noexcept {
      if (this != &other) {
        release();
        gate_ = std::exchange(other.gate_, nullptr);
      }
      return *this;
    }
    ~Ticket() { release(); }
    explicit operator bool() const { return gate_ != nullptr; }

   private:
    void release() {
      if (gate_) gate_->leave();
      gate_ = nullptr;
    }
    AdmissionGate* gate_;
  };

  // Empty ticket when the queue is full.
  Ticket enter() {
    std::unique_lock lock(mutex_);
    if (active_ >= active_limit_) {
      if (waiting_ >= queue_limit_) return Ticket{};
      ++waiting_;
      cv_.wait(lock, [&] { return active_ < active_limit_; });
      --waiting_;
    }
    ++active_;
    return Ticket{this};
  }

  int active() const {
    std::lock_guard lock(mutex_);
    return active_;
  }
  int waiting() const {
    std::lock_guard lock(mutex_);
    return waiting_;
  }

 private:
  void leave() {
    {
      std::lock_guard lock(mutex_);
      --active_;
    }
    cv_.notify_one();
  }

  const int active_limit_;
  const int queue_limit_;
  int active_ = 0;
  int waiting_ = 0;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
};

}  // namespace moonshine
