#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace somd {

/// Thrown from a wait when the phaser was aborted (another party failed, or the watchdog fired).
class PhaserAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by a wait that exceeded its deadline.
class PhaserTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-party reusable barrier with non-blocking arrival.
class Phaser {
 public:
  Phaser(std::string name, int parties);

  /// Registers an arrival without waiting. Returns the phase arrived at.
  int arrive();
  /// Arrives and blocks until the phase advances. A zero timeout waits forever.
  int arrive_and_wait(std::chrono::milliseconds timeout = std::chrono::milliseconds{0});
  /// Blocks until the phase moves past `phase`.
  void await_advance(int phase, std::chrono::milliseconds timeout = std::chrono::milliseconds{0});
  /// Wakes every waiter with PhaserAborted. Later waits fail immediately.
  void abort(const std::string& why);

  int phase() const;
  int parties() const { return parties_; }
  int arrived() const;
  bool aborted() const;
  /// `name: phase P, A of N arrived`
  std::string describe() const;

 private:
  void wait_locked(std::unique_lock<std::mutex>& lk, int phase, std::chrono::milliseconds timeout);

  std::string name_;
  const int parties_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int phase_ = 0;
  int arrived_ = 0;
  bool aborted_ = false;
  std::string abort_reason_;
};

/// Fixed-size worker pool. Tasks that block on barriers must reserve workers first so that
/// every party of a barrier can be running at once.
class ThreadPool {
 public:
  explicit ThreadPool(int workers);
  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return static_cast<int>(threads_.size()); }
  void submit(std::function<void()> task);
  /// Reserves up to `n` workers for blocking tasks; returns how many were granted.
  int reserve(int n);
  void release(int n);

  /// Process-wide pool sized to the hardware concurrency.
  static ThreadPool& shared();

 private:
  void loop();

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  bool stop_ = false;
  std::atomic<int> free_for_blocking_;
};

/// Counts outstanding tasks; wait() returns once all have finished.
class TaskLatch {
 public:
  explicit TaskLatch(int count) : count_(count) {}
  void count_down();
  void wait();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int count_;
};

}  // namespace somd
