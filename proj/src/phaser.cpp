#include "somd/phaser.hpp"

#include <algorithm>

namespace somd {

Phaser::Phaser(std::string name, int parties) : name_(std::move(name)), parties_(parties) {
  if (parties < 1) throw std::invalid_argument("phaser needs at least one party");
}

int Phaser::arrive() {
  std::lock_guard lk(mu_);
  if (aborted_) throw PhaserAborted(abort_reason_);
  int p = phase_;
  if (++arrived_ == parties_) {
    arrived_ = 0;
    ++phase_;
    cv_.notify_all();
  }
  return p;
}

int Phaser::arrive_and_wait(std::chrono::milliseconds timeout) {
  std::unique_lock lk(mu_);
  if (aborted_) throw PhaserAborted(abort_reason_);
  int p = phase_;
  if (++arrived_ == parties_) {
    arrived_ = 0;
    ++phase_;
    cv_.notify_all();
    return p;
  }
  wait_locked(lk, p, timeout);
  return p;
}

void Phaser::await_advance(int phase, std::chrono::milliseconds timeout) {
  std::unique_lock lk(mu_);
  wait_locked(lk, phase, timeout);
}

void Phaser::wait_locked(std::unique_lock<std::mutex>& lk, int phase, std::chrono::milliseconds timeout) {
  auto done = [&] { return phase_ != phase || aborted_; };
  if (timeout.count() > 0) {
    if (!cv_.wait_for(lk, timeout, done))
      throw PhaserTimeout(name_ + ": phase " + std::to_string(phase_) + ", " + std::to_string(arrived_) +
                          " of " + std::to_string(parties_) + " arrived");
  } else {
    cv_.wait(lk, done);
  }
  if (phase_ == phase && aborted_) throw PhaserAborted(abort_reason_);
}

void Phaser::abort(const std::string& why) {
  std::lock_guard lk(mu_);
  if (aborted_) return;
  aborted_ = true;
  abort_reason_ = why;
  cv_.notify_all();
}

int Phaser::phase() const {
  std::lock_guard lk(mu_);
  return phase_;
}

int Phaser::arrived() const {
  std::lock_guard lk(mu_);
  return arrived_;
}

bool Phaser::aborted() const {
  std::lock_guard lk(mu_);
  return aborted_;
}

std::string Phaser::describe() const {
  std::lock_guard lk(mu_);
  return name_ + ": phase " + std::to_string(phase_) + ", " + std::to_string(arrived_) + " of " +
         std::to_string(parties_) + " arrived";
}

ThreadPool::ThreadPool(int workers) : free_for_blocking_(std::max(1, workers)) {
  workers = std::max(1, workers);
  threads_.reserve(static_cast<std::size_t>(workers));
  for (int k = 0; k < workers; ++k) threads_.emplace_back([this] { loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lk(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::submit(std::function<void()> task) {
  {
    std::lock_guard lk(mu_);
    queue_.push_back(std::move(task));
  }
  cv_.notify_one();
}

int ThreadPool::reserve(int n) {
  int cur = free_for_blocking_.load();
  for (;;) {
    int take = std::min(n, cur);
    if (take <= 0) return 0;
    if (free_for_blocking_.compare_exchange_weak(cur, cur - take)) return take;
  }
}

void ThreadPool::release(int n) { free_for_blocking_ += n; }

ThreadPool& ThreadPool::shared() {
  static ThreadPool pool(static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  return pool;
}

void ThreadPool::loop() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [&] { return stop_ || !queue_.empty(); });
      if (queue_.empty()) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

void TaskLatch::count_down() {
  std::lock_guard lk(mu_);
  if (--count_ == 0) cv_.notify_all();
}

void TaskLatch::wait() {
  std::unique_lock lk(mu_);
  cv_.wait(lk, [&] { return count_ <= 0; });
}

}  // namespace somd
