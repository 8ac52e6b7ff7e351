#pragma once

#include <algorithm>
#include <chrono>
#include <thread>

namespace b2p {

// Injected time base, in seconds since the clock's own origin.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now_s() const = 0;
  virtual void sleep_until(double t_s) = 0;
};

// Advances only when asked; sleeping jumps straight to the deadline.
class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(double start_s = 0.0) : now_(start_s) {}
  double now_s() const override { return now_; }
  void sleep_until(double t_s) override { now_ = std::max(now_, t_s); }
  void advance(double dt_s) { now_ += std::max(0.0, dt_s); }

 private:
  double now_;
};

class SteadyClock final : public Clock {
 public:
  SteadyClock() : origin_(std::chrono::steady_clock::now()) {}
  double now_s() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
  }
  void sleep_until(double t_s) override {
    std::this_thread::sleep_until(origin_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                std::chrono::duration<double>(t_s)));
  }

 private:
  std::chrono::steady_clock::time_point origin_;
};

}  // namespace b2p
