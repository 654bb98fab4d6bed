#pragma once

#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>

namespace trafficproc {

// Bounded multi-producer queue with blocking push (backpressure) and a close
// handshake so consumers drain and exit.
template <typename T>
class BoundedQueue {
  public:
    explicit BoundedQueue(size_t capacity) : cap_(capacity ? capacity : 1) {}

    // Blocks while full. Returns false if the queue was closed.
    bool push(T item) {
        std::unique_lock lk(mu_);
        not_full_.wait(lk, [&] { return q_.size() < cap_ || closed_; });
        if (closed_) return false;
        q_.push_back(std::move(item));
        not_empty_.notify_one();
        return true;
    }

    // Blocks until an item arrives or the queue is closed and drained.
    std::optional<T> pop() {
        std::unique_lock lk(mu_);
        not_empty_.wait(lk, [&] { return !q_.empty() || closed_; });
        if (q_.empty()) return std::nullopt;
        T item = std::move(q_.front());
        q_.pop_front();
        not_full_.notify_one();
        return item;
    }

    void close() {
        std::lock_guard lk(mu_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

    size_t size() const {
        std::lock_guard lk(mu_);
        return q_.size();
    }

  private:
    mutable std::mutex mu_;
    std::condition_variable not_full_, not_empty_;
    std::deque<T> q_;
    size_t cap_;
    bool closed_ = false;
};

}  // namespace trafficproc
