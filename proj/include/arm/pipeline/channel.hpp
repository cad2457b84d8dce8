#pragma once

#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stop_token>

namespace arm::pipeline {

enum class QueuePolicy { Lossless, LatestWins };

// Single-slot handoff between two stage workers. Lossless blocks the producer
// while the slot is full; LatestWins overwrites the waiting item and counts it
// as dropped.
template <class T>
class Channel {
public:
    explicit Channel(QueuePolicy policy) : policy_(policy) {}

    // False when the channel was closed or the stop was requested.
    bool push(T item, std::stop_token stop)
    {
        std::unique_lock lock(mutex_);
        if (policy_ == QueuePolicy::Lossless) {
            if (!cv_.wait(lock, stop, [&] { return !slot_ || closed_; })) return false;
        }
        if (closed_) return false;
        if (slot_) ++dropped_;
        slot_ = std::move(item);
        cv_.notify_all();
        return true;
    }

    // Empty once closed and drained, or on stop.
    std::optional<T> pop(std::stop_token stop)
    {
        std::unique_lock lock(mutex_);
        if (!cv_.wait(lock, stop, [&] { return slot_.has_value() || closed_; })) return std::nullopt;
        if (!slot_) return std::nullopt;
        std::optional<T> out = std::move(slot_);
        slot_.reset();
        cv_.notify_all();
        return out;
    }

    void close()
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
        cv_.notify_all();
    }

    std::uint64_t dropped() const
    {
        std::lock_guard lock(mutex_);
        return dropped_;
    }

private:
    QueuePolicy policy_;
    mutable std::mutex mutex_;
    std::condition_variable_any cv_;
    std::optional<T> slot_;
    bool closed_ = false;
    std::uint64_t dropped_ = 0;
};

} // namespace arm::pipeline
