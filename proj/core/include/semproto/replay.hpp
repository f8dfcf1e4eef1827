#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "semproto/env.hpp"

namespace semproto {

/// One stored cycle: buffer states, the intermediate activations the
/// extraction step needs, Q-values, chosen actions, reward, successor.
struct Transition {
    std::array<int, kNumUes> b{0, 0};
    std::array<int, kNumUes> b_next{0, 0};
    std::array<std::vector<double>, kNumUes> u;
    std::array<std::vector<double>, kNumUes> d;
    std::array<std::array<double, 3>, kNumUes> q{};
    ActionPair actions{UeAction::Silence, UeAction::Silence};
    double reward = 0.0;
    bool terminal = false;
};

/// Ring buffer with oldest-first eviction.
class EpisodicMemory {
public:
    explicit EpisodicMemory(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return size_ == 0; }

    /// index 0 is the oldest stored transition.
    const Transition& at(std::size_t index) const;

    void save(const std::string& path) const;
    static EpisodicMemory load(const std::string& path);

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // next write slot
    std::size_t size_ = 0;
    std::vector<Transition> slots_;
};

}  // namespace semproto
