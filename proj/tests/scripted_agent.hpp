#pragma once

// Scripted verifier stub shared by the runtime tests and the acceptance
// suite: outcomes are keyed on (frame, epoch), everything else passes.

#include <chrono>
#include <map>
#include <optional>
#include <thread>
#include <vector>

#include "ptav/runtime.hpp"

namespace stubs {

class ScriptedAgent : public ptav::VerifyAgent {
public:
    struct Outcome {
        bool pass = true;
        std::optional<ptav::Box> corrected;
        std::optional<int> new_interval;
    };

    ScriptedAgent& fail_with_correction(long frame, uint64_t epoch, const ptav::Box& corrected,
                                        int restore_interval) {
        rules_[{frame, epoch}] = Outcome{false, corrected, restore_interval};
        return *this;
    }
    ScriptedAgent& fail_unreliable(long frame, uint64_t epoch) {
        rules_[{frame, epoch}] = Outcome{false, std::nullopt, 1};
        return *this;
    }
    ScriptedAgent& delay_ms(double ms) {
        delay_ms_ = ms;
        return *this;
    }

    ptav::Feedback handle(const ptav::VerifyRequest& req) override {
        if (delay_ms_ > 0.0)
            std::this_thread::sleep_for(std::chrono::microseconds(int64_t(delay_ms_ * 1000)));
        handled.push_back({req.frame_index, req.epoch});
        ptav::Feedback fb;
        fb.frame_index = req.frame_index;
        fb.epoch = req.epoch;
        fb.score = 1.0;
        const auto it = rules_.find({req.frame_index, req.epoch});
        if (it != rules_.end()) {
            fb.passed = it->second.pass;
            fb.corrected_box = it->second.corrected;
            fb.new_interval = it->second.new_interval;
            fb.score = it->second.pass ? 1.0 : 0.0;
        }
        return fb;
    }

    std::vector<std::pair<long, uint64_t>> handled;

private:
    std::map<std::pair<long, uint64_t>, Outcome> rules_;
    double delay_ms_ = 0.0;
};

}  // namespace stubs
