#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace p2pfaas {

// Per-peer stage instrumentation: wall time per begin/end pair, process RSS
// polled at 100 ms while stages are open, and a CPU proxy (busy time over
// wall time; defaults to the calling thread's CPU time). Stages may nest;
// begin/end must pair LIFO.
class MetricsRecorder {
public:
    struct StageSummary {
        std::string stage;
        int samples = 0;
        double mean_time_s = 0.0;
        std::size_t peak_memory_bytes = 0;
        double mean_cpu_proxy = 0.0;
    };

    MetricsRecorder();
    ~MetricsRecorder();

    MetricsRecorder(const MetricsRecorder&) = delete;
    MetricsRecorder& operator=(const MetricsRecorder&) = delete;

    void stage_begin(const std::string& stage);

    // Closes the innermost open stage (must match `stage`) and returns its
    // wall duration. busy_s overrides the CPU-time-based busy measure, e.g.
    // with the executor's summed branch durations.
    double stage_end(const std::string& stage, std::optional<double> busy_s = std::nullopt);

    // One row per distinct stage, in first-seen order.
    std::vector<StageSummary> summarize() const;

    static std::size_t current_rss_bytes();

private:
    struct OpenStage {
        std::string name;
        std::chrono::steady_clock::time_point begin;
        double cpu_begin_s = 0.0;
        std::size_t peak_rss = 0;
    };

    struct Sample {
        double duration_s = 0.0;
        double cpu_proxy = 0.0;
        std::size_t peak_rss = 0;
    };

    void sampler_loop();

    mutable std::mutex mutex_;
    std::vector<OpenStage> stack_;
    std::vector<std::string> order_;
    std::map<std::string, std::vector<Sample>> samples_;

    std::atomic<bool> stop_{false};
    std::thread sampler_;
};

}  // namespace p2pfaas
