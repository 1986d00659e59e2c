#include "p2pfaas/metrics.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>

#include <unistd.h>

#include "p2pfaas/errors.hpp"

namespace p2pfaas {

namespace {

double thread_cpu_seconds() {
    timespec ts{};
    if (clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts) != 0) return 0.0;
    return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

}  // namespace

std::size_t MetricsRecorder::current_rss_bytes() {
    std::ifstream statm("/proc/self/statm");
    std::size_t total_pages = 0;
    std::size_t resident_pages = 0;
    if (!(statm >> total_pages >> resident_pages)) return 0;
    return resident_pages * static_cast<std::size_t>(sysconf(_SC_PAGESIZE));
}

MetricsRecorder::MetricsRecorder() { sampler_ = std::thread([this] { sampler_loop(); }); }

MetricsRecorder::~MetricsRecorder() {
    stop_.store(true);
    if (sampler_.joinable()) sampler_.join();
}

void MetricsRecorder::sampler_loop() {
    while (!stop_.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        const std::size_t rss = current_rss_bytes();
        std::lock_guard lock(mutex_);
        for (OpenStage& stage : stack_) stage.peak_rss = std::max(stage.peak_rss, rss);
    }
}

void MetricsRecorder::stage_begin(const std::string& stage) {
    OpenStage open;
    open.name = stage;
    open.begin = std::chrono::steady_clock::now();
    open.cpu_begin_s = thread_cpu_seconds();
    open.peak_rss = current_rss_bytes();
    std::lock_guard lock(mutex_);
    stack_.push_back(std::move(open));
}

double MetricsRecorder::stage_end(const std::string& stage, std::optional<double> busy_s) {
    const auto now = std::chrono::steady_clock::now();
    const double cpu_now = thread_cpu_seconds();
    const std::size_t rss = current_rss_bytes();

    std::lock_guard lock(mutex_);
    if (stack_.empty()) throw InstrumentationError("stage_end('" + stage + "') without a matching stage_begin");
    OpenStage open = std::move(stack_.back());
    stack_.pop_back();
    if (open.name != stage) {
        throw InstrumentationError("stage_end('" + stage + "') does not match open stage '" + open.name + "'");
    }

    Sample sample;
    sample.duration_s = std::chrono::duration<double>(now - open.begin).count();
    sample.peak_rss = std::max(open.peak_rss, rss);
    const double busy = busy_s.value_or(cpu_now - open.cpu_begin_s);
    sample.cpu_proxy = sample.duration_s > 0.0 ? busy / sample.duration_s : 0.0;

    if (!samples_.contains(stage)) order_.push_back(stage);
    samples_[stage].push_back(sample);
    return sample.duration_s;
}

std::vector<MetricsRecorder::StageSummary> MetricsRecorder::summarize() const {
    std::lock_guard lock(mutex_);
    std::vector<StageSummary> out;
    out.reserve(order_.size());
    for (const std::string& stage : order_) {
        const std::vector<Sample>& samples = samples_.at(stage);
        StageSummary summary;
        summary.stage = stage;
        summary.samples = static_cast<int>(samples.size());
        for (const Sample& s : samples) {
            summary.mean_time_s += s.duration_s;
            summary.mean_cpu_proxy += s.cpu_proxy;
            summary.peak_memory_bytes = std::max(summary.peak_memory_bytes, s.peak_rss);
        }
        if (!samples.empty()) {
            summary.mean_time_s /= static_cast<double>(samples.size());
            summary.mean_cpu_proxy /= static_cast<double>(samples.size());
        }
        out.push_back(std::move(summary));
    }
    return out;
}

}  // namespace p2pfaas
