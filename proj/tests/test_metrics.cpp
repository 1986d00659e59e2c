#include <doctest.h>

#include <chrono>
#include <thread>

#include "p2pfaas/errors.hpp"
#include "p2pfaas/metrics.hpp"

using namespace p2pfaas;
using namespace std::chrono_literals;

TEST_CASE("a single stage records its wall time") {
    MetricsRecorder recorder;
    recorder.stage_begin("work");
    std::this_thread::sleep_for(120ms);
    const double duration = recorder.stage_end("work");
    CHECK(duration >= 0.115);
    CHECK(duration < 0.5);

    const auto summary = recorder.summarize();
    REQUIRE(summary.size() == 1);
    CHECK(summary[0].stage == "work");
    CHECK(summary[0].samples == 1);
    CHECK(summary[0].mean_time_s == doctest::Approx(duration).epsilon(1e-12));
    CHECK(summary[0].peak_memory_bytes > 0);
}

TEST_CASE("five stages over four epochs summarize to five rows of four samples") {
    MetricsRecorder recorder;
    const std::vector<std::string> stages{"compute-gradients", "send-gradients", "receive-gradients", "model-update",
                                          "convergence-detection"};
    for (int epoch = 0; epoch < 4; ++epoch) {
        for (const std::string& stage : stages) {
            recorder.stage_begin(stage);
            recorder.stage_end(stage);
        }
    }
    const auto summary = recorder.summarize();
    REQUIRE(summary.size() == 5);
    for (std::size_t i = 0; i < stages.size(); ++i) {
        CHECK(summary[i].stage == stages[i]);  // first-seen order preserved
        CHECK(summary[i].samples == 4);
    }
}

TEST_CASE("stages nest LIFO") {
    MetricsRecorder recorder;
    recorder.stage_begin("outer");
    recorder.stage_begin("inner");
    CHECK_NOTHROW(recorder.stage_end("inner"));
    CHECK_NOTHROW(recorder.stage_end("outer"));
}

TEST_CASE("unbalanced stage calls are instrumentation errors") {
    MetricsRecorder recorder;
    CHECK_THROWS_AS(recorder.stage_end("never-started"), InstrumentationError);
    recorder.stage_begin("a");
    CHECK_THROWS_AS(recorder.stage_end("b"), InstrumentationError);
}

TEST_CASE("an explicit busy measure drives the cpu proxy") {
    MetricsRecorder recorder;
    recorder.stage_begin("fanout");
    std::this_thread::sleep_for(50ms);
    recorder.stage_end("fanout", 0.4);  // e.g. 8 workers x 50ms busy
    const auto summary = recorder.summarize();
    REQUIRE(summary.size() == 1);
    CHECK(summary[0].mean_cpu_proxy > 1.0);  // parallel busy time exceeds wall time
}
