#include <doctest.h>

#include <fstream>
#include <sstream>

#include "p2pfaas/errors.hpp"
#include "p2pfaas/experiment.hpp"
#include "test_support.hpp"

using namespace p2pfaas;

namespace {

std::string small_config_text(const std::filesystem::path& out_dir, const std::string& extra = "") {
    std::ostringstream os;
    os << "dataset.kind = synthetic-blobs\n"
          "dataset.classes = 2\n"
          "dataset.features = 2\n"
          "dataset.samples = 400\n"
          "dataset.separation = 3.0\n"
          "model = logistic-regression\n"
          "peers = 2\n"
          "batch_size = 32\n"
          "epochs = 4\n"
          "lr = 0.1\n"
          "mode = sync\n"
          "encoding = raw-f64\n"
          "seed = 11\n"
          "convergence.early_stop_patience = 50\n"
          "convergence.plateau_patience = 25\n"
          "executor.mode = instance-sequential\n"
       << "out_dir = " << out_dir.string() << "\n"
       << extra;
    return os.str();
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ss(line);
        while (std::getline(ss, field, ',')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace

TEST_CASE("config parsing") {
    test::TempDir tmp;

    SUBCASE("round trip") {
        const RunConfig config = parse_run_config_text(small_config_text(tmp.path() / "out"));
        CHECK(config.peers == 2);
        CHECK(config.batch_size == 32);
        CHECK(config.mode == TrainingMode::Synchronous);
        const RunConfig again = parse_run_config_text(serialize_run_config(config));
        CHECK(serialize_run_config(again) == serialize_run_config(config));
    }

    SUBCASE("invalid values are reported with their keys") {
        try {
            parse_run_config_text(small_config_text(tmp.path() / "out", "peers = 0\n"));
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("peers") != std::string::npos);
        }
    }

    SUBCASE("unknown keys are rejected") {
        try {
            parse_run_config_text(small_config_text(tmp.path() / "out", "totally.bogus = 1\n"));
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("totally.bogus") != std::string::npos);
        }
    }

    SUBCASE("encoding tokens") {
        CHECK(parse_encoding("raw").kind == GradientEncoding::RawF64);
        CHECK(parse_encoding("raw-f64").kind == GradientEncoding::RawF64);
        CHECK(parse_encoding("qsgd(8)").qsgd_levels == 8);
        CHECK_THROWS(parse_encoding("qsgd(0)"));
        CHECK_THROWS(parse_encoding("zstd"));
    }
}

TEST_CASE("run_experiment writes the full run directory") {
    test::TempDir tmp;
    const RunConfig config = parse_run_config_text(small_config_text(tmp.path() / "out"));
    const RunArtifacts artifacts = run_experiment(config);

    CHECK(std::filesystem::exists(artifacts.config_snapshot));
    CHECK(std::filesystem::exists(artifacts.trace_csv));
    CHECK(std::filesystem::exists(artifacts.cost_csv));
    CHECK(std::filesystem::exists(artifacts.metrics_csv));
    CHECK(std::filesystem::exists(artifacts.summary_path));

    const auto metrics_rows = read_csv(artifacts.metrics_csv);
    REQUIRE(metrics_rows.size() == 1 + 2 * 5);  // header + peers x five stages

    const auto rows = read_csv(artifacts.trace_csv);
    REQUIRE(rows.size() == 1 + 2 * 4);  // header + P * epochs
    CHECK(rows[0].size() == 14);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][0] == artifacts.run_id);
        CHECK(rows[i].back() == "epoch-limit");
    }

    const auto cost_rows = read_csv(artifacts.cost_csv);
    REQUIRE(cost_rows.size() == 1 + 2);  // header + one row per rank
    CHECK(cost_rows[1][2] == "instance");
}

TEST_CASE("identical config and seed reproduce every deterministic column") {
    test::TempDir tmp;
    const RunConfig config_a = parse_run_config_text(small_config_text(tmp.path() / "a"));
    const RunConfig config_b = parse_run_config_text(small_config_text(tmp.path() / "b"));
    const RunArtifacts a = run_experiment(config_a);
    const RunArtifacts b = run_experiment(config_b);

    CHECK(a.run_id == b.run_id);  // out_dir does not key the experiment
    CHECK(a.final_model_checksum == b.final_model_checksum);

    const auto rows_a = read_csv(a.trace_csv);
    const auto rows_b = read_csv(b.trace_csv);
    REQUIRE(rows_a.size() == rows_b.size());
    // columns 3..7 are wall-clock stage timings; everything else must match bit for bit
    const std::vector<std::size_t> deterministic_cols{0, 1, 2, 8, 9, 10, 11, 12, 13};
    for (std::size_t r = 1; r < rows_a.size(); ++r) {
        for (std::size_t c : deterministic_cols) {
            CHECK(rows_a[r][c] == rows_b[r][c]);
        }
    }
}

TEST_CASE("mode sweep emits the comparison file and per-run loss curves") {
    test::TempDir tmp;
    RunConfig base = parse_run_config_text(small_config_text(tmp.path() / "sweep"));
    const SweepArtifacts sweep = sweep_experiment(base, "mode", {"sync", "async"});

    CHECK(std::filesystem::exists(sweep.comparison_csv));
    const auto rows = read_csv(sweep.comparison_csv);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"value", "compute_time", "comm_time", "cost", "accuracy"});
    CHECK(rows[1][0] == "sync");
    CHECK(rows[2][0] == "async");

    REQUIRE(sweep.runs.size() == 2);
    for (const RunArtifacts& run : sweep.runs) {
        CHECK(std::filesystem::exists(run.trace_csv));  // per-epoch loss curves
        const auto trace = read_csv(run.trace_csv);
        CHECK(trace.size() > 1);
    }
}

TEST_CASE("sweep rejects bad axes and values") {
    test::TempDir tmp;
    RunConfig base = parse_run_config_text(small_config_text(tmp.path() / "sweep"));
    CHECK_THROWS_AS(sweep_experiment(base, "learning-rate", {"0.1"}), ValidationError);
    CHECK_THROWS_AS(sweep_experiment(base, "peers", {}), ValidationError);
    CHECK_THROWS_AS(sweep_experiment(base, "peers", {"not-a-number"}), ValidationError);
}

TEST_CASE("compute-gradients is the dominant stage in a simulated run") {
    test::TempDir tmp;
    RunConfig config = parse_run_config_text(small_config_text(
        tmp.path() / "out", "executor.speed_factor = 0.005\nepochs = 3\n"));
    const RunArtifacts artifacts = run_experiment(config);
    for (const PeerResult& peer : artifacts.peers) {
        double compute_mean = 0.0;
        double other_max = 0.0;
        for (const auto& stage : peer.stage_summaries) {
            if (stage.stage == "compute-gradients") {
                compute_mean = stage.mean_time_s;
            } else {
                other_max = std::max(other_max, stage.mean_time_s);
            }
        }
        CHECK(compute_mean > other_max);
    }
}

TEST_CASE("a training split smaller than peers*batch_size fails the run") {
    test::TempDir tmp;
    RunConfig config = parse_run_config_text(small_config_text(tmp.path() / "out"));
    // 64 samples pass static validation (peers*batch_size = 64) but the 90/10
    // split leaves only 58 training rows.
    config.samples = 64;
    CHECK_THROWS_AS(run_experiment(config), ValidationError);
}
