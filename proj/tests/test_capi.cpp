#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "vplab/vplab.h"

namespace fs = std::filesystem;

TEST_CASE("status names and version") {
    CHECK(std::string(vplab_status_name(VPLAB_OK)) == "ok");
    CHECK(std::string(vplab_status_name(VPLAB_ERR_FORMAT)) == "format error");
    CHECK(std::string(vplab_version()).size() > 0);
}

TEST_CASE("configuration handles") {
    vplab_config* cfg = nullptr;
    REQUIRE(vplab_config_parse("[kernel]\ndelta = 0.2\n", &cfg) == VPLAB_OK);
    std::uint64_t h1 = 0, h2 = 0;
    CHECK(vplab_config_hash(cfg, &h1) == VPLAB_OK);
    CHECK(vplab_config_set(cfg, "run.seed", "5") == VPLAB_OK);
    CHECK(vplab_config_hash(cfg, &h2) == VPLAB_OK);
    CHECK(h1 != h2);
    CHECK(vplab_config_set(cfg, "kernel.delta", "0.5") == VPLAB_OK);
    CHECK(vplab_config_validate(cfg) == VPLAB_ERR_CONFIG);
    CHECK(std::string(vplab_last_error()).find("kernel.delta") != std::string::npos);
    vplab_config_free(cfg);

    vplab_config* broken = nullptr;
    CHECK(vplab_config_parse("[run\n", &broken) == VPLAB_ERR_CONFIG);
    CHECK(broken == nullptr);
    CHECK(vplab_config_parse(nullptr, &broken) == VPLAB_ERR_INVALID_ARGUMENT);
    CHECK(vplab_config_load("/nonexistent/cfg.ini", &broken) != VPLAB_OK);
}

TEST_CASE("states and numerics") {
    const double q[] = {0, 0, 0, 0.5, 0, 0};
    const double p[] = {0, 0, 0, 0, 0, -0.25};
    vplab_state *a = nullptr, *b = nullptr;
    REQUIRE(vplab_state_new(2, q, p, 0.5, &a) == VPLAB_OK);
    REQUIRE(vplab_state_new(2, q, q, 0.5, &b) == VPLAB_OK);
    CHECK(vplab_state_size(a) == 2);
    CHECK(vplab_state_time(a) == 0.5);

    double w = -1;
    CHECK(vplab_wasserstein(a, a, 2.0, 1, 0, &w) == VPLAB_OK);
    CHECK(w == 0.0);
    CHECK(vplab_wasserstein(a, b, 0.5, 1, 0, &w) == VPLAB_ERR_DOMAIN);
    CHECK(vplab_delta_metric(a, b, &w) == VPLAB_ERR_DOMAIN);  // n = 2 is below the metric's minimum weight

    const double x[] = {2, 0, 0};
    double k[3];
    CHECK(vplab_kernel_eval(1, 2.0, 0.0, 1, x, k) == VPLAB_OK);
    CHECK(k[0] == doctest::Approx(0.25));
    CHECK(vplab_kernel_eval(3, 2.0, 0.0, 1, x, k) == VPLAB_ERR_DOMAIN);

    const fs::path dir = fs::temp_directory_path() / ("vplab-capi-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string path = (dir / "a.vpsnap").string();
    CHECK(vplab_state_write(a, path.c_str(), 1, 0.3, 1.0, 2.0) == VPLAB_OK);
    vplab_state* c = nullptr;
    REQUIRE(vplab_state_read(path.c_str(), &c) == VPLAB_OK);
    std::vector<double> cq(6), cp(6);
    CHECK(vplab_state_copy(c, cq.data(), cp.data()) == VPLAB_OK);
    CHECK(cq == std::vector<double>(q, q + 6));
    CHECK(cp == std::vector<double>(p, p + 6));
    CHECK(vplab_state_read((dir / "none").string().c_str(), &c) != VPLAB_OK);
    vplab_state_free(c);
    vplab_state_free(a);
    vplab_state_free(b);
    fs::remove_all(dir);
}

TEST_CASE("running a subcommand") {
    const fs::path dir = fs::temp_directory_path() / ("vplab-capi-run-" + std::to_string(::getpid()));
    vplab_config* cfg = nullptr;
    REQUIRE(vplab_config_new(&cfg) == VPLAB_OK);
    CHECK(vplab_config_set(cfg, "run.n", "32") == VPLAB_OK);
    CHECK(vplab_config_set(cfg, "run.T", "0.1") == VPLAB_OK);
    CHECK(vplab_config_set(cfg, "run.dt", "0.01") == VPLAB_OK);
    CHECK(vplab_config_set(cfg, "run.snapshots", "5") == VPLAB_OK);
    CHECK(vplab_config_set(cfg, "output.dir", dir.string().c_str()) == VPLAB_OK);
    vplab_run_result* res = nullptr;
    REQUIRE(vplab_run(cfg, "compare", &res) == VPLAB_OK);
    CHECK(vplab_run_summary_count(res) > 0);
    CHECK(fs::exists(fs::path(vplab_run_directory(res)) / "manifest.json"));
    bool has_trials = false;
    for (size_t i = 0; i < vplab_run_file_count(res); ++i) has_trials |= std::string(vplab_run_file(res, i)) == "trials.csv";
    CHECK(has_trials);
    CHECK(vplab_run_file(res, 999) == nullptr);
    vplab_run_free(res);

    CHECK(vplab_run(cfg, "nonsense", &res) == VPLAB_ERR_CONFIG);
    CHECK(res == nullptr);
    vplab_config_free(cfg);
    fs::remove_all(dir);
}
