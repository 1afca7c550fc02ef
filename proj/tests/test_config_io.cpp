#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "pedflow/config.hpp"
#include "pedflow/io.hpp"

using namespace pedflow;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

bool throws_mentioning(const std::string& text, const std::string& needle) {
    try {
        RunConfig::from_json_text(text);
    } catch (const ConfigError& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
}

} // namespace

TEST_SUITE("config_io") {

TEST_CASE("unknown keys are rejected with their full path") {
    CHECK(throws_mentioning(R"({"bank_size": 64})", "config.bank_size"));
    CHECK(throws_mentioning(R"({"measures": {"banksize": 64}})", "config.measures.banksize"));
    CHECK(throws_mentioning(R"({"params": {"Kn": 1.0}})", "config.params.Kn"));
    CHECK(throws_mentioning(R"({"scenario": {"h": 0.25}})", "config.scenario.h"));
    CHECK(throws_mentioning("{ not json", "not valid JSON"));
}

TEST_CASE("theta lives under exponents and duplicates must agree") {
    CHECK(throws_mentioning(R"({"params": {"theta": 0.3}})", "params.theta"));
    const RunConfig c = RunConfig::from_json_text(
        R"({"exponents": {"theta": 0.15}, "params": {"theta": 0.15}})");
    CHECK(c.params.theta == 0.15);
    CHECK(c.exponents.theta == 0.15);
    // theta must stay below (1-alpha)/4 - gamma for the default exponents.
    const RunConfig d = RunConfig::from_json_text(R"({"exponents": {"theta": 0.17}})");
    CHECK(d.params.theta == 0.17);
}

TEST_CASE("canonical json round-trips and the hash is stable") {
    const RunConfig a = RunConfig::defaults();
    const std::string ja = a.canonical_json();
    const RunConfig b = RunConfig::from_json_text(ja);
    CHECK(b.canonical_json() == ja);
    CHECK(b.config_hash() == a.config_hash());

    RunConfig c = RunConfig::defaults();
    c.seed = a.seed + 1;
    CHECK(c.config_hash() != a.config_hash());

    // A partial file inherits defaults for everything unspecified.
    const RunConfig d = RunConfig::from_json_text(R"({"seed": 9, "dt": 0.02})");
    CHECK(d.seed == 9);
    CHECK(d.dt == 0.02);
    CHECK(d.n_list == RunConfig::defaults().n_list);
}

TEST_CASE("config validation rejects inconsistent protocols") {
    CHECK(throws_mentioning(R"({"m_factor": 3})", "m_factor"));
    CHECK(throws_mentioning(R"({"n_list": [64, 64]})", "n_list"));
    CHECK(throws_mentioning(R"({"n_list": [1, 4]})", "n_list"));
    CHECK(throws_mentioning(R"({"backend": "sse2"})", "backend"));
    CHECK(throws_mentioning(R"({"dt": 0.03, "t_end": 0.1})", "dt"));
    CHECK(throws_mentioning(R"({"calibrate": {"samples": 10}})", "samples"));
    CHECK(throws_mentioning(R"({"exponents": {"alpha": 0.3}})", "alpha"));
    CHECK(throws_mentioning(R"({"scenario": {"grid_h": 0.3}})", "grid_h"));
}

TEST_CASE("f0 components parse all four marginals") {
    const char* text = R"({"f0": {"components": [{
        "weight": 2.0,
        "x":  {"kind": "uniform", "lo": 0.0, "hi": 1.0},
        "y":  {"kind": "trunc_gauss", "lo": 0.0, "hi": 2.0, "mean": 1.0, "sigma": 0.5},
        "vx": {"kind": "uniform", "lo": -0.1, "hi": 0.1},
        "vy": {"kind": "uniform", "lo": 0.0, "hi": 0.0}
    }]}})";
    const RunConfig c = RunConfig::from_json_text(text);
    REQUIRE(c.f0.components.size() == 1);
    CHECK(c.f0.components[0].weight == 2.0);
    CHECK(c.f0.components[0].dims[1].kind == F0Dim::Kind::trunc_gauss);
    CHECK(c.f0.components[0].dims[1].sigma == 0.5);
    CHECK(c.f0.components[0].dims[3].lo == 0.0);  // point mass allowed

    CHECK(throws_mentioning(R"({"f0": {"components": []}})", "components"));
    CHECK(throws_mentioning(
        R"({"f0": {"components": [{"weight": 1, "x": {"lo": 0, "hi": 1}}]}})", "missing"));
}

TEST_CASE("csv rows are rfc4180 with exact doubles") {
    const std::string path = tmp_path("pedflow_csv_test.csv");
    {
        CsvWriter csv(path);
        csv.row({"a", "b,comma", "c\"quote", "plain"});
        csv.row({CsvWriter::cell(1.0 / 3.0), CsvWriter::cell(std::uint64_t(42)),
                 CsvWriter::cell(true), CsvWriter::cell(-0.0)});
    }
    const std::string bytes = slurp(path);
    CHECK(bytes.find("a,\"b,comma\",\"c\"\"quote\",plain\r\n") == 0);
    CHECK(bytes.find("\n0.33333333333333331,42,1,-0\r\n") != std::string::npos);

    // %.17g survives a parse round-trip bit-exactly.
    const std::string printed = format_double(1.0 / 3.0);
    CHECK(std::stod(printed) == 1.0 / 3.0);
    CHECK(format_double(2.0) == "2");
    std::remove(path.c_str());
}

TEST_CASE("snapshot series layout matches its sidecar") {
    const std::string path = tmp_path("pedflow_snap_test.bin");
    std::vector<std::pair<std::uint64_t, Ensemble>> snaps;
    Ensemble e(3);
    for (std::size_t i = 0; i < 3; ++i)
        e.set(i, {double(i), 10.0 + i}, {0.5 * i, -0.5 * i});
    snaps.emplace_back(5, e);
    e.px[0] = 99.0;
    snaps.emplace_back(10, e);
    write_snapshot_series(path, snaps, 0.02);

    CHECK(std::filesystem::file_size(path) == 2 * (1 + 4 * 3) * sizeof(double));
    const auto header = nlohmann::json::parse(slurp(path + ".json"));
    CHECK(header.at("n") == 3);
    CHECK(header.at("dt") == 0.02);
    CHECK(header.at("records") == 2);
    CHECK(header.at("steps") == nlohmann::json({5, 10}));

    // First record: t, then x column; t = step * dt.
    std::ifstream bin(path, std::ios::binary);
    double t0 = -1, x0 = -1;
    bin.read(reinterpret_cast<char*>(&t0), sizeof(double));
    bin.read(reinterpret_cast<char*>(&x0), sizeof(double));
    CHECK(t0 == 5 * 0.02);
    CHECK(x0 == 0.0);
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("ensure_dir builds nested paths idempotently") {
    const std::string dir = tmp_path("pedflow_dir_test/a/b");
    ensure_dir(dir);
    ensure_dir(dir);
    write_text_file(dir + "/probe.txt", "ok\n");
    CHECK(slurp(dir + "/probe.txt") == "ok\n");
    std::filesystem::remove_all(tmp_path("pedflow_dir_test"));
}

} // TEST_SUITE
