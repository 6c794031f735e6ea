#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "airmon/storage.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output; // stdout + stderr
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd = std::string(AIRMON_CLI_PATH) + " " + args + " 2>&1";
  CmdResult result;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) result.output += buf;
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("airmon-cli-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("cli: aqi command is a thin shell over the engine") {
  auto r = run_cli("aqi pm2.5=55.5");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("151") != std::string::npos);
  CHECK(r.output.find("Unhealthy") != std::string::npos);

  r = run_cli("aqi pm2.5=0 pm10=0 co=0");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("overall 0 (Good)") != std::string::npos);

  r = run_cli("aqi pm2.5=100 co=5.68 --json");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("\"overall\":174") != std::string::npos);
  CHECK(r.output.find("\"dominant\":\"PM2.5\"") != std::string::npos);
  CHECK(r.output.find("\"PM2.5\":174") != std::string::npos);
  CHECK(r.output.find("\"CO\":63") != std::string::npos);
}

TEST_CASE("cli: aqi failure modes") {
  auto r = run_cli("aqi pm2.5=600");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("PM2.5") != std::string::npos); // names the pollutant

  r = run_cli("aqi pm2.5=600 --clamp");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("500") != std::string::npos);

  CHECK(run_cli("aqi plutonium=3").exit_code == 1);
  CHECK(run_cli("aqi").exit_code == 1);
}

TEST_CASE("cli: run with a missing config exits 1 naming the path") {
  const auto r = run_cli("run --config /no/such/config.json");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("/no/such/config.json") != std::string::npos);
}

TEST_CASE("cli: simulate, decode, run, export round trip") {
  TempDir tmp;
  const auto scn = tmp.path / "scn.json";
  {
    std::ofstream out(scn);
    out << R"({"seed": 8, "steps": [
          {"cycles": 3, "pm2_5": 180, "pm10": 108, "temperature": 29, "humidity": 62, "co_ppm": 5.27}
        ]})";
  }

  SECTION("scenario pretty-print and validation") {
    const auto r = run_cli("simulate --scenario " + scn.string() + " --print");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("3 cycles") != std::string::npos);
  }

  SECTION("capture, decode, replay, export") {
    const auto dump = tmp.path / "cap.dump";
    auto r = run_cli("simulate --scenario " + scn.string() + " --out " + dump.string());
    REQUIRE(r.exit_code == 0);

    r = run_cli("decode --dump " + dump.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("pm2.5=180") != std::string::npos);
    CHECK(r.output.find("humidity=62.0%") != std::string::npos);
    CHECK(r.output.find("3 pms frames") != std::string::npos);

    const auto cfg = tmp.path / "gw.json";
    {
      std::ofstream out(cfg);
      out << R"({
        "sampling": {"pace": false},
        "sources": {"scenario": "scn.json"},
        "sinks": {"csv": {"enabled": true, "dir": ")" << (tmp.path / "logs").string() << R"(",
                          "prefix": "t"}}
      })";
    }
    r = run_cli("run --config " + cfg.string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("stopped after 3 cycles") != std::string::npos);

    fs::path csv;
    for (const auto& e : fs::directory_iterator(tmp.path / "logs")) csv = e.path();
    REQUIRE(!csv.empty());
    const auto records = airmon::read_csv_file(csv);
    REQUIRE(records.size() == 3);
    CHECK(records[0].pm2_5 == 180);

    r = run_cli("export --csv " + csv.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"pm2_5\":180") != std::string::npos);
  }

  SECTION("decode flags corruption, tolerate downgrades it") {
    std::ofstream bad(tmp.path / "bad.json");
    bad << R"({"seed": 8, "steps": [{"cycles": 2, "pm2_5": 10, "pm10": 10,
              "temperature": 20, "humidity": 50, "co_ppm": 3.0}],
              "faults": [{"at_cycle": 1, "kind": "corrupt-checksum", "channel": "pms5003"}]})";
    bad.close();
    const auto dump = tmp.path / "bad.dump";
    auto r = run_cli("simulate --scenario " + (tmp.path / "bad.json").string() + " --out " +
                     dump.string());
    REQUIRE(r.exit_code == 0);

    r = run_cli("decode --dump " + dump.string());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("BADCHECKSUM") != std::string::npos);

    r = run_cli("decode --dump " + dump.string() + " --tolerate");
    CHECK(r.exit_code == 0);
  }
}

TEST_CASE("cli: help lists every subcommand") {
  const auto r = run_cli("--help");
  CHECK(r.exit_code == 0);
  for (const char* sub : {"run", "simulate", "replay", "decode", "aqi", "watch", "export"})
    CHECK(r.output.find(sub) != std::string::npos);
}
