#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "sysfi/model_io.hpp"
#include "sysfi/report.hpp"

using namespace sysfi;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = 0;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SYSFI_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "sysfi_cli_unit";
    fs::remove_all(d);
    fs::create_directories(d);
    REQUIRE(run("gen-fixture --kind fc3 --seed 1 --out " + d.string()).status == 0);
    return d;
  }();
  return dir;
}

std::string model_args() {
  return "--model " + (workdir() / "model.json").string() + " --dataset " + (workdir() / "dataset.json").string();
}

}  // namespace

TEST_CASE("enumerate lists every flip-flop") {
  const Run r = run("enumerate --sa 2x2");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["total_bits"] == 344);
  CHECK(j["ffs"].size() == 344);
  CHECK(run("enumerate --sa 2x2").out == r.out);
}

TEST_CASE("usage errors exit nonzero") {
  CHECK(run("").status != 0);
  CHECK(run("enumerate --sa 2x2 --bogus").status != 0);
  CHECK(run("enumerate --sa 0x2").status != 0);
  CHECK(run("golden --model /nonexistent --dataset /nonexistent").status != 0);
  CHECK(run("campaign " + model_args() + " --iters 1 --out " + (workdir() / "x").string() + " --seed zz").status != 0);
}

TEST_CASE("golden is repeatable and matches the labels") {
  const Run a = run("golden " + model_args() + " --sa 2x2 --image 3");
  REQUIRE(a.status == 0);
  CHECK(run("golden " + model_args() + " --sa 2x2 --image 3").out == a.out);
  const auto j = nlohmann::json::parse(a.out);
  REQUIRE(j["images"].size() == 1);
  const Dataset d = load_dataset(workdir() / "dataset.json");
  CHECK(j["images"][0]["argmax"] == d.images[3].label);
  CHECK(j["images"][0]["logits"].size() == 10);
}

TEST_CASE("trace file has one line per cycle") {
  const fs::path trace = workdir() / "trace.txt";
  const Run r = run("golden " + model_args() + " --sa 2x2 --image 0 --trace " + trace.string());
  REQUIRE(r.status == 0);
  const auto cycles = nlohmann::json::parse(r.out)["model_cycles"].get<std::uint64_t>();
  const std::string text = read_text_file(trace);
  CHECK(static_cast<std::uint64_t>(std::count(text.begin(), text.end(), '\n')) == cycles);
  CHECK(text.rfind("0 w-reg:0=", 0) == 0);
}

TEST_CASE("inject reports an outcome") {
  const Run r = run("inject " + model_args() + " --sa 2x2 --image 0 --cycle 100 --group accum-reg --instance 0 --bit 31");
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.contains("outcome"));
  CHECK(run("inject " + model_args() + " --sa 2x2 --image 0 --cycle 100 --group accum-reg --instance 2 --bit 0").status !=
        0);
}

TEST_CASE("campaign and report") {
  const fs::path out = workdir() / "camp";
  REQUIRE(run("campaign " + model_args() + " --sa 2x2 --iters 3 --seed 0x2a --stratified --images 2 --jobs 2 --out " +
              out.string())
              .status == 0);
  const std::string log = read_text_file(out / "records.jsonl");
  CHECK(std::count(log.begin(), log.end(), '\n') == 2 + 6);
  CHECK(read_text_file(out / "stats.csv").rfind(std::string(kStatsCsvHeader), 0) == 0);

  const fs::path svg = workdir() / "chart.svg";
  REQUIRE(run("report --stats " + (out / "stats.json").string() + " --stats " + (out / "stats.json").string() +
              " --svg " + svg.string() + " --csv " + (workdir() / "s.csv").string())
              .status == 0);
  CHECK(read_text_file(svg).rfind("<svg", 0) == 0);
  CHECK(read_text_file(workdir() / "s.csv") == read_text_file(out / "stats.csv"));
}

TEST_CASE("campaign with zero iterations writes empty stats") {
  const fs::path out = workdir() / "empty";
  REQUIRE(run("campaign " + model_args() + " --sa 2x2 --iters 0 --images 1 --out " + out.string()).status == 0);
  CHECK(read_text_file(out / "stats.csv") == std::string(kStatsCsvHeader) + "\n");
  CHECK(stats_from_json(read_text_file(out / "stats.json")).total.n == 0);
  const std::string log = read_text_file(out / "records.jsonl");
  CHECK(std::count(log.begin(), log.end(), '\n') == 1);
}
