// Drives the aeronet executable. Help texts are compared against the files in
// tests/snapshots; set AERONET_UPDATE_SNAPSHOTS=1 to rewrite them.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct ScratchDir {
  fs::path path = fs::temp_directory_path() / ("aeronet_cli_" + std::to_string(::getpid()));
  ScratchDir() { fs::create_directories(path); }
  ~ScratchDir() { fs::remove_all(path); }
};

const fs::path& scratch() {
  static const ScratchDir dir;
  return dir.path;
}

Result run(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt";
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + AERONET_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

// A scenario that runs in about a second.
fs::path small_scenario(const std::string& extra = "") {
  const fs::path p = scratch() / "small.cfg";
  std::ofstream(p) << "[scenario]\nn_uavs = 2\nn_slots = 64\n"
                      "[esn]\nreservoir_size = 60\n"
                      "[ga]\npopulation_size = 6\ngenerations = 5\n"
                      "[rl]\nplacement_trials = 3\nplacement_iterations = 200\nslot_episodes = 5\nslot_iterations = 5\n"
                      "[fixture]\nn_users = 12\n"
                   << extra;
  return p;
}

void check_snapshot(const std::string& name, const std::string& text) {
  const fs::path file = fs::path(AERONET_SNAPSHOT_DIR) / (name + ".txt");
  if (std::getenv("AERONET_UPDATE_SNAPSHOTS") != nullptr) {
    std::ofstream(file, std::ios::binary) << text;
    return;
  }
  REQUIRE_MESSAGE(fs::exists(file), "missing snapshot " << file);
  CHECK(slurp(file) == text);
}

}  // namespace

TEST_CASE("help texts") {
  const Result top = run("--help");
  CHECK(top.code == 0);
  check_snapshot("help", top.out);
  for (const char* sub : {"ingest", "predict", "cluster", "place", "train", "simulate", "sweep", "report"}) {
    CAPTURE(sub);
    const Result r = run(std::string(sub) + " --help");
    CHECK(r.code == 0);
    check_snapshot(std::string("help_") + sub, r.out);
  }
}

TEST_CASE("usage errors exit with 1") {
  const Result missing = run("simulate --scenario nope.cfg --out x");
  CHECK(missing.code == 1);
  CHECK(missing.err.find("nope.cfg") != std::string::npos);
  CHECK(run("").code == 1);
  CHECK(run("fly").code == 1);
}

TEST_CASE("an infeasible power budget exits with 2 and prints the bound") {
  const Result r = run("cluster --scenario \"" + small_scenario("[channel]\nmin_rate_bps = 4000000\n").string() +
                       "\" --out \"" + (scratch() / "clusters.json").string() + "\"");
  CHECK(r.code == 2);
  CHECK(r.err.find("minimum-rate power bound of") != std::string::npos);
}

TEST_CASE("simulate writes the four report files and report summarizes them") {
  const fs::path out = scratch() / "run1";
  const Result r = run("simulate --scenario \"" + small_scenario().string() + "\" --out \"" + out.string() + "\"");
  REQUIRE(r.code == 0);
  for (const char* f : {"report.json", "sum_rate.csv", "trajectories.geojson", "learning_curve.csv"}) {
    CHECK(fs::exists(out / f));
  }
  const Result rep = run("report --input \"" + out.string() + "\"");
  CHECK(rep.code == 0);
  CHECK(rep.out.find("mean sum rate") != std::string::npos);
  CHECK(run("report --input \"" + scratch().string() + "\"").code == 1);
}

TEST_CASE("ingest, predict and place chain through files") {
  const fs::path scen = small_scenario();
  const fs::path traces = scratch() / "traces.json";
  const fs::path csv = scratch() / "checkins.csv";
  REQUIRE(run("ingest --scenario \"" + scen.string() + "\" --out \"" + traces.string() + "\" --fixture-csv \"" +
              csv.string() + "\"").code == 0);
  const fs::path again = scratch() / "traces_from_csv.json";
  CHECK(run("ingest --scenario \"" + scen.string() + "\" --input \"" + csv.string() + "\" --out \"" + again.string() +
            "\"").code == 0);
  const fs::path pred = scratch() / "predicted.json";
  CHECK(run("predict --scenario \"" + scen.string() + "\" --traces \"" + traces.string() + "\" --out \"" +
            pred.string() + "\"").code == 0);
  CHECK(slurp(pred).find("mean_rmse_m") != std::string::npos);
  const fs::path place = scratch() / "placement.json";
  CHECK(run("place --scenario \"" + scen.string() + "\" --traces \"" + traces.string() + "\" --out \"" +
            place.string() + "\"").code == 0);
  CHECK(fs::exists(place));
  const fs::path tdir = scratch() / "train";
  CHECK(run("train --scenario \"" + scen.string() + "\" --out \"" + tdir.string() + "\"").code == 0);
  CHECK(fs::exists(tdir / "q_tables.json"));
}

TEST_CASE("sweep rejects an unknown axis and lists the accepted ones") {
  const Result bad = run("sweep --scenario \"" + small_scenario().string() + "\" --axis colour --values 1,2");
  CHECK(bad.code != 0);
  CHECK(bad.err.find("reservoir_size") != std::string::npos);
  const Result ok =
      run("sweep --scenario \"" + small_scenario().string() + "\" --axis controller --values static,gakmeans_follow");
  CHECK(ok.code == 0);
  CHECK(ok.out.rfind("axis,value,controller", 0) == 0);
}
