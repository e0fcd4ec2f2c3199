#include <doctest.h>

#include <cstdio>
#include <sys/wait.h>

#include "softsensor/model_file.hpp"
#include "support.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI in `dir`; stderr is discarded.
Result run(const testing::TempDir& dir, const std::string& args) {
  const std::string cmd =
      "cd '" + dir.path().string() + "' && '" SOFTSENSOR_CLI "' " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

void write_run_file(const testing::TempDir& dir) {
  testing::write_text(dir / "data.csv", testing::synthetic_csv(300, 3, 40));
  testing::write_text(dir / "run.ini",
                      "[data]\npath = data.csv\n"
                      "[run]\ntarget = TRP\n"
                      "[forest]\ntune = false\nn_trees = 5,15\nmax_depth = 10\n");
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  testing::TempDir dir("cli");
  write_run_file(dir);
  CHECK(run(dir, "").code == 1);
  CHECK(run(dir, "frobnicate").code == 1);
  CHECK(run(dir, "--help").code == 0);
  CHECK(run(dir, "--preset thames summary").code == 1);
  CHECK(run(dir, "--preset enborne -c run.ini --predictors EC,Sparkle train -o m.json").code == 1);
  CHECK(run(dir, "--preset enborne -c run.ini --set run.colour=blue summary").code == 1);
  CHECK(run(dir, "--preset enborne -c missing.ini summary").code == 1);
}

TEST_CASE("data errors exit 2") {
  testing::TempDir dir("cli");
  write_run_file(dir);
  CHECK(run(dir, "--preset enborne -c run.ini --data nothere.csv summary").code == 2);
  testing::write_text(dir / "hdr.csv", "Timestamp,Flow,Temp,pH,DOsat,Turb,EC,Chl,TRP,NO3N\n");
  CHECK(run(dir, "--preset enborne -c run.ini --data hdr.csv summary").code == 2);
  CHECK(run(dir, "--preset enborne -c run.ini evaluate -m nothere.json").code == 2);
}

TEST_CASE("numerical failures exit 3") {
  testing::TempDir dir("cli");
  write_run_file(dir);
  std::string text = "Timestamp,EC,TRP\n";
  for (int i = 0; i < 30; ++i) {
    text += "2010-01-01T" + std::string(i < 10 ? "0" : "") + std::to_string(i % 24) + ":00:00,";
    text += "5," + std::to_string(0.1 * (i % 7)) + "\n";
  }
  testing::write_text(dir / "flat.csv", text);
  testing::write_text(dir / "flat.ini", "[data]\npath = flat.csv\n[columns]\nTimestamp = Timestamp\nEC = EC\nTRP = TRP\n"
                                        "[run]\ntarget = TRP\nmodel = linear\n[transform]\nmode = none\n");
  CHECK(run(dir, "-c flat.ini train -o flat.json").code == 3);
}

TEST_CASE("end-to-end run") {
  testing::TempDir dir("cli");
  write_run_file(dir);
  const std::string base = "--preset enborne -c run.ini ";

  const auto summary = run(dir, base + "summary -o summary.csv");
  CHECK(summary.code == 0);
  CHECK(summary.out.find("records: 300 raw") != std::string::npos);
  CHECK(testing::read_text(dir / "summary.csv").rfind("variable,unit,n,", 0) == 0);

  CHECK(run(dir, base + "correlate").out.rfind("target,rank,predictor,r\n", 0) == 0);
  CHECK(run(dir, base + "--model linear --set run.max_k=2 select").out.find("\n2,") != std::string::npos);
  CHECK(run(dir, base + "split").out.rfind("row_index,role\n0,", 0) == 0);

  REQUIRE(run(dir, base + "--predictors EC,Temp train -o m.json").code == 0);
  REQUIRE(run(dir, base + "--predictors EC,Temp --threads 3 train -o m3.json").code == 0);
  CHECK(testing::read_text(dir / "m.json") == testing::read_text(dir / "m3.json"));

  const auto eval = run(dir, base + "evaluate -m m.json -o report.csv");
  CHECK(eval.code == 0);
  CHECK(eval.out.find("forest[Temp+EC]->TRP") != std::string::npos);
  CHECK(testing::read_text(dir / "report.csv").rfind("model,n,rmse", 0) == 0);

  CHECK(run(dir, base + "export-plot -m m.json --rows 0").out == "index,observed,predicted\n");
  CHECK(run(dir, base + "export-plot -m m.json --rows 5").out.size() > 30);

  testing::write_text(dir / "new.csv",
                      "Timestamp,EC,Temp\n2012-01-01T00:00:00,500,10\n2012-01-01T00:15:00,NA,10\n");
  const auto pred = run(dir, base + "predict -m m.json -i new.csv");
  CHECK(pred.code == 0);
  CHECK(pred.out.rfind("timestamp,value\n2012-01-01T00:00:00,", 0) == 0);
  CHECK(pred.out.find("2012-01-01T00:15:00,NaN\n") != std::string::npos);

  const auto tree = run(dir, base + "dump-tree -m m.json --tree 1 --depth 1");
  CHECK(tree.code == 0);
  CHECK(tree.out.find("samples = ") != std::string::npos);

  const auto backup = run(dir, base + "flow-backup -o backup.csv");
  CHECK(backup.code == 0);
  CHECK(backup.out.find("forest[Flow]->TRP") != std::string::npos);

  // Reruns reproduce every artifact byte for byte.
  REQUIRE(run(dir, base + "--predictors EC,Temp train -o again.json").code == 0);
  CHECK(testing::read_text(dir / "m.json") == testing::read_text(dir / "again.json"));
  CHECK(run(dir, base + "evaluate -m m.json -o report2.csv").code == 0);
  CHECK(testing::read_text(dir / "report.csv") == testing::read_text(dir / "report2.csv"));
}
