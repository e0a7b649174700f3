#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dstft/signal_io.hpp"
#include "dstft/transform.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace dstft;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(DSTFT_CLI_PATH) + " " + args + " > cli_stdout.txt 2> cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::vector<double>> parse_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_CASE("spectrogram subcommand writes the full artifact set") {
  const Signal s = testsup::tone(512, 0.25, 1.0, 0.4);
  save_signal(s, "cli_tone.csv", FileFormat::Csv);

  const int code = run_cli(
      "spectrogram --input cli_tone.csv --support 64 --theta 64 --hop 16 --out cli_spec");
  CHECK(code == 0);

  // Magnitude peaks on the tone bin in every frame.
  const auto mag = parse_csv_matrix("cli_spec.mag.csv");
  REQUIRE(mag.size() == 33);
  const size_t frames = mag[0].size();
  for (size_t n = 0; n < frames; ++n) {
    size_t best = 0;
    for (size_t m = 1; m < mag.size(); ++m) {
      if (mag[m][n] > mag[best][n]) best = m;
    }
    CHECK(best == 16);
  }

  const std::string pgm = slurp("cli_spec.pgm");
  const std::string header = "P5\n" + std::to_string(frames) + " 33\n255\n";
  REQUIRE(pgm.rfind(header, 0) == 0);
  CHECK(pgm.size() == header.size() + 33 * frames);

  const auto meta = nlohmann::json::parse(slurp("cli_spec.meta.json"));
  CHECK(meta["support"] == 64);
  CHECK(meta["num_bins"] == 33);
  CHECK(meta["window"] == "hann");
}

TEST_CASE("spectrogram output is byte-identical across reruns") {
  const Signal s = testsup::tone(512, 0.25, 1.0, 0.4);
  save_signal(s, "cli_tone.csv", FileFormat::Csv);
  CHECK(run_cli("spectrogram --input cli_tone.csv --support 64 --hop 16 --out cli_det_a") == 0);
  CHECK(run_cli("spectrogram --input cli_tone.csv --support 64 --hop 16 --out cli_det_b") == 0);
  CHECK(slurp("cli_det_a.stft.csv") == slurp("cli_det_b.stft.csv"));
  CHECK(slurp("cli_det_a.pgm") == slurp("cli_det_b.pgm"));
  CHECK(slurp("cli_det_a.mag.csv") == slurp("cli_det_b.mag.csv"));
}

TEST_CASE("spectrogram at theta = L on an integer grid matches the classical transform") {
  const Signal s = testsup::random_signal(512, 77);
  save_signal(s, "cli_rand.csv", FileFormat::Csv);
  CHECK(run_cli(
            "spectrogram --input cli_rand.csv --support 64 --theta 64 --hop 16 --out cli_cl") ==
        0);

  const TfMatrix want = classical_stft(s, 64, 16, 0);
  const auto got = parse_csv_matrix("cli_cl.stft.csv");
  REQUIRE(static_cast<int>(got.size()) == want.rows);
  REQUIRE(static_cast<int>(got[0].size()) == 2 * want.cols);
  double max_diff = 0.0;
  for (int m = 0; m < want.rows; ++m) {
    for (int n = 0; n < want.cols; ++n) {
      max_diff = std::max(max_diff, std::abs(got[m][2 * n] - want.at(m, n).real()));
      max_diff = std::max(max_diff, std::abs(got[m][2 * n + 1] - want.at(m, n).imag()));
    }
  }
  CHECK(max_diff <= 1e-10);
}

TEST_CASE("exit codes distinguish flag, file, and check failures") {
  CHECK(run_cli("spectrogram --no-such-flag") == 2);
  CHECK(run_cli("nonexistent-subcommand") == 2);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("spectrogram --input cli_missing_file.csv --out cli_x") == 3);
  CHECK(run_cli("optimize --mode bogus --scenario three-component --out cli_x") == 2);
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("gradcheck passes its own audit") {
  CHECK(run_cli("gradcheck --mode const --seed 7") == 0);
  CHECK(run_cli("gradcheck --all --seed 7") == 0);
  const std::string report = slurp("cli_stdout.txt");
  CHECK(report.find("window,length_mode,position_mode,objective") != std::string::npos);
  CHECK(run_cli("gradcheck") == 2);
}

TEST_CASE("optimize subcommand writes trace and parameters") {
  const int code = run_cli(
      "optimize --mode const --objective entropy --scenario three-component --length 768 "
      "--support 64 --theta 32 --hop 32 --t0 32 --max-iters 8 --lr 1 --seed 1 --out cli_opt");
  CHECK(code == 0);

  const std::string trace = slurp("cli_opt.trace.csv");
  CHECK(trace.rfind("iter,loss,grad_norm\n", 0) == 0);
  CHECK(std::count(trace.begin(), trace.end(), '\n') >= 2);

  const auto params = nlohmann::json::parse(slurp("cli_opt.params.json"));
  CHECK(params["length_mode"] == "constant");
  REQUIRE(params["theta"].is_array());
  REQUIRE(params["theta"].size() == 1);
  const double theta = params["theta"][0].get<double>();
  CHECK(theta >= 2.0);
  CHECK(theta <= 64.0);
  CHECK(params["frame_positions"].size() == params["num_frames"].get<size_t>());
}

TEST_CASE("optimize in tf mode emits the window-length map") {
  const int code = run_cli(
      "optimize --mode tf --objective entropy+nltv --lambda 1e-3 --scenario three-component "
      "--length 512 --support 32 --theta 16 --hop 32 --t0 16 --max-iters 5 --lr 1 --seed 1 "
      "--out cli_tf");
  CHECK(code == 0);
  const auto theta_map = parse_csv_matrix("cli_tf.thetamap.csv");
  REQUIRE(theta_map.size() == 17);  // bins for support 32
  const std::string pgm = slurp("cli_tf.thetamap.pgm");
  CHECK(pgm.rfind("P5\n", 0) == 0);
}

TEST_CASE("taskfit track writes sweep and optima") {
  const int code = run_cli(
      "taskfit --task track --dataset-size 2 --seed 7 --sweep 64:128:32 --out cli_task");
  CHECK(code == 0);
  const std::string sweep = slurp("cli_task.sweep.csv");
  CHECK(sweep.rfind("theta,value\n", 0) == 0);
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 4);  // header + 3 grid points
  const auto optima = nlohmann::json::parse(slurp("cli_task.optima.json"));
  CHECK(optima.contains("sweep_argmin"));
  CHECK(optima.contains("learned_theta"));
  CHECK(optima.contains("mse_learned"));
}

TEST_CASE("bench emits a timing table") {
  const int code = run_cli("bench --sizes 6:32,6:128");
  CHECK(code == 0);
  const std::string table = slurp("cli_stdout.txt");
  CHECK(table.rfind("mode,frames,support,forward_seconds,backward_seconds\n", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 5);  // header + 2 modes x 2 sizes
}
