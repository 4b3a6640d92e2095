#include "doctest.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include "stabpade/pipeline.hpp"

using namespace stabpade;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// stdout only; stderr is dropped
Run cli(const std::string& args) {
  const std::string cmd = std::string(STABPADE_CLI) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  Run r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string fixture(const char* name) { return std::string(STABPADE_FIXTURES) + "/" + name; }

std::string temp(const char* name) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p.string();
}

}  // namespace

TEST_CASE("resonance output is byte-identical across runs and thread counts") {
  const std::string args = "resonance --model benchmark --basis ho:60 --alpha 0.6:1.6:101";
  const Run a = cli(args);
  const Run b = cli(args);
  const Run c = cli(args + " --threads 1");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  CHECK(a.out.rfind("stationary stationary-", 0) == 0);
  CHECK(a.out.find("E_r        1.42097") != std::string::npos);

  // the same analysis built up step by step in a session file
  const std::string s = temp("stabpade_cli_session.json");
  REQUIRE(cli("--session " + s + " stabilize --alpha 0.6:1.6:101 -o " + temp("stabpade_cli_stab.csv")).code == 0);
  REQUIRE(cli("--session " + s + " windows").code == 0);
  const Run resumed = cli("--session " + s + " resonance");
  CHECK(resumed.code == 0);
  CHECK(resumed.out == a.out);
  CHECK(load_session(s).stationary_points.size() >= 1);
}

TEST_CASE("fit of the constant fixture: C = c and zero coefficients") {
  const Run r = cli("fit --points 3 --window " + fixture("constant.csv"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("  order        3\n") != std::string::npos);
  CHECK(r.out.find("  C(1.5) 2.5\n") != std::string::npos);
  CHECK(r.out.find("  coefficients 0 0\n") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(cli("resonance --alpha 1:0:3").code == 2);
  CHECK(cli("resonance --no-such-flag").code == 2);
  CHECK(cli("--set fit.order=x resonance").code == 2);
  CHECK(cli("fit --window 0 --import /no/such/file.csv").code == 2);
  // the harmonic model has no flat run to fit
  CHECK(cli("resonance --model harmonic --basis ho:20 --alpha 0.6:1.6:21").code == 3);

  const std::string guard = "fit --indices 40,44,48,52,56,60 --window 0 --import " + fixture("hyperbolic_crossing.csv");
  CHECK(cli(guard).code == 2);
  const Run forced = cli(guard + " --force");
  CHECK(forced.code == 0);
  CHECK(forced.out.find("forced over 1 avoided crossing") != std::string::npos);
}

TEST_CASE("show-config prints settings the config parser accepts") {
  const std::string file = temp("stabpade_cli.conf");
  write_file(file, "fit.order = 11\n");
  const Run r = cli("--config " + file + " --set stationary.width=half_gamma --show-config");
  REQUIRE(r.code == 0);
  const Config c = parse_config(r.out);
  CHECK(c.fit_order == 11);
  CHECK(c.stationary.width == WidthConvention::half_gamma);
}

TEST_CASE("data exports") {
  const Run t = cli("trajectory --fixed-alpha 1.1 --grid 0:0.3:4");
  REQUIRE(t.code == 0);
  CHECK(t.out.rfind("theta,alpha,re_e,im_e,pade_error\n", 0) == 0);
  const Run l = cli("landscape --alpha-grid 1:1.2:3 --theta-grid 0:0.2:3");
  REQUIRE(l.code == 0);
  CHECK(std::count(l.out.begin(), l.out.end(), '\n') == 10);
  const Run s = cli("stabilize --import " + fixture("he_2s2_annotated.csv"));
  REQUIRE(s.code == 0);
  CHECK(s.out.find("# system:") != std::string::npos);
}
