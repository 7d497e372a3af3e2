#include "doctest.h"

#include "json.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

using nlohmann::json;

namespace {

// the CLI binary sits next to this test binary
std::string cli_path() {
  std::array<char, 4096> buf{};
  ssize_t k = ::readlink("/proc/self/exe", buf.data(), buf.size() - 1);
  REQUIRE(k > 0);
  std::string self(buf.data(), static_cast<std::size_t>(k));
  return self.substr(0, self.rfind('/')) + "/entroflow";
}

struct RunOut {
  int code = -1;
  std::string text;
};

RunOut run(const std::string& args, bool merge_stderr = false) {
  std::string cmd = cli_path() + " " + args;
  cmd += merge_stderr ? " 2>&1 1>/dev/null" : " 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  RunOut out;
  std::array<char, 4096> chunk{};
  std::size_t got;
  while ((got = std::fread(chunk.data(), 1, chunk.size(), p)) > 0)
    out.text.append(chunk.data(), got);
  int st = ::pclose(p);
  out.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return out;
}

std::string first_line(const std::string& path) {
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  return line;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("constants command emits the advertised values and is deterministic") {
  RunOut a = run("constants --d 3 --m 0.8");
  REQUIRE(a.code == 0);
  json j = json::parse(a.text);
  CHECK(j.contains("S_d"));
  CHECK(j["S_d"].get<double>() == doctest::Approx(5.4779040895313313).epsilon(1e-12));
  RunOut b = run("constants --d 3 --m 0.8");
  CHECK(a.text == b.text);  // byte-identical reruns
}

TEST_CASE("spectrum command carries eigenvalues, gap and constraint labels") {
  RunOut r = run("spectrum --operator sphere --d 5");
  REQUIRE(r.code == 0);
  json j = json::parse(r.text);
  REQUIRE(j.contains("eigenvalues"));
  auto ev = j["eigenvalues"].get<std::vector<double>>();
  REQUIRE(ev.size() >= 3);
  CHECK(ev[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(ev[1] == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(ev[2] == doctest::Approx(12.0).epsilon(1e-6));
  CHECK(j.contains("gap"));
  CHECK(j.contains("constraints"));
}

TEST_CASE("unknown flags exit 2 and produce no output file") {
  std::string out = "/tmp/entroflow_test_noflag.csv";
  std::remove(out.c_str());
  RunOut r = run("constants --bogus 1 --out " + out);
  CHECK(r.code == 2);
  std::ifstream f(out);
  CHECK_FALSE(f.good());
}

TEST_CASE("errors are one JSON line on stderr with the exit code inside") {
  RunOut r = run("kappa --d 3 --p 2", true);
  CHECK(r.code == 2);
  REQUIRE_FALSE(r.text.empty());
  // single line
  std::size_t nl = r.text.find('\n');
  CHECK(nl == r.text.size() - 1);
  json j = json::parse(r.text);
  CHECK(j["code"].get<int>() == 2);
  CHECK(j.contains("error"));
}

TEST_CASE("missing input files are runtime failures, exit 3") {
  RunOut r = run("check --functional free --profile /tmp/entroflow_no_such_file.csv --d 3 --m 0.8",
                 true);
  CHECK(r.code == 3);
  json j = json::parse(r.text);
  CHECK(j["code"].get<int>() == 3);
}

TEST_CASE("strict config overlay rejects unknown keys") {
  {
    std::ofstream f("/tmp/entroflow_test_cfg_bad.json");
    f << "{\"command\":\"constants\",\"parameters\":{\"d\":3,\"m\":0.8},\"typo_key\":1}\n";
  }
  RunOut bad = run("constants --config /tmp/entroflow_test_cfg_bad.json", true);
  CHECK(bad.code == 2);
  {
    std::ofstream f("/tmp/entroflow_test_cfg_badp.json");
    f << "{\"command\":\"constants\",\"parameters\":{\"d\":3,\"bogus\":0.8}}\n";
  }
  RunOut badp = run("constants --config /tmp/entroflow_test_cfg_badp.json", true);
  CHECK(badp.code == 2);
}

TEST_CASE("config values override flags") {
  {
    std::ofstream f("/tmp/entroflow_test_cfg.json");
    f << "{\"command\":\"constants\",\"parameters\":{\"d\":4,\"m\":0.85}}\n";
  }
  RunOut r = run("constants --d 3 --m 0.8 --config /tmp/entroflow_test_cfg.json");
  REQUIRE(r.code == 0);
  json j = json::parse(r.text);
  CHECK(j["S_d"].get<double>() == doctest::Approx(10.260398641294913).epsilon(1e-12));
}

TEST_CASE("table outputs carry their exact headers") {
  std::string fcsv = "/tmp/entroflow_test_flow.csv";
  RunOut r = run("flow --kind fd --d 3 --m 0.8 --dt 2e-3 --t-end 0.05 --record-every 5 --out " +
                 fcsv);
  REQUIRE(r.code == 0);
  CHECK(first_line(fcsv) == "t,mass,E,F,I_free,I_rel,Q,G,sandwich_eps");

  std::string mcsv = "/tmp/entroflow_test_map.csv";
  RunOut m = run("ckn-map --na 5 --nb 5 --out " + mcsv);
  REQUIRE(m.code == 0);
  CHECK(first_line(mcsv) == "a,b,region,b_fs,margin");
}

TEST_CASE("flow summary exposes the fitted rate fields") {
  RunOut r = run("flow --kind fd --d 3 --m 0.8 --dt 2e-3 --t-end 0.05 --record-every 5 --out "
                 "/tmp/entroflow_test_flow2.csv");
  REQUIRE(r.code == 0);
  json j = json::parse(r.text);
  CHECK(j.contains("entropy_rate"));
  CHECK(j.contains("empirical_T_star"));
  CHECK(j.contains("records"));
}

TEST_CASE("reproduce rejects unknown figure names") {
  RunOut r = run("reproduce fig9 --out-dir /tmp/entroflow_fig9", true);
  CHECK(r.code == 2);
}

}
