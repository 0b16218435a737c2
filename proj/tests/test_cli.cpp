#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "efcyc/efcyc.hpp"

using namespace efcyc;
namespace fs = std::filesystem;

namespace {

const std::string config_dir = EFCYC_CONFIG_DIR;

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run_cli(std::move(args), out, err);
  return {status, out.str(), err.str()};
}

class Scratch {
 public:
  Scratch() : dir_(fs::temp_directory_path() / ("efcyc_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(dir_);
  }
  ~Scratch() { fs::remove_all(dir_); }

  std::string write(const std::string& name, const Json& j) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
  }

 private:
  fs::path dir_;
};

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string error_code(const std::string& err) { return Json::parse(err)["error"]["code"].get<std::string>(); }

}  // namespace

TEST_CASE("norm of the empty chain", "[cli]") {
  Scratch s;
  const std::string path = s.write("empty.json", Json{{"degree", 1}, {"group", "Z^2"}, {"terms", Json::array()}});
  const Run r = run({"norm", path});
  CHECK(r.status == 0);
  CHECK(r.out == "0\n");
}

TEST_CASE("norm of the torus cycle", "[cli]") {
  const Run r = run({"norm", config_dir + "/torus_cycle.json"});
  CHECK(r.status == 0);
  CHECK(r.out == "2\n");
}

TEST_CASE("converge prints one row per k", "[cli]") {
  const Run csv = run({"converge", "--config", config_dir + "/torus.json", "--kmax", "64", "--format", "csv"});
  REQUIRE(csv.status == 0);
  CHECK(count_lines(csv.out) == 65);
  CHECK(csv.out.rfind("k,F_size,ratio,norm,bound\n", 0) == 0);

  const Run json = run({"converge", "--config", config_dir + "/torus.json", "--kmax", "8", "--format", "json"});
  REQUIRE(json.status == 0);
  const Json rows = Json::parse(json.out);
  REQUIRE(rows.size() == 8);
  for (const Json& row : rows) {
    CHECK(parse_rational(row["norm"].get<std::string>()) <= parse_rational(row["bound"].get<std::string>()));
  }
}

TEST_CASE("recipe norm round-trips through norm", "[cli]") {
  Scratch s;
  const Run r = run({"recipe", "--config", config_dir + "/torus.json", "--k", "100", "--m", "0"});
  REQUIRE(r.status == 0);
  const Json j = Json::parse(r.out);
  const Run again = run({"norm", s.write("c100.json", j)});
  REQUIRE(again.status == 0);
  CHECK(again.out == j["norm"].get<std::string>() + "\n");
}

TEST_CASE("average and estimate subcommands", "[cli]") {
  const Run avg = run({"average", "--config", config_dir + "/torus.json", "--k", "3"});
  REQUIRE(avg.status == 0);
  const Chain c = chain_from_json(Json::parse(avg.out));
  CHECK(is_cycle(c));
  CHECK(pair(torus_cocycle(), c) == 1);

  const Run est = run({"estimate", "--config", config_dir + "/torus.json", "--k", "10"});
  REQUIRE(est.status == 0);
  const Json cert = Json::parse(est.out);
  CHECK(cert["holds_sum"].get<bool>());
  CHECK(cert["F_size"].get<int>() == 10);

  const Run tw = run({"estimate", "--config", config_dir + "/twisted_swap.json", "--k", "4"});
  REQUIRE(tw.status == 0);
  CHECK(Json::parse(tw.out)["epsilon"] == "1/1000");
}

TEST_CASE("seminorm subcommand", "[cli]") {
  Scratch s;
  const Json pushed{{"degree", 2},
                    {"group", "Z"},
                    {"terms", {{{"coeff", "1"}, {"tuple", {{0}, {0}, {1}}}}, {{"coeff", "-1"}, {"tuple", {{0}, {1}, {1}}}}}}};
  const Run r = run({"seminorm", "--chain", s.write("pushed.json", pushed), "--radius", "1"});
  REQUIRE(r.status == 0);
  CHECK(Json::parse(r.out)["value"] == "0");
}

TEST_CASE("twisted configs", "[cli][twisted]") {
  const Run r = run({"converge", "--config", config_dir + "/twisted_swap.json", "--kmax", "6"});
  REQUIRE(r.status == 0);
  CHECK(count_lines(r.out) == 7);
  const Run rec = run({"recipe", "--config", config_dir + "/twisted_swap.json", "--k", "4"});
  REQUIRE(rec.status == 0);
  CHECK(Json::parse(rec.out).contains("module"));
}

TEST_CASE("exit codes and error reports", "[cli]") {
  Scratch s;
  const Run help = run({"--help"});
  CHECK(help.status == 0);
  CHECK(help.out.find("converge") != std::string::npos);

  const Run bad_flag = run({"converge", "--kmax", "3"});
  CHECK(bad_flag.status == 2);
  CHECK(error_code(bad_flag.err) == "malformed_input");

  const Run missing = run({"norm", s.write("x.json", Json::object()) + ".absent"});
  CHECK(missing.status == 2);
  CHECK(Json::parse(missing.err).contains("error"));

  const Json wrong_arity{{"degree", 1}, {"group", "Z^2"}, {"terms", {{{"coeff", "1"}, {"tuple", {{0}, {1}}}}}}};
  const Run mismatch = run({"norm", s.write("wrong.json", wrong_arity)});
  CHECK(mismatch.status == 2);
  CHECK(error_code(mismatch.err) == "descriptor_mismatch");

  // N trivial: the torus class cannot be filled, so no b exists for z = 0
  const Json cfg{{"group", "Z^2"}, {"normal", "1x1"}, {"chain", config_dir + "/torus_cycle.json"}, {"folner", "whole"}};
  const Run infeasible = run({"converge", "--config", s.write("trivial.json", cfg), "--kmax", "2"});
  CHECK(infeasible.status == 3);
  CHECK(error_code(infeasible.err) == "infeasible");

  Json bad = Json::parse(std::ifstream(config_dir + "/torus.json"));
  bad["chain"] = config_dir + "/torus_cycle.json";
  bad["b"]["terms"] = Json::array();
  const Run mismatch_b = run({"converge", "--config", s.write("bad_b.json", bad), "--kmax", "2"});
  CHECK(mismatch_b.status == 2);
  CHECK(error_code(mismatch_b.err) == "filling_mismatch");
}
