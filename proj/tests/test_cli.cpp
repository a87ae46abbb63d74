#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = EPSODE_CLI;
const fs::path kData = EPSODE_TEST_DATA;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("epsode_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

int run(const std::string& args, const fs::path& stdout_file = "/dev/null") {
  const std::string cmd = "\"" + kCli + "\" " + args + " > \"" + stdout_file.string() + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& f) {
  std::ifstream in(f, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_table(const fs::path& f) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(f);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(field);
    rows.push_back(row);
  }
  return rows;
}

std::vector<nlohmann::json> read_jsonl(const fs::path& f) {
  std::vector<nlohmann::json> out;
  std::ifstream in(f);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("solve writes the path, kinks and report") {
  TempDir tmp;
  REQUIRE(run("solve " + quoted(kData / "lasso_toy.json") + " --out " + quoted(tmp / "out")) == 0);
  const auto table = read_table(tmp / "out" / "path.csv");
  REQUIRE(table.size() > 2);
  CHECK(table[0] == std::vector<std::string>{"rho", "beta_1", "beta_2", "df", "neg_loglik", "aic", "bic"});
  CHECK(std::stod(table[1][0]) == 0.0);
  CHECK(std::stod(table[1][1]) == doctest::Approx(2.0));
  CHECK(std::stod(table[1][2]) == doctest::Approx(-1.0));
  CHECK(std::abs(std::stod(table.back()[1])) < 1e-9);
  CHECK(std::stod(table.back()[3]) == 0.0);

  const auto kinks = read_jsonl(tmp / "out" / "kinks.jsonl");
  REQUIRE(kinks.size() == 2);
  CHECK(kinks[0]["event"] == "residual_hit");
  CHECK(kinks[0]["row"] == 1);
  CHECK(kinks[0]["from"] == "N");
  CHECK(kinks[0]["to"] == "Z");
  CHECK(kinks[0]["rho"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(kinks[1]["rho"].get<double>() == doctest::Approx(2.0).epsilon(1e-9));

  const std::string report = slurp(tmp / "out" / "report.txt");
  CHECK(report.find("status: terminated") != std::string::npos);
  CHECK(report.find("kinks: 2") != std::string::npos);
}

TEST_CASE("df column is consistent with the kinks") {
  TempDir tmp;
  REQUIRE(run("solve " + quoted(kData / "ls10_lasso.json") + " --out " + quoted(tmp / "out")) == 0);
  const auto table = read_table(tmp / "out" / "path.csv");
  const auto kinks = read_jsonl(tmp / "out" / "kinks.jsonl");
  REQUIRE(!kinks.empty());
  const std::size_t df_col = table[0].size() - 4;
  REQUIRE(table[0][df_col] == "df");
  for (std::size_t i = 1; i < table.size(); ++i) {
    const double rho = std::stod(table[i][0]);
    long expected = 3;
    for (const auto& k : kinks) {
      if (k["rho"].get<double>() <= rho) expected = k["df_after"].get<long>();
    }
    CHECK(std::stol(table[i][df_col]) == expected);
  }
  for (const auto& k : kinks) {
    bool found = false;
    for (std::size_t i = 1; i < table.size(); ++i) found = found || std::stod(table[i][0]) == k["rho"].get<double>();
    CHECK(found);
  }
}

TEST_CASE("reruns are byte identical") {
  TempDir tmp;
  const std::string spec = quoted(kData / "logistic_fused.json");
  REQUIRE(run("solve " + spec + " --out " + quoted(tmp / "a")) == 0);
  REQUIRE(run("solve " + spec + " --out " + quoted(tmp / "b")) == 0);
  for (const char* f : {"path.csv", "kinks.jsonl", "report.txt"}) {
    CHECK(slurp(tmp / "a" / f) == slurp(tmp / "b" / f));
  }
}

TEST_CASE("malformed spec exits with 1 and writes nothing") {
  TempDir tmp;
  CHECK(run("solve " + quoted(kData / "malformed.json") + " --out " + quoted(tmp / "out")) == 1);
  CHECK_FALSE(fs::exists(tmp / "out"));
  CHECK(run("solve") == 1);
  CHECK(run("oracle no_such_oracle 1") == 1);
}

TEST_CASE("leave-one-out cross validation emits one curve per observation") {
  TempDir tmp;
  REQUIRE(run("crossval " + quoted(kData / "ls10_lasso.json") + " --folds 10 --seed 4 --out " +
              quoted(tmp / "cv")) == 0);
  const auto table = read_table(tmp / "cv" / "cv.csv");
  REQUIRE(table.size() > 1);
  CHECK(table[0].size() == 3 + 10);
  CHECK(table[0][10 + 2] == "fold_10");
  for (std::size_t i = 1; i < table.size(); ++i) CHECK(table[i].size() == 13);
  const auto folds = read_table(tmp / "cv" / "folds.csv");
  CHECK(folds.size() == 11);
  REQUIRE(run("crossval " + quoted(kData / "ls10_lasso.json") + " --folds 10 --seed 4 --out " +
              quoted(tmp / "cv2")) == 0);
  CHECK(slurp(tmp / "cv" / "cv.csv") == slurp(tmp / "cv2" / "cv.csv"));
  CHECK(run("crossval " + quoted(kData / "ggm_small.json") + " --folds 3 --out " + quoted(tmp / "g")) == 1);
  CHECK_FALSE(fs::exists(tmp / "g"));
}

TEST_CASE("oracle subcommands print their results") {
  TempDir tmp;
  REQUIRE(run("oracle pava 2,1", tmp / "pava.txt") == 0);
  CHECK(slurp(tmp / "pava.txt") == "1.5,1.5\n");
  REQUIRE(run("oracle pava 3,1,2", tmp / "pava3.txt") == 0);
  CHECK(slurp(tmp / "pava3.txt") == "2,2,2\n");
  REQUIRE(run("oracle quadrature_j 1 1 0 0", tmp / "j.txt") == 0);
  CHECK(std::stod(slurp(tmp / "j.txt")) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  REQUIRE(run("oracle penalized " + quoted(kData / "lasso_toy.json") + " 0.5", tmp / "pen.txt") == 0);
  const std::string pen = slurp(tmp / "pen.txt");
  CHECK(std::stod(pen.substr(0, pen.find(','))) == doctest::Approx(1.5).epsilon(1e-7));
}
