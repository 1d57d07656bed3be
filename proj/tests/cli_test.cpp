#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code = -1;
  std::string output;  // stdout and stderr
};

Run pdcsim(const std::string& args) {
  const std::string cmd = std::string("\"") + PDC_CLI + "\" " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), p)) r.output += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config(const std::string& name) { return std::string(PDC_CONFIG_DIR) + "/" + name; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("pdcsim_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string out() const { return "--out \"" + dir_.string() + "\""; }
  fs::path path(const std::string& f) const { return dir_ / f; }

  json read_json(const std::string& f) const {
    std::ifstream in(path(f));
    return json::parse(in);
  }

  std::string read_text(const std::string& f) const {
    std::ifstream in(path(f), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::map<std::string, std::string> snapshot() const {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir_)) files[e.path().filename().string()] = read_text(e.path().filename().string());
    return files;
  }

  fs::path dir_;
};

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

TEST_F(Cli, GvmKdp) {
  const auto r = pdcsim(out() + " gvm --crystal KDP --daughter-nm 830");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = read_json("gvm.json");
  EXPECT_NEAR(j["result"]["pump_wavelength_nm"].get<double>(), 415.0, 5.0);
  EXPECT_EQ(j["version"], "1.0.0");
  EXPECT_TRUE(j.contains("out_of_model"));
}

TEST_F(Cli, GvmUnknownCrystal) {
  const auto r = pdcsim(out() + " gvm --crystal NOSUCH --daughter-nm 830");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("unknown crystal"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("ConfigError"), std::string::npos) << r.output;
}

TEST_F(Cli, GvmWithoutBirefringence) {
  const auto r = pdcsim(out() + " --crystal-db \"" + PDC_TEST_DATA_DIR + "/test_crystals.db\" gvm --crystal ZEROBIREF --daughter-nm 830");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.output.find("no phasematching"), std::string::npos) << r.output;
}

TEST_F(Cli, KdpConfigJsiIsUncorrelated) {
  const auto r = pdcsim("--config \"" + config("kdp.cfg") + "\" " + out() + " jsa");
  ASSERT_EQ(r.code, 0) << r.output;
  for (const char* f : {"jsi.csv", "marginal_e.csv", "marginal_o.csv", "jsa.json"}) EXPECT_TRUE(fs::exists(path(f))) << f;
  const auto rows = csv_rows(read_text("jsi.csv"));
  ASSERT_GE(rows.size(), 5u);
  EXPECT_EQ(rows[0][0], "omega_e_rad_s");
  EXPECT_EQ(rows[1][0], "lambda_e_nm");
  EXPECT_EQ(rows[2][0], "omega_o_rad_s");
  EXPECT_EQ(rows[3][0], "lambda_o_nm");
  EXPECT_EQ(rows.size(), 4u + rows[0].size() - 1);
  const auto j = read_json("jsa.json");
  EXPECT_EQ(j["config"]["text"].get<std::string>().empty(), false);
  const double r_corr = j["result"]["pearson_correlation"].get<double>();
  EXPECT_LT(std::abs(r_corr), 0.1) << "pearson " << r_corr;
}

TEST_F(Cli, BboSweepHasTheTradeoffRow) {
  const auto r = pdcsim("--config \"" + config("bbo.cfg") + "\" " + out() + " sweep");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = csv_rows(read_text("sweep.csv"));
  ASSERT_GT(rows.size(), 1u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"bandwidth_nm", "purity", "heralding_efficiency"}));
  bool found = false;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    ASSERT_EQ(rows[k].size(), 3u);
    if (rows[k][1].empty()) continue;
    const double purity = std::stod(rows[k][1]);
    const double eff = std::stod(rows[k][2]);
    found = found || (purity >= 0.95 && std::abs(eff - 0.75) <= 0.10);
  }
  EXPECT_TRUE(found);
}

// hom (with Poisson counts) followed by fit must recover the simulated V.
void round_trip(const std::string& out, const fs::path& dir, const std::string& herald) {
  const auto hom = pdcsim("--config \"" + config("kdp.cfg") + "\" " + out + " --seed 7 hom --herald-arm " + herald +
                          " --pairs-per-point 20000");
  ASSERT_EQ(hom.code, 0) << hom.output;
  const auto fit = pdcsim(out + " fit --counts \"" + (dir / "counts.csv").string() + "\"");
  ASSERT_EQ(fit.code, 0) << fit.output;
  std::ifstream hin(dir / "hom.json");
  std::ifstream fin(dir / "fit.json");
  const auto h = json::parse(hin);
  const auto f = json::parse(fin);
  const double v_true = h["result"]["visibility"].get<double>();
  const double v_fit = f["result"]["visibility"].get<double>();
  const double sigma = f["result"]["uncertainties"]["visibility"].get<double>();
  EXPECT_TRUE(f["result"]["converged"].get<bool>());
  EXPECT_LE(std::abs(v_fit - v_true), 3.0 * sigma)
      << "herald " << herald << ": simulated " << v_true << ", fitted " << v_fit << " +- " << sigma;
}

TEST_F(Cli, FitRoundTripHeraldE) { round_trip(out(), dir_, "e"); }

TEST_F(Cli, FitRoundTripHeraldO) { round_trip(out(), dir_, "o"); }

TEST_F(Cli, RerunsAreByteIdentical) {
  const std::vector<std::string> commands = {
      "gvm --crystal KDP",
      "--config \"" + config("kdp.cfg") + "\" --grid-points 128 jsa",
      "--config \"" + config("kdp.cfg") + "\" --grid-points 128 schmidt",
      "--config \"" + config("bbo.cfg") + "\" --grid-points 128 sweep --bandwidths 8,4,2",
      "--config \"" + config("kdp.cfg") + "\" --grid-points 256 --seed 3 hom --pairs-per-point 500",
      "--config \"" + config("kdp.cfg") + "\" --grid-points 128 --seed 3 scan --budget 100000",
  };
  for (const auto& c : commands) {
    ASSERT_EQ(pdcsim(out() + " " + c).code, 0) << c;
    const auto first = snapshot();
    ASSERT_EQ(pdcsim(out() + " " + c).code, 0) << c;
    EXPECT_EQ(first, snapshot()) << c;
    for (const auto& e : fs::directory_iterator(dir_)) fs::remove(e.path());
  }
}

TEST_F(Cli, SeedChangesOnlyTheNoise) {
  const std::string base = "--config \"" + config("kdp.cfg") + "\" --grid-points 256 ";
  ASSERT_EQ(pdcsim(out() + " " + base + "--seed 1 hom --pairs-per-point 500").code, 0);
  const auto a = snapshot();
  ASSERT_EQ(pdcsim(out() + " " + base + "--seed 2 hom --pairs-per-point 500").code, 0);
  const auto b = snapshot();
  EXPECT_EQ(a.at("hom.csv"), b.at("hom.csv"));
  EXPECT_NE(a.at("counts.csv"), b.at("counts.csv"));
}

TEST_F(Cli, ConfigErrorsExitTwoWithLocation) {
  {
    std::ofstream f(path("bad.cfg"));
    f << "[crystal]\nname = KDP\nlength_mm = 5\n\n[pump]\ncenter_nm = 415\nfwhm_nm = 4\nwaist_um = 3\n";
  }
  const auto r = pdcsim("--config \"" + path("bad.cfg").string() + "\" " + out() + " jsa");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("bad.cfg:8"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("waist_um"), std::string::npos) << r.output;

  EXPECT_EQ(pdcsim(out() + " jsa").code, 2);
  EXPECT_EQ(pdcsim("--config /nonexistent.cfg " + out() + " jsa").code, 2);
  EXPECT_EQ(pdcsim(out() + " nosuchcommand").code, 2);
  EXPECT_EQ(pdcsim(out() + " gvm").code, 2);

  std::ofstream(path("file")) << "x";
  const auto blocked = pdcsim("--out \"" + (dir_ / "file" / "sub").string() + "\" gvm --crystal KDP");
  EXPECT_EQ(blocked.code, 2) << blocked.output;
  EXPECT_NE(blocked.output.find("cannot create"), std::string::npos) << blocked.output;
}

TEST_F(Cli, DomainErrorsExitThree) {
  {
    std::ofstream f(path("narrow.cfg"));
    f << "[crystal]\nname = KDP\nlength_mm = 5\n\n[pump]\ncenter_nm = 415\nfwhm_nm = 4\n\n[filter]\ncenter_nm = 1500\nfwhm_nm = 2\n";
  }
  const auto r = pdcsim("--config \"" + path("narrow.cfg").string() + "\" " + out() + " --grid-points 64 jsa");
  EXPECT_EQ(r.code, 3) << r.output;
  EXPECT_NE(r.output.find("DomainError"), std::string::npos) << r.output;
}

TEST_F(Cli, NonConvergedFitExitsFour) {
  {
    std::ofstream f(path("bump.csv"));
    f << "delay_fs,counts\n";
    for (int d = -100; d <= 100; d += 10) f << d << "," << (d == 0 ? 1500 : 1000) << "\n";
  }
  const auto r = pdcsim(out() + " fit --counts \"" + path("bump.csv").string() + "\"");
  EXPECT_EQ(r.code, 4) << r.output;
  ASSERT_TRUE(fs::exists(path("fit.json")));
  EXPECT_FALSE(read_json("fit.json")["result"]["converged"].get<bool>());
}

TEST_F(Cli, FlatCountsFitToNoDip) {
  {
    std::ofstream f(path("flat.csv"));
    f << "delay_fs,counts\n";
    for (int d = -100; d <= 100; d += 10) f << d << ",700\n";
  }
  const auto r = pdcsim(out() + " fit --counts \"" + path("flat.csv").string() + "\"");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(read_json("fit.json")["result"]["visibility"].get<double>(), 0.0);
}

}  // namespace
