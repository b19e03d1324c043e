#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "wiener/cli.hpp"
#include "wiener/errors.hpp"

using namespace wiener::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wiener_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

int call_main(std::vector<std::string> args) {
  args.insert(args.begin(), "wiener");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return main_entry(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("family generators") {
  const auto c = chi2_average(12);
  CHECK(wiener::chaos2::kappa4(c) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.is_unit_variance());

  const auto t = complete_3_tensor(4);
  CHECK(t.entries().size() == 4);
  for (const auto& e : t.entries()) CHECK(e.value == doctest::Approx(1.0 / 12.0));

  const auto s = spiked_3_tensor(8);
  CHECK(s.is_unit_variance());
  CHECK(wiener::chaos3::kappa4_contraction(s) > 10.0);

  CHECK(random_3_tensor(5, 3).is_unit_variance());
  CHECK(random_3_tensor(5, 3).entries()[0].value == random_3_tensor(5, 3).entries()[0].value);

  CHECK_THROWS_AS(family_generator("chi2-average", 0), wiener::ValidationError);
  CHECK_THROWS_AS(family_generator("complete-3-tensor", 2), wiener::ValidationError);
  CHECK_THROWS_AS(family_generator("no-such-family", 5), wiener::ValidationError);
  CHECK(std::holds_alternative<wiener::chaos3::SymThreeTensor>(family_generator("disjoint-3-tensor", 2)));
}

TEST_CASE("tensor text format") {
  std::istringstream in("# F = X1 X2 X3\ndim 3\n1 2 3 2.5  # trailing comment\n\n");
  const auto t = read_tensor(in, true);
  CHECK(t.dim() == 3);
  CHECK(t.entries()[0].value == doctest::Approx(1.0 / 6));

  const auto r = random_3_tensor(6, 4);
  std::ostringstream out;
  write_tensor(out, r);
  std::istringstream back(out.str());
  const auto r2 = read_tensor(back, false);
  REQUIRE(r2.entries().size() == r.entries().size());
  for (std::size_t i = 0; i < r.entries().size(); ++i) CHECK(r2.entries()[i].value == r.entries()[i].value);

  for (const char* bad : {"1 2 3 1.0\n", "dim 3\n1 1 2 1.0\n", "dim 3\n3 2 1 1.0\n", "dim 3\n1 2 4 1.0\n",
                          "dim 3\n1 2 3\n", "dim 3\n1 2 3 x\n", "dim 0\n", "dim 3\ndim 3\n"}) {
    std::istringstream b(bad);
    CHECK_THROWS_AS(read_tensor(b, false), wiener::ValidationError);
  }
}

TEST_CASE("config parsing") {
  const auto cfg = config(
      "experiment = gamma-spec  # comment\nseed = 9\nsamples = 2e3\nout = somewhere\n"
      "[model]\nfamily = complete-3-tensor\nsize = 6\n[grid]\nxi = 0.5, 1 2\n[model]\nmatrix = 1 0; 0 1\n"
      "matrix = 0 1; 1 0\n");
  CHECK(cfg.experiment == "gamma-spec");
  CHECK(cfg.seed == 9);
  CHECK(cfg.samples == 2000);
  CHECK(cfg.out == fs::path("somewhere"));
  CHECK(cfg.grid("xi", {}) == std::vector<double>{0.5, 1, 2});
  CHECK(cfg.grid("eps", {0.1}) == std::vector<double>{0.1});
  CHECK(cfg.get_all("model.matrix").size() == 2);
  CHECK(cfg.number("model.size", 0) == 6);
  CHECK_THROWS_AS(config("seed = 1\n"), wiener::ValidationError);
  CHECK_THROWS_AS(config("experiment = x\nseed = -3\n"), wiener::ValidationError);
  CHECK_THROWS_AS(config("experiment = x\nseed = 12abc\n"), wiener::ValidationError);
  CHECK_THROWS_AS(config("experiment = x\n[model\n"), wiener::ValidationError);
  CHECK_THROWS_AS(config("experiment = x\njust words\n"), wiener::ValidationError);
  CHECK_THROWS_AS(config("experiment = x\n[grid]\nxi = 1, two\n").grid("xi", {}), wiener::ValidationError);
}

TEST_CASE("model specifications") {
  const auto a = build_model(config("experiment = x\n[model]\nalphas = 1, 1\nnormalize = true\n"));
  CHECK(std::get<wiener::chaos2::DiagonalSecondChaos>(a).is_unit_variance());
  const auto m = build_model(config("experiment = x\n[model]\nmatrix = 0.5 0; 0 -0.5\nmatrix = 0 0.5; 0.5 0\n"));
  CHECK(std::get<wiener::chaos2::MultivariateSecondChaos>(m).has_identity_covariance());
  const auto t = build_model(config("experiment = x\n[model]\ndim = 4\ntensor = 1 2 3 1; 2 3 4 1\nnormalize = true\n"));
  CHECK(std::get<wiener::chaos3::SymThreeTensor>(t).entries().size() == 2);
  CHECK_THROWS_AS(build_model(config("experiment = x\n")), wiener::ValidationError);
  CHECK_THROWS_AS(build_model(config("experiment = x\n[model]\nmatrix = 1 2; 3\n")), wiener::ValidationError);
}

TEST_CASE("experiment names") {
  const auto& names = experiment_names();
  CHECK(names.size() == 12);
  for (const char* n : {"thm1-certificate", "laplace-check", "smallball2", "negmoment2", "density",
                        "multivariate-bounds", "gamma-spec", "spectral-radius", "trace-concentration", "smallball3",
                        "negmoment3", "sp-lower-bound"}) {
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  }
}

TEST_CASE("gamma-spec run writes CSV and manifest") {
  const fs::path out = scratch("gamma_spec");
  auto cfg = config("experiment = gamma-spec\nseed = 3\nsamples = 20000\n[model]\nfamily = complete-3-tensor\n"
                    "size = 6\n[grid]\nxi = 0.5, 1, 2\n");
  cfg.out = out;
  const auto r = run(cfg);
  CHECK(r.exit_code == 0);
  CHECK(r.assertions.size() == 6);

  const std::string csv = slurp(out / "gamma_spec.csv");
  CHECK(csv.rfind("model,xi,lhs,lhs_se,rhs_re,rhs_re_se,rhs_im,rhs_im_se,combined_se,pass_re,pass_im\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["experiment"] == "gamma-spec");
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["samples"] == 20000);
  CHECK(manifest["config_text"].get<std::string>() == cfg.source_text);
  CHECK(manifest["assertions"].size() == 6);
  CHECK(manifest.contains("versions"));
  CHECK(manifest.contains("wall_time_seconds"));

  // Same config, same bytes.
  const fs::path out2 = scratch("gamma_spec_again");
  cfg.out = out2;
  run(cfg);
  CHECK(slurp(out / "gamma_spec.csv") == slurp(out2 / "gamma_spec.csv"));
}

TEST_CASE("thm1-certificate on the chi-square average") {
  const fs::path out = scratch("thm1");
  auto cfg = config("experiment = thm1-certificate\n[model]\nfamily = chi2-average\nsize = 192\n[grid]\np = 3\n"
                    "[expect]\ncertified_p = 3\n");
  cfg.out = out;
  const auto r = run(cfg);
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(out / "thm1_certificate.csv");
  CHECK(csv.find("\n3,0.062") != std::string::npos);
  CHECK(csv.find(",0.125,true,1.5,") != std::string::npos);
}

TEST_CASE("assertion failures are data") {
  const fs::path out = scratch("trace");
  auto cfg = config("experiment = trace-concentration\nsamples = 1000\n[model]\nfamily = complete-3-tensor\n"
                    "[grid]\nsizes = 6, 12\n");
  cfg.out = out;
  const auto r = run(cfg);
  CHECK(r.exit_code == 1);
  CHECK(fs::exists(out / "trace_concentration.csv"));
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["exit_code"] == 1);
}

TEST_CASE("run errors") {
  auto cfg = config("experiment = no-such-experiment\n");
  cfg.out = scratch("unknown");
  CHECK_THROWS_AS(run(cfg), wiener::ValidationError);

  const fs::path blocker = scratch("blocker");
  std::ofstream(blocker) << "file";
  auto ok = config("experiment = thm1-certificate\n[model]\nalphas = 0.5, 0.5\n");
  ok.out = blocker / "sub";
  CHECK_THROWS_AS(run(ok), wiener::Error);
}

TEST_CASE("command line entry") {
  const fs::path dir = scratch("entry");
  fs::create_directories(dir);
  std::ofstream(dir / "neg.cfg") << "experiment = negmoment2\nseed = 1\nsamples = 500\n[model]\nalphas = 0.5, 0.5\n"
                                    "[grid]\nq = 0.25\n";
  const std::string out = (dir / "o").string();
  CHECK(call_main({"run", (dir / "neg.cfg").string(), "--seed", "4", "--samples", "2000", "--out", out}) == 0);
  const auto manifest = nlohmann::json::parse(slurp(fs::path(out) / "manifest.json"));
  CHECK(manifest["seed"] == 4);
  CHECK(manifest["samples"] == 2000);

  std::ofstream(dir / "bad.cfg") << "experiment = nope\n";
  CHECK(call_main({"run", (dir / "bad.cfg").string(), "--out", out}) == 2);
  CHECK(call_main({"run", (dir / "missing.cfg").string()}) == 2);
  CHECK(call_main({}) != 0);
  CHECK(call_main({"run"}) != 0);
}
