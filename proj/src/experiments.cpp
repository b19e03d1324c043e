#include <CLI11.hpp>
#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "wiener/cli.hpp"
#include "wiener/errors.hpp"

namespace wiener::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

struct UnknownExperiment : ValidationError {
  using ValidationError::ValidationError;
};

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(15) << v;
  return s.str();
}

std::string flag(bool b) { return b ? "pass" : "fail"; }

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    if (!out_) throw Error("write failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

struct Context {
  const ExperimentConfig& cfg;
  RunResult& result;
  nlohmann::json tolerances = nlohmann::json::object();

  mc::RngSpec rng(std::uint64_t stream = 0) const { return {cfg.seed, stream}; }

  CsvWriter csv(const std::string& name, const std::vector<std::string>& header) {
    const std::filesystem::path p = cfg.out / name;
    result.files.push_back(p);
    return CsvWriter(p, header);
  }
  void check(const std::string& name, bool passed, const std::string& detail) {
    result.assertions.push_back({name, passed, detail});
  }
  void warn(const std::string& w) { result.warnings.push_back(w); }
};

template <typename T>
T require_model(Model m, const char* what) {
  if (T* p = std::get_if<T>(&m)) return std::move(*p);
  throw ValidationError(std::string("this experiment needs ") + what + " in [model]");
}

// For experiments that sweep a family over grid.sizes; otherwise the single model.
std::vector<std::pair<std::string, chaos3::SymThreeTensor>> tensor_models(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, chaos3::SymThreeTensor>> out;
  const auto fam = cfg.get("model.family");
  const std::vector<double> sizes = cfg.grid("sizes", {});
  if (fam && !sizes.empty()) {
    for (double s : sizes) {
      out.emplace_back(*fam + ":" + std::to_string(static_cast<int>(s)),
                       std::get<chaos3::SymThreeTensor>(family_generator(
                           *fam, static_cast<int>(s), static_cast<std::uint64_t>(cfg.number("model.seed", 1)))));
    }
    return out;
  }
  out.emplace_back(fam ? *fam : std::string("tensor"),
                   require_model<chaos3::SymThreeTensor>(build_model(cfg), "a 3-tensor"));
  return out;
}

void thm1_certificate_exp(Context& ctx) {
  const auto f = require_model<chaos2::DiagonalSecondChaos>(build_model(ctx.cfg), "diagonal coefficients");
  const double k4 = chaos2::kappa4(f);
  auto csv = ctx.csv("thm1_certificate.csv",
                     {"p", "kappa4", "threshold", "certified", "q_sup", "sp_lhs", "sp_rhs", "sp_bound"});
  for (double pd : ctx.cfg.grid("p", {1, 2, 3, 4, 5, 6})) {
    const int p = static_cast<int>(pd);
    const auto c = chaos2::thm1_certificate(k4, p);
    std::string lhs = "", rhs = "", holds = "";
    if (f.is_unit_variance()) {
      const auto d = chaos2::check_sp_deviation(f, p);
      lhs = num(d.lhs);
      rhs = num(d.rhs);
      holds = flag(d.holds);
      ctx.check("sp_deviation_p" + std::to_string(p), d.holds, num(d.lhs) + " <= " + num(d.rhs));
    }
    csv.row({std::to_string(p), num(k4), num(c.threshold), c.certified ? "true" : "false", num(c.q_sup), lhs, rhs,
             holds});
  }
  if (!f.is_unit_variance()) ctx.warn("variable is not unit variance; S_p deviation bound skipped");
  if (auto expect = ctx.cfg.get("expect.certified_p")) {
    const int p = std::stoi(*expect);
    ctx.check("certified_at_p" + *expect, chaos2::thm1_certificate(k4, p).certified,
              "kappa4=" + num(k4) + " threshold=" + num(chaos2::thm1_certificate(k4, p).threshold));
  }
}

void laplace_check_exp(Context& ctx) {
  const auto f = require_model<chaos2::DiagonalSecondChaos>(build_model(ctx.cfg), "diagonal coefficients");
  const double z_tol = 4.0;
  ctx.tolerances["z"] = z_tol;
  const std::vector<double> lambdas = ctx.cfg.grid("lambda", {0.25, 1.0, 4.0});
  const auto est = mc::estimate_many(
      lambdas.size(),
      [&](mc::GaussianStream& rng, std::span<double> out) {
        const double g = f.gamma(rng.gaussian_vector(f.size()));
        for (std::size_t j = 0; j < lambdas.size(); ++j) out[j] = std::exp(-lambdas[j] * g);
      },
      ctx.cfg.samples, ctx.rng());
  auto csv = ctx.csv("laplace_check.csv", {"lambda", "closed_form", "mc_mean", "mc_se", "z", "pass"});
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    const double exact = chaos2::laplace_gamma(f, lambdas[j]);
    const double z = est[j].std_error > 0 ? (est[j].mean - exact) / est[j].std_error : 0.0;
    const bool ok = std::abs(est[j].mean - exact) <= z_tol * est[j].std_error + 1e-15;
    csv.row({num(lambdas[j]), num(exact), num(est[j].mean), num(est[j].std_error), num(z), flag(ok)});
    ctx.check("laplace_lambda_" + num(lambdas[j]), ok, "z=" + num(z));
  }
}

void smallball2_exp(Context& ctx) {
  const auto f = require_model<chaos2::DiagonalSecondChaos>(build_model(ctx.cfg), "diagonal coefficients");
  const double k4 = chaos2::kappa4(f);
  const std::vector<double> eps = ctx.cfg.grid("eps", {0.05, 0.1, 0.2});
  const auto est = mc::estimate_many(
      eps.size(),
      [&](mc::GaussianStream& rng, std::span<double> out) {
        const double g = f.gamma(rng.gaussian_vector(f.size()));
        for (std::size_t j = 0; j < eps.size(); ++j) out[j] = g < eps[j] ? 1.0 : 0.0;
      },
      ctx.cfg.samples, ctx.rng());
  std::vector<double> levels = ctx.cfg.grid("p", {});
  if (levels.empty()) levels.push_back(std::max(1, chaos2::max_certified_level(k4)));
  auto csv = ctx.csv("smallball2.csv", {"p", "eps", "certified", "p_hat", "binomial_se", "bound", "pass"});
  const double n = static_cast<double>(ctx.cfg.samples);
  for (double pd : levels) {
    const int p = static_cast<int>(pd);
    const bool certified = chaos2::thm1_certificate(k4, p).certified;
    for (std::size_t j = 0; j < eps.size(); ++j) {
      const double ph = est[j].mean;
      const double se = std::sqrt(ph * (1.0 - ph) / n);
      const double bound = chaos2::smallball_bound(p, eps[j]);
      const bool ok = ph <= bound + 3.0 * se;
      csv.row({std::to_string(p), num(eps[j]), certified ? "true" : "false", num(ph), num(se), num(bound),
               certified ? flag(ok) : "n/a"});
      if (certified) ctx.check("smallball_p" + std::to_string(p) + "_eps_" + num(eps[j]), ok, num(ph) + " vs " + num(bound));
    }
  }
}

void negmoment2_exp(Context& ctx) {
  const auto f = require_model<chaos2::DiagonalSecondChaos>(build_model(ctx.cfg), "diagonal coefficients");
  auto csv = ctx.csv("negmoment2.csv", {"q", "mellin", "mc_mean", "mc_se", "z", "pass"});
  for (double q : ctx.cfg.grid("q", {0.25})) {
    double mellin = 0.0;
    try {
      mellin = chaos2::negative_moment(f, q);
    } catch (const DivergenceError& e) {
      csv.row({num(q), "inf", "", "", "", "divergent"});
      ctx.warn(e.what());
      continue;
    }
    const auto est = mc::estimate(
        [&](mc::GaussianStream& rng) { return std::pow(f.gamma(rng.gaussian_vector(f.size())), -q); },
        ctx.cfg.samples, ctx.rng());
    const double z = (est.mean - mellin) / est.std_error;
    const bool ok = std::abs(z) <= 3.0;
    csv.row({num(q), num(mellin), num(est.mean), num(est.std_error), num(z), flag(ok)});
    ctx.check("negmoment_q_" + num(q), ok, "z=" + num(z));
  }
}

void density_exp(Context& ctx) {
  const auto f = require_model<chaos2::DiagonalSecondChaos>(build_model(ctx.cfg), "diagonal coefficients");
  const std::vector<double> g = ctx.cfg.grid("x", {-10.0, 10.0, 0.01});
  if (g.size() != 3) throw ValidationError("grid.x must be 'lo, hi, step'");
  const auto d = chaos2::density_by_inversion(f, {g[0], g[1], g[2]});
  const double integral = chaos2::integrate_samples(d);
  double min_inner = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < d.x.size(); ++i) {
    if (d.x(i) >= -4.0 && d.x(i) <= 4.0) min_inner = std::min(min_inner, d.density(i));
  }
  const double tv = chaos2::tv_distance_to_normal(d);
  const auto bound = chaos3::dtv_bound(chaos2::kappa4(f));
  auto csv = ctx.csv("density.csv", {"x", "density", "normal_density"});
  for (Eigen::Index i = 0; i < d.x.size(); ++i) {
    csv.row({num(d.x(i)), num(d.density(i)), num(std::exp(-0.5 * d.x(i) * d.x(i)) / std::sqrt(2.0 * M_PI))});
  }
  auto summary = ctx.csv("density_summary.csv", {"quantity", "value", "threshold", "pass"});
  const bool int_ok = std::abs(integral - 1.0) <= 1e-3;
  const bool pos_ok = min_inner >= -1e-3;
  const bool tv_ok = tv <= bound.clamped;
  summary.row({"integral", num(integral), "1 +- 1e-3", flag(int_ok)});
  summary.row({"min_density_on_[-4,4]", num(min_inner), ">= -1e-3", flag(pos_ok)});
  summary.row({"tv_to_normal", num(tv), num(bound.clamped), flag(tv_ok)});
  summary.row({"xi_max", num(d.xi_max), "", ""});
  summary.row({"xi_step", num(d.xi_step), "", ""});
  ctx.tolerances["integral"] = 1e-3;
  ctx.tolerances["negativity"] = 1e-3;
  ctx.check("density_integral", int_ok, num(integral));
  ctx.check("density_nonnegative", pos_ok, num(min_inner));
  ctx.check("density_tv_bound", tv_ok, num(tv) + " <= " + num(bound.clamped));
}

void multivariate_exp(Context& ctx) {
  const auto m = require_model<chaos2::MultivariateSecondChaos>(build_model(ctx.cfg), "matrices");
  const int directions = static_cast<int>(ctx.cfg.number("options.directions", 64));
  const auto stats = chaos2::cross_gamma_stats(m, directions);
  const auto kmax = chaos2::sphere_kappa4_max(m, static_cast<int>(ctx.cfg.number("options.resolution", 256)));
  auto pairs = ctx.csv("multivariate_pairs.csv", {"i", "j", "cov", "gamma_l2", "var_gamma"});
  const Eigen::MatrixXd cov = m.covariance();
  for (Eigen::Index i = 0; i < m.count(); ++i) {
    for (Eigen::Index j = i; j < m.count(); ++j) {
      pairs.row({std::to_string(i + 1), std::to_string(j + 1), num(cov(i, j)), num(stats.gamma_l2(i, j)),
                 i == j ? num(stats.var_gamma_diag(i)) : ""});
    }
  }
  std::vector<std::string> header;
  for (Eigen::Index i = 0; i < m.count(); ++i) header.push_back("t" + std::to_string(i + 1));
  for (const char* h : {"var_gamma", "kappa4", "bound", "pass"}) header.emplace_back(h);
  auto dirs = ctx.csv("multivariate_directions.csv", header);
  for (const auto& d : stats.directions) {
    std::vector<std::string> row;
    for (double v : d.t) row.push_back(num(v));
    row.push_back(num(d.var_gamma));
    row.push_back(num(chaos2::kappa4_of_matrix(m.combination(d.t))));
    row.push_back(num(stats.bound));
    row.push_back(flag(d.holds));
    dirs.row(row);
  }
  auto summary = ctx.csv("multivariate_summary.csv", {"quantity", "value"});
  summary.row({"bound", num(stats.bound)});
  summary.row({"sphere_kappa4_max", num(kmax.value)});
  summary.row({"identity_covariance", m.has_identity_covariance() ? "true" : "false"});
  ctx.check("combined_variance_bound", stats.holds, std::to_string(stats.directions.size()) + " directions");
}

void gamma_spec_exp(Context& ctx) {
  const double k = 3.0;
  ctx.tolerances["se_multiple"] = k;
  auto csv = ctx.csv("gamma_spec.csv", {"model", "xi", "lhs", "lhs_se", "rhs_re", "rhs_re_se", "rhs_im", "rhs_im_se",
                                        "combined_se", "pass_re", "pass_im"});
  std::uint64_t stream = 0;
  for (const auto& [name, t] : tensor_models(ctx.cfg)) {
    const auto rows = chaos3::verify_gamma_spec(t, ctx.cfg.grid("xi", {0.5, 1.0, 2.0}), ctx.cfg.samples, ctx.rng(stream));
    stream += 2;
    for (const auto& r : rows) {
      const bool re_ok = std::abs(r.lhs.mean - r.rhs_re.mean) <= k * r.combined_se() + 1e-15;
      const bool im_ok = std::abs(r.rhs_im.mean) <= k * r.rhs_im.std_error + 1e-15;
      csv.row({name, num(r.xi), num(r.lhs.mean), num(r.lhs.std_error), num(r.rhs_re.mean), num(r.rhs_re.std_error),
               num(r.rhs_im.mean), num(r.rhs_im.std_error), num(r.combined_se()), flag(re_ok), flag(im_ok)});
      ctx.check(name + "_xi_" + num(r.xi) + "_re", re_ok, num(r.lhs.mean) + " vs " + num(r.rhs_re.mean));
      ctx.check(name + "_xi_" + num(r.xi) + "_im", im_ok, num(r.rhs_im.mean));
    }
  }
}

void spectral_radius_exp(Context& ctx) {
  auto csv = ctx.csv("spectral_radius.csv", {"model", "N", "kappa4", "p", "norm_2p", "se", "kappa4_pow_1_8"});
  std::vector<double> norms2;
  std::uint64_t stream = 0;
  for (const auto& [name, t] : tensor_models(ctx.cfg)) {
    const double k4 = chaos3::kappa4_contraction(t);
    for (double pd : ctx.cfg.grid("p", {1})) {
      const int p = static_cast<int>(pd);
      const auto r = chaos3::spectral_radius_moments(t, p, ctx.cfg.samples, ctx.rng(stream));
      if (p == 1) norms2.push_back(r.mean);
      csv.row({name, std::to_string(t.dim()), num(k4), std::to_string(p), num(r.mean), num(r.std_error),
               num(std::pow(std::max(k4, 0.0), 0.125))});
    }
    ++stream;
  }
  if (ctx.cfg.flag("expect.decreasing", false) && norms2.size() > 1) {
    bool dec = true;
    for (std::size_t i = 1; i < norms2.size(); ++i) dec = dec && norms2[i] < norms2[i - 1];
    ctx.check("norm2_strictly_decreasing", dec, "across grid.sizes");
  }
}

void trace_concentration_exp(Context& ctx) {
  auto csv = ctx.csv("trace_concentration.csv", {"model", "N", "kappa4", "sum_beta", "max_beta", "var_trace",
                                                 "mc_trace_mean", "mc_trace_se", "pass_sum_beta", "pass_mc"});
  std::vector<double> vars, k4s;
  std::uint64_t stream = 0;
  for (const auto& [name, t] : tensor_models(ctx.cfg)) {
    const auto tf = chaos3::trace_form(t);
    const double k4 = chaos3::kappa4_contraction(t);
    const auto est = mc::estimate(
        [&](mc::GaussianStream& rng) { return chaos3::trace_square(t, rng.gaussian_vector(t.dim())); },
        ctx.cfg.samples, ctx.rng(stream++));
    const bool sum_ok = std::abs(tf.expected_trace - 1.5) <= 1e-12;
    const bool mc_ok = std::abs(est.mean - 1.5) <= 3.0 * est.std_error;
    csv.row({name, std::to_string(t.dim()), num(k4), num(tf.expected_trace), num(tf.betas(0)), num(tf.variance_trace),
             num(est.mean), num(est.std_error), flag(sum_ok), flag(mc_ok)});
    ctx.check(name + "_sum_beta", sum_ok, num(tf.expected_trace));
    ctx.check(name + "_mc_trace", mc_ok, num(est.mean) + " +- " + num(est.std_error));
    vars.push_back(tf.variance_trace);
    k4s.push_back(k4);
  }
  if (vars.size() > 1) {
    bool var_dec = true, k4_dec = true;
    for (std::size_t i = 1; i < vars.size(); ++i) {
      var_dec = var_dec && vars[i] < vars[i - 1];
      k4_dec = k4_dec && k4s[i] < k4s[i - 1];
    }
    ctx.check("kappa4_strictly_decreasing", k4_dec, "across models in order");
    ctx.check("var_trace_strictly_decreasing", var_dec, "across models in order");
  }
}

void smallball3_exp(Context& ctx) {
  std::vector<double> eps = ctx.cfg.grid("eps", {});
  if (eps.empty()) {
    for (int i = 0; i < 8; ++i) eps.push_back(0.01 * std::pow(30.0, i / 7.0));
  }
  auto csv = ctx.csv("smallball3.csv", {"model", "eps", "p_hat", "se", "hits"});
  auto fits = ctx.csv("smallball3_fit.csv", {"model", "slope", "slope_se", "cw_baseline", "margin_in_se",
                                             "distance_to_0.75", "pass"});
  std::uint64_t stream = 0;
  for (const auto& [name, t] : tensor_models(ctx.cfg)) {
    const auto r = chaos3::smallball_gamma3(t, eps, ctx.cfg.samples, ctx.rng(stream++));
    for (const auto& row : r.rows) csv.row({name, num(row.eps), num(row.p), num(row.se), std::to_string(row.hits)});
    for (const auto& w : r.warnings) ctx.warn(name + ": " + w);
    bool monotone = true;
    for (std::size_t i = 1; i < r.rows.size(); ++i) monotone = monotone && r.rows[i].p >= r.rows[i - 1].p;
    ctx.check(name + "_monotone", monotone, "P(Gamma<eps) nondecreasing");
    if (r.fit.points_used >= 3) {
      const double margin = (r.fit.slope - 0.25) / r.fit.slope_se;
      const bool ok = r.fit.slope - 0.25 >= 2.0 * r.fit.slope_se;
      fits.row({name, num(r.fit.slope), num(r.fit.slope_se), "0.25", num(margin), num(0.75 - r.fit.slope), flag(ok)});
      ctx.check(name + "_exceeds_cw", ok, "slope=" + num(r.fit.slope) + " se=" + num(r.fit.slope_se));
    } else {
      ctx.check(name + "_exceeds_cw", false, "slope not fitted");
    }
  }
}

void negmoment3_exp(Context& ctx) {
  auto csv = ctx.csv("negmoment3.csv", {"model", "theta", "mean", "se", "top_share", "unstable"});
  std::uint64_t stream = 0;
  for (const auto& [name, t] : tensor_models(ctx.cfg)) {
    for (double theta : ctx.cfg.grid("theta", {0.1, 0.25, 0.5, 0.75, 0.9})) {
      const auto r = chaos3::negative_moment_gamma3(t, theta, ctx.cfg.samples, ctx.rng(stream));
      csv.row({name, num(theta), num(r.estimate.mean), num(r.estimate.std_error), num(r.top_share),
               r.unstable ? "true" : "false"});
    }
    ++stream;
  }
}

void sp_lower_bound_exp(Context& ctx) {
  auto csv = ctx.csv("sp_lower_bound.csv", {"model", "p", "kappa4", "mean_sp", "se", "lower_bound", "holds"});
  auto curve = ctx.csv("sp_smallball.csv", {"model", "p", "alpha", "p_hat", "se"});
  const std::vector<double> alphas = ctx.cfg.grid("alpha", {0.001, 0.01, 0.1});
  std::uint64_t stream = 0;
  for (const auto& [name, t] : tensor_models(ctx.cfg)) {
    const double k4 = chaos3::kappa4_contraction(t);
    for (double pd : ctx.cfg.grid("p", {1, 2})) {
      const auto r = chaos3::sp_batch(t, static_cast<int>(pd), alphas, ctx.cfg.samples, ctx.rng(stream));
      csv.row({name, std::to_string(r.p), num(k4), num(r.mean_sp.mean), num(r.mean_sp.std_error), num(r.lower_bound),
               r.bound_holds ? "true" : "false"});
      for (std::size_t j = 0; j < alphas.size(); ++j) {
        curve.row({name, std::to_string(r.p), num(alphas[j]), num(r.smallball[j].mean), num(r.smallball[j].std_error)});
      }
    }
    ++stream;
  }
}

using ExperimentFn = std::function<void(Context&)>;

const std::vector<std::pair<std::string, ExperimentFn>>& registry() {
  static const std::vector<std::pair<std::string, ExperimentFn>> r = {
      {"thm1-certificate", thm1_certificate_exp},
      {"laplace-check", laplace_check_exp},
      {"smallball2", smallball2_exp},
      {"negmoment2", negmoment2_exp},
      {"density", density_exp},
      {"multivariate-bounds", multivariate_exp},
      {"gamma-spec", gamma_spec_exp},
      {"spectral-radius", spectral_radius_exp},
      {"trace-concentration", trace_concentration_exp},
      {"smallball3", smallball3_exp},
      {"negmoment3", negmoment3_exp},
      {"sp-lower-bound", sp_lower_bound_exp},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

RunResult run(const ExperimentConfig& cfg) {
  const auto it = std::find_if(registry().begin(), registry().end(),
                               [&](const auto& e) { return e.first == cfg.experiment; });
  if (it == registry().end()) throw UnknownExperiment("unknown experiment '" + cfg.experiment + "'");

  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  if (ec) throw Error("cannot create output directory " + cfg.out.string() + ": " + ec.message());

  RunResult result;
  Context ctx{cfg, result};
  const auto start = std::chrono::steady_clock::now();
  it->second(ctx);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  result.exit_code = std::all_of(result.assertions.begin(), result.assertions.end(),
                                 [](const Assertion& a) { return a.passed; })
                         ? 0
                         : 1;

  nlohmann::json manifest;
  manifest["experiment"] = cfg.experiment;
  manifest["seed"] = cfg.seed;
  manifest["samples"] = cfg.samples;
  manifest["out"] = cfg.out.string();
  manifest["config_text"] = cfg.source_text;
  nlohmann::json values = nlohmann::json::object();
  for (const auto& [k, v] : cfg.values) values[k].push_back(v);
  manifest["config"] = values;
  manifest["versions"] = {{"wiener", kVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"compiler", __VERSION__}};
  manifest["wall_time_seconds"] = wall;
  manifest["tolerances"] = ctx.tolerances;
  manifest["assertions"] = nlohmann::json::array();
  for (const auto& a : result.assertions) {
    manifest["assertions"].push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  }
  manifest["files"] = nlohmann::json::array();
  for (const auto& f : result.files) manifest["files"].push_back(f.filename().string());
  manifest["warnings"] = result.warnings;
  manifest["exit_code"] = result.exit_code;

  const std::filesystem::path mpath = cfg.out / "manifest.json";
  std::ofstream m(mpath);
  if (!m) throw Error("cannot write " + mpath.string());
  m << manifest.dump(2) << '\n';
  result.files.push_back(mpath);
  return result;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Wiener chaos workbench: cumulants, carre du champ and small-ball experiments"};
  app.require_subcommand(1);
  auto* run_cmd = app.add_subcommand("run", "run the experiment described by a config file");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<std::string> out;
  run_cmd->add_option("config", config_path, "experiment config file")->required();
  run_cmd->add_option("--seed", seed, "override the config seed");
  run_cmd->add_option("--samples", samples, "override the Monte Carlo sample count");
  run_cmd->add_option("--out", out, "override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (samples) cfg.samples = *samples;
    if (out) cfg.out = *out;
    const RunResult r = run(cfg);
    for (const auto& a : r.assertions) {
      std::cout << (a.passed ? "PASS " : "FAIL ") << a.name << "  " << a.detail << '\n';
    }
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "wrote " << r.files.size() << " files to " << cfg.out.string() << '\n';
    return r.exit_code;
  } catch (const UnknownExperiment& e) {
    std::cerr << "error: " << e.what() << "\nexperiments:";
    for (const auto& n : experiment_names()) std::cerr << ' ' << n;
    std::cerr << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace wiener::cli
