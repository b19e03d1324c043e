#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "wiener/cli.hpp"
#include "wiener/errors.hpp"

namespace wiener::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& s) {
  const auto pos = s.find('#');
  return pos == std::string::npos ? s : s.substr(0, pos);
}

double parse_double(const std::string& token, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw ValidationError("cannot parse number '" + token + "' in " + context);
  }
  if (used != token.size()) throw ValidationError("cannot parse number '" + token + "' in " + context);
  return v;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& context) {
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream ss(cleaned);
  std::vector<double> out;
  for (std::string tok; ss >> tok;) out.push_back(parse_double(tok, context));
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) parts.push_back(cur);
  return parts;
}

Eigen::MatrixXd parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  for (const std::string& row : split(text, ';')) {
    if (trim(row).empty()) continue;
    rows.push_back(parse_numbers(row, "matrix row"));
  }
  if (rows.empty()) throw ValidationError("empty matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) throw ValidationError("ragged matrix rows");
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

double binomial3(int n) { return n * (n - 1.0) * (n - 2.0) / 6.0; }

}  // namespace

chaos2::DiagonalSecondChaos chi2_average(int n) {
  if (n < family_min_size("chi2-average")) throw ValidationError("chi2-average needs n >= 1");
  return chaos2::DiagonalSecondChaos(Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(2.0 * n)));
}

chaos3::SymThreeTensor complete_3_tensor(int n) {
  if (n < 3) throw ValidationError("complete-3-tensor needs N >= 3");
  std::vector<chaos3::SymThreeTensor::Entry> entries;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) entries.push_back({i, j, k, 1.0});
  return chaos3::make_tensor(n, entries, true);
}

chaos3::SymThreeTensor spiked_3_tensor(int n, double boost) {
  if (n < 3) throw ValidationError("spiked-3-tensor needs N >= 3");
  if (boost <= 0.0) boost = std::sqrt(binomial3(n));
  std::vector<chaos3::SymThreeTensor::Entry> entries;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) entries.push_back({i, j, k, (i == 0 && j == 1 && k == 2) ? 1.0 + boost : 1.0});
  return chaos3::make_tensor(n, entries, true);
}

chaos3::SymThreeTensor disjoint_3_tensor(int blocks) {
  if (blocks < 1) throw ValidationError("disjoint-3-tensor needs at least one block");
  std::vector<chaos3::SymThreeTensor::Entry> entries;
  for (int b = 0; b < blocks; ++b) entries.push_back({3 * b, 3 * b + 1, 3 * b + 2, 1.0});
  return chaos3::make_tensor(3 * blocks, entries, true);
}

chaos3::SymThreeTensor random_3_tensor(int n, std::uint64_t seed) {
  if (n < 3) throw ValidationError("random-3-tensor needs N >= 3");
  mc::GaussianStream rng({seed, 0x7e45u}, 0);
  std::vector<chaos3::SymThreeTensor::Entry> entries;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) entries.push_back({i, j, k, rng.gaussian()});
  return chaos3::make_tensor(n, entries, true);
}

int family_min_size(const std::string& kind) {
  if (kind == "chi2-average" || kind == "disjoint-3-tensor") return 1;
  if (kind == "complete-3-tensor" || kind == "spiked-3-tensor" || kind == "random-3-tensor") return 3;
  throw ValidationError("unknown family '" + kind + "'");
}

Model family_generator(const std::string& kind, int size, std::uint64_t seed) {
  if (size < family_min_size(kind)) {
    throw ValidationError("family '" + kind + "' needs size >= " + std::to_string(family_min_size(kind)) +
                          ", got " + std::to_string(size));
  }
  if (kind == "chi2-average") return chi2_average(size);
  if (kind == "complete-3-tensor") return complete_3_tensor(size);
  if (kind == "spiked-3-tensor") return spiked_3_tensor(size);
  if (kind == "disjoint-3-tensor") return disjoint_3_tensor(size);
  return random_3_tensor(size, seed);
}

chaos3::SymThreeTensor read_tensor(std::istream& in, bool normalize) {
  int dim = -1;
  std::vector<chaos3::SymThreeTensor::Entry> entries;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    std::istringstream ss(body);
    const std::string where = "tensor line " + std::to_string(lineno);
    if (dim < 0) {
      std::string word;
      ss >> word;
      if (word != "dim" || !(ss >> dim) || dim < 1) throw ValidationError(where + ": expected 'dim <N>' header");
      continue;
    }
    std::string ti, tj, tk, tv, extra;
    if (!(ss >> ti >> tj >> tk >> tv) || (ss >> extra)) throw ValidationError(where + ": expected 'i j k value'");
    const int i = static_cast<int>(parse_double(ti, where));
    const int j = static_cast<int>(parse_double(tj, where));
    const int k = static_cast<int>(parse_double(tk, where));
    if (!(i < j && j < k)) throw ValidationError(where + ": indices must satisfy i < j < k");
    entries.push_back({i - 1, j - 1, k - 1, parse_double(tv, where)});
  }
  if (dim < 0) throw ValidationError("tensor input has no 'dim' header");
  return chaos3::make_tensor(dim, entries, normalize);
}

chaos3::SymThreeTensor read_tensor_file(const std::filesystem::path& path, bool normalize) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open tensor file " + path.string());
  return read_tensor(in, normalize);
}

void write_tensor(std::ostream& out, const chaos3::SymThreeTensor& t) {
  out << "dim " << t.dim() << '\n' << std::setprecision(17);
  for (const auto& e : t.entries()) out << e.i + 1 << ' ' << e.j + 1 << ' ' << e.k + 1 << ' ' << e.value << '\n';
}

std::optional<std::string> ExperimentConfig::get(const std::string& key) const {
  auto range = values.equal_range(key);
  if (range.first == range.second) return std::nullopt;
  return std::prev(range.second)->second;  // last one wins
}

std::vector<std::string> ExperimentConfig::get_all(const std::string& key) const {
  std::vector<std::string> out;
  for (auto [it, end] = values.equal_range(key); it != end; ++it) out.push_back(it->second);
  return out;
}

std::vector<double> ExperimentConfig::grid(const std::string& name, std::vector<double> fallback) const {
  const auto v = get("grid." + name);
  return v ? parse_numbers(*v, "grid." + name) : fallback;
}

double ExperimentConfig::number(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? parse_double(trim(*v), key) : fallback;
}

bool ExperimentConfig::flag(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "yes" || *v == "1") return true;
  if (*v == "false" || *v == "no" || *v == "0") return false;
  throw ValidationError("expected a boolean for " + key + ", got '" + *v + "'");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::ostringstream source;
  std::string section;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    source << line << '\n';
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ValidationError("config line " + std::to_string(lineno) + ": bad section header");
      section = trim(body.substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    cfg.values.emplace(section.empty() ? key : section + "." + key, trim(body.substr(eq + 1)));
  }
  cfg.source_text = source.str();
  if (auto v = cfg.get("experiment")) cfg.experiment = *v;
  if (auto v = cfg.get("seed")) {
    std::size_t used = 0;
    try {
      cfg.seed = std::stoull(*v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v->size() || v->front() == '-') throw ValidationError("seed must be an unsigned integer");
  }
  if (auto v = cfg.get("samples")) cfg.samples = static_cast<std::size_t>(parse_double(*v, "samples"));
  if (auto v = cfg.get("out")) cfg.out = *v;
  if (cfg.experiment.empty()) throw ValidationError("config does not name an experiment");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  ExperimentConfig cfg = parse_config(in);
  cfg.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return cfg;
}

Model build_model(const ExperimentConfig& cfg) {
  const bool normalize = cfg.flag("model.normalize", false);
  if (auto fam = cfg.get("model.family")) {
    const int size = static_cast<int>(cfg.number("model.size", 0));
    return family_generator(*fam, size, static_cast<std::uint64_t>(cfg.number("model.seed", 1)));
  }
  if (auto a = cfg.get("model.alphas")) {
    const std::vector<double> v = parse_numbers(*a, "model.alphas");
    Eigen::VectorXd alphas = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    return normalize ? chaos2::DiagonalSecondChaos::normalized(alphas) : chaos2::DiagonalSecondChaos(alphas);
  }
  if (auto mats = cfg.get_all("model.matrix"); !mats.empty()) {
    std::vector<Eigen::MatrixXd> parsed;
    for (const auto& m : mats) parsed.push_back(parse_matrix(m));
    return chaos2::MultivariateSecondChaos(std::move(parsed));
  }
  if (auto file = cfg.get("model.tensor_file")) {
    std::filesystem::path p(*file);
    if (p.is_relative()) p = cfg.base_dir / p;
    return read_tensor_file(p, normalize);
  }
  if (auto entries = cfg.get("model.tensor")) {
    std::string text = "dim " + std::to_string(static_cast<int>(cfg.number("model.dim", 0))) + "\n";
    for (const std::string& e : split(*entries, ';')) text += e + "\n";
    std::istringstream in(text);
    return read_tensor(in, normalize);
  }
  throw ValidationError("[model] needs one of family, alphas, matrix, tensor_file, tensor");
}

}  // namespace wiener::cli
