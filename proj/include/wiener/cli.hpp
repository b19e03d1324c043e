#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wiener/chaos2.hpp"
#include "wiener/chaos3.hpp"

namespace wiener::cli {

// ---- family generators -----------------------------------------------------

// alpha_k = 1/sqrt(2n), k <= n; kappa_4 = 12/n.
chaos2::DiagonalSecondChaos chi2_average(int n);

// Every distinct triple carries the same coefficient, unit-normalized.
chaos3::SymThreeTensor complete_3_tensor(int n);

// Complete tensor with triple (0,1,2) boosted by `boost` before normalizing.
chaos3::SymThreeTensor spiked_3_tensor(int n, double boost = 0.0);

// sum_{b < blocks} X_{3b} X_{3b+1} X_{3b+2} / sqrt(blocks): independent
// blocks, kappa_4 = 24/blocks.
chaos3::SymThreeTensor disjoint_3_tensor(int blocks);

// Gaussian coefficients on every distinct triple, unit-normalized.
chaos3::SymThreeTensor random_3_tensor(int n, std::uint64_t seed);

using Model = std::variant<chaos2::DiagonalSecondChaos, chaos2::MultivariateSecondChaos, chaos3::SymThreeTensor>;

// kinds: chi2-average, complete-3-tensor, spiked-3-tensor, disjoint-3-tensor,
// random-3-tensor. Throws ValidationError below the kind's minimum size.
Model family_generator(const std::string& kind, int size, std::uint64_t seed = 1);

int family_min_size(const std::string& kind);

// ---- tensor text format ----------------------------------------------------
//
//   # comment
//   dim 6
//   1 2 3 0.1666666666666667
//
// Indices are 1-based with i < j < k; one triple per line.
chaos3::SymThreeTensor read_tensor(std::istream& in, bool normalize);
chaos3::SymThreeTensor read_tensor_file(const std::filesystem::path& path, bool normalize);
void write_tensor(std::ostream& out, const chaos3::SymThreeTensor& t);

// ---- configuration ---------------------------------------------------------

// Flat key = value text with optional [section] headers; keys inside a
// section are addressed as "section.key". Repeated keys accumulate.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::size_t samples = 100000;
  std::filesystem::path out = "out";
  std::filesystem::path base_dir = ".";  // for relative tensor_file paths
  std::string source_text;
  std::multimap<std::string, std::string> values;

  std::optional<std::string> get(const std::string& key) const;
  std::vector<std::string> get_all(const std::string& key) const;
  std::vector<double> grid(const std::string& name, std::vector<double> fallback) const;
  double number(const std::string& key, double fallback) const;
  bool flag(const std::string& key, bool fallback) const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

// Builds the model from the [model] section.
Model build_model(const ExperimentConfig& cfg);

const std::vector<std::string>& experiment_names();

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunResult {
  int exit_code = 0;  // 0 all assertions pass, 1 some failed
  std::vector<Assertion> assertions;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

// Runs one named experiment, writing CSV files and manifest.json under
// cfg.out. Assertion failures are recorded, never thrown. Unknown names and
// unwritable outputs throw Error.
RunResult run(const ExperimentConfig& cfg);

// Entry point of the `wiener` binary.
int main_entry(int argc, char** argv);

}  // namespace wiener::cli
