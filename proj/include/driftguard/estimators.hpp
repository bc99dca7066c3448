#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftguard/records.hpp"
#include "driftguard/types.hpp"

namespace driftguard {

struct InputDist {
  enum class Kind { Uniform, Normal } kind = Kind::Uniform;
  double a = 0.0;  // Uniform lower bound or Normal mean
  double b = 1.0;  // Uniform upper bound or Normal std
  double quantile(double u) const;
  std::string family() const { return kind == Kind::Uniform ? "Uniform" : "Normal"; }
  static InputDist uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static InputDist normal(double mu, double sd) { return {Kind::Normal, mu, sd}; }
};

struct BenchmarkModel {
  std::string id;
  int d_in = 0;
  int d_out = 1;
  std::function<std::vector<double>(const std::vector<double>&)> evaluate;
  std::vector<InputDist> input_dists;
  std::optional<std::vector<double>> analytic_s1, analytic_st;
  std::string model_class = "unknown";
};

BenchmarkModel g_function(const std::vector<double>& a, const std::string& id = "g_function");
BenchmarkModel ishigami(double a = 7.0, double b = 0.1);
BenchmarkModel structural_response();
BenchmarkModel cantilever_beam();
BenchmarkModel thermal_stub();

// Registered ids: g_function_15, g_function_8, ishigami, cantilever_beam,
// structural_response, thermal_stub.
const std::map<std::string, BenchmarkModel>& benchmark_catalog();
const BenchmarkModel& benchmark_model(const std::string& id);  // UnknownModel

const std::vector<double>& g_function_a15();
const std::vector<double>& g_function_a8();

enum class Sampling { MonteCarlo, LatinHypercube };
enum class OutputTreatment { Scalar, Aggregated };

struct RunOptions {
  Sampling sampling = Sampling::MonteCarlo;
  bool staged = false;  // two half-batches with independent streams
  OutputTreatment treatment = OutputTreatment::Scalar;
};

SAResult sobol_saltelli(const BenchmarkModel& m, long long n, std::uint64_t seed, const RunOptions& opt = {});
SAResult chatterjee(const BenchmarkModel& m, long long n, std::uint64_t seed, const RunOptions& opt = {});
SAResult cvm(const BenchmarkModel& m, long long n, std::uint64_t seed, const RunOptions& opt = {});
SAResult morris(const BenchmarkModel& m, long long trajectories, int levels, std::uint64_t seed,
                const RunOptions& opt = {});
// Simulated executors: analytic reference plus seeded Gaussian noise.
SAResult simulated_pce(const BenchmarkModel& m, long long n, std::uint64_t seed, double noise = 0.01);
SAResult simulated_generalized_sobol(const BenchmarkModel& m, long long n, std::uint64_t seed, double noise = 0.01);

// Dispatch on estimator id; hyperparams carry n_samples and, for Morris, levels.
SAResult run_estimator(const std::string& estimator, const BenchmarkModel& m,
                       const std::map<std::string, double>& hyperparams, std::uint64_t seed,
                       const RunOptions& opt = {});

RunOptions run_options_for(const ActionTuple& a);

// Chatterjee xi_n with midranks; x ties are broken by sample index.
double chatterjee_xi(const std::vector<double>& x, const std::vector<double>& y);

// CSV index table: input,<attribute columns...>
std::string index_table_csv(const SAResult& r);

}  // namespace driftguard
