#pragma once

// Monte Carlo comparison of the EP variants and LMMSE on randomly drawn GLM
// instances, and the CSV/summary files it produces.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "glmep/glm_ep.hpp"

namespace glmep {

enum class Method { ACEP, EPC, CLIP, LMMSE };

std::string_view to_string(Method method) noexcept;
/// Accepts "acep", "epc", "clip", "lmmse". Throws InvalidArgument otherwise.
Method parse_method(std::string_view name);

struct SimConfig {
    int n = 8;
    int k = 12;
    double snr_db = 15.0;
    int trials = 1000;
    std::uint64_t seed = 1;
    std::vector<Method> methods{Method::ACEP, Method::EPC, Method::CLIP, Method::LMMSE};
    double epsilon = 1e-8;
    int max_sweeps = 50;
    double tol = 1e-8;
    double init_xi = 1.0;
    double damping = 1.0;
    bool validate = false;
    int threads = 1;
    std::string out_path = "results.csv";

    /// Throws InvalidArgument when a field is out of range.
    void check() const;
    EpConfig ep_config(Mode mode) const;
};

/// Component k (1-based) of the two-component prior: means +-2^{-(k-1)},
/// variance 0.1 * 2^{-2(k-1)}, equal weights.
GmmFactor exponential_decay_prior(int k);

/// sigma^2 such that E||A x||^2 / (N sigma^2) = 10^{snr_db/10} for i.i.d.
/// standard normal A and x drawn from the priors.
double noise_variance(const SimConfig& config);

/// Independent stream for one trial; depends only on (seed, trial_id).
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial_id);

struct Instance {
    GlmModel model;
    Vector x_true;
    Vector z_true;
    double noise_var = 0.0;
};

Instance gen_instance(const SimConfig& config, std::mt19937_64& rng);

/// ||x_hat - x||^2 / ||x||^2. Throws ZeroSignal if x == 0.
double nmse(const Vector& x_hat, const Vector& x_true);

struct TrialResult {
    int trial_id = 0;
    Method method = Method::ACEP;
    double nmse = 0.0;  ///< +inf when the method failed on this trial
    int sweeps = 0;
    bool converged = false;
    std::size_t threshold_hits = 0;
    std::size_t skipped_updates = 0;
    Counters counters;  ///< per-message detail; not part of the CSV
};

struct MethodSummary {
    Method method = Method::ACEP;
    std::vector<double> sorted_nmse;  ///< finite values only, ascending
    std::size_t failures = 0;         ///< trials with nmse = +inf
    double median = 0.0;
    double mean = 0.0;
    double p75 = 0.0;
    std::size_t converged = 0;
    std::size_t total_sweeps = 0;
    Counters counters;
};

struct RunSummary {
    SimConfig config;
    std::vector<TrialResult> rows;  ///< ordered by trial, then by method order in config
    std::vector<MethodSummary> methods;

    const MethodSummary& of(Method m) const;
};

/// Quantile by linear interpolation between order statistics (q in [0, 1]).
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Aggregates the rows belonging to `method`.
MethodSummary summarize(Method method, const std::vector<TrialResult>& rows);

RunSummary run_monte_carlo(const SimConfig& config);

/// Sibling file for the key-value summary: results.csv -> results.summary.txt.
std::filesystem::path summary_path(const std::filesystem::path& csv_path);

/// Writes the per-trial CSV and the key-value summary next to it.
/// Throws Io with the offending path on failure.
void write_results(const RunSummary& summary, const std::filesystem::path& csv_path);

std::vector<TrialResult> read_results_csv(const std::filesystem::path& csv_path);
std::map<std::string, std::string> read_summary(const std::filesystem::path& path);

}  // namespace glmep
