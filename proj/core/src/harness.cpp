#include "glmep/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "glmep/baselines.hpp"
#include "glmep/errors.hpp"

namespace glmep {

std::string_view to_string(Method method) noexcept {
    switch (method) {
        case Method::ACEP: return "acep";
        case Method::EPC: return "epc";
        case Method::CLIP: return "clip";
        case Method::LMMSE: return "lmmse";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (Method m : {Method::ACEP, Method::EPC, Method::CLIP, Method::LMMSE})
        if (to_string(m) == name) return m;
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

void SimConfig::check() const {
    if (n < 1 || k < 1) throw Error(ErrorCode::InvalidArgument, "n and k must be >= 1");
    if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
    if (!std::isfinite(snr_db)) throw Error(ErrorCode::InvalidArgument, "snr_db must be finite");
    if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "no methods selected");
    if (threads < 1) throw Error(ErrorCode::InvalidArgument, "threads must be >= 1");
    validate_config(ep_config(Mode::ACEP));
}

EpConfig SimConfig::ep_config(Mode mode) const {
    EpConfig c;
    c.mode = mode;
    c.epsilon = epsilon;
    c.init_xi = init_xi;
    c.max_sweeps = max_sweeps;
    c.tol = tol;
    c.damping = damping;
    c.validate = validate;
    return c;
}

GmmFactor exponential_decay_prior(int k) {
    const double mean = std::ldexp(1.0, -(k - 1));
    const double var = 0.1 * std::ldexp(1.0, -2 * (k - 1));
    return GmmFactor({{0.5, mean, var}, {0.5, -mean, var}});
}

double noise_variance(const SimConfig& config) {
    // E[(a_n^T x)^2] = sum_k E[x_k^2] for unit-variance i.i.d. entries of A.
    double power = 0.0;
    for (int k = 1; k <= config.k; ++k) {
        const GaussMoment1 mom = exponential_decay_prior(k).moments();
        power += mom.tau + mom.m * mom.m;
    }
    return power / std::pow(10.0, config.snr_db / 10.0);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw Error(ErrorCode::Io, "bad number '" + s + "'");
    return v;
}

TrialResult run_method(Method method, const Instance& inst, const SimConfig& config, int trial_id) {
    TrialResult r;
    r.trial_id = trial_id;
    r.method = method;
    try {
        Vector x_hat;
        switch (method) {
            case Method::LMMSE:
                x_hat = lmmse_estimate(inst.model, inst.noise_var);
                r.sweeps = 0;
                r.converged = true;
                break;
            case Method::ACEP:
            case Method::EPC:
            case Method::CLIP: {
                const Mode mode = method == Method::ACEP  ? Mode::ACEP
                                  : method == Method::EPC ? Mode::EPC
                                                          : Mode::CLIP;
                const Posterior p = run(inst.model, config.ep_config(mode));
                x_hat = p.x_mean;
                r.sweeps = p.sweeps;
                r.converged = p.converged;
                r.counters = p.counters;
                r.threshold_hits = p.counters.total_threshold_hits();
                r.skipped_updates = p.counters.total_skipped();
                break;
            }
        }
        r.nmse = x_hat.allFinite() ? nmse(x_hat, inst.x_true) : std::numeric_limits<double>::infinity();
    } catch (const std::exception&) {
        r.nmse = std::numeric_limits<double>::infinity();
        r.converged = false;
    }
    return r;
}

}  // namespace

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial_id) {
    std::seed_seq seq{splitmix64(seed), splitmix64(seed ^ splitmix64(trial_id + 1))};
    return std::mt19937_64(seq);
}

Instance gen_instance(const SimConfig& config, std::mt19937_64& rng) {
    const auto N = static_cast<Eigen::Index>(config.n);
    const auto K = static_cast<Eigen::Index>(config.k);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    Instance inst;
    inst.model.A.resize(N, K);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < K; ++j) inst.model.A(i, j) = normal(rng);

    inst.x_true.resize(K);
    inst.model.priors.reserve(static_cast<std::size_t>(K));
    for (int k = 1; k <= config.k; ++k) {
        GmmFactor prior = exponential_decay_prior(k);
        const auto& comp = prior.components()[coin(rng) ? 0 : 1];
        inst.x_true(k - 1) = comp.mean + std::sqrt(comp.var) * normal(rng);
        inst.model.priors.push_back(std::move(prior));
    }

    inst.noise_var = noise_variance(config);
    inst.z_true = inst.model.A * inst.x_true;
    inst.model.y.resize(N);
    const double sigma = std::sqrt(inst.noise_var);
    inst.model.likelihoods.reserve(static_cast<std::size_t>(N));
    for (Eigen::Index i = 0; i < N; ++i) {
        inst.model.y(i) = inst.z_true(i) + sigma * normal(rng);
        inst.model.likelihoods.push_back(GmmFactor::gaussian(inst.model.y(i), inst.noise_var));
    }
    return inst;
}

double nmse(const Vector& x_hat, const Vector& x_true) {
    if (x_hat.size() != x_true.size()) throw Error(ErrorCode::InvalidArgument, "nmse: length mismatch");
    const double energy = x_true.squaredNorm();
    if (energy == 0.0) throw Error(ErrorCode::ZeroSignal, "reference signal is zero");
    return (x_hat - x_true).squaredNorm() / energy;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

MethodSummary summarize(Method method, const std::vector<TrialResult>& rows) {
    MethodSummary s;
    s.method = method;
    double sum = 0.0;
    for (const auto& r : rows) {
        if (r.method != method) continue;
        if (std::isfinite(r.nmse)) {
            s.sorted_nmse.push_back(r.nmse);
            sum += r.nmse;
        } else {
            ++s.failures;
        }
        if (r.converged) ++s.converged;
        s.total_sweeps += static_cast<std::size_t>(r.sweeps);
        s.counters += r.counters;
    }
    std::sort(s.sorted_nmse.begin(), s.sorted_nmse.end());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.mean = s.sorted_nmse.empty() ? nan : sum / static_cast<double>(s.sorted_nmse.size());
    s.median = quantile_sorted(s.sorted_nmse, 0.5);
    s.p75 = quantile_sorted(s.sorted_nmse, 0.75);
    return s;
}

const MethodSummary& RunSummary::of(Method m) const {
    for (const auto& s : methods)
        if (s.method == m) return s;
    throw Error(ErrorCode::InvalidArgument, "method '" + std::string(to_string(m)) + "' was not run");
}

RunSummary run_monte_carlo(const SimConfig& config) {
    config.check();
    const auto trials = static_cast<std::size_t>(config.trials);
    const std::size_t per_trial = config.methods.size();
    std::vector<TrialResult> rows(trials * per_trial);

    auto do_trial = [&](std::size_t t) {
        std::mt19937_64 rng = trial_rng(config.seed, t);
        const Instance inst = gen_instance(config, rng);
        for (std::size_t j = 0; j < per_trial; ++j)
            rows[t * per_trial + j] = run_method(config.methods[j], inst, config, static_cast<int>(t));
    };

    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), trials);
    if (workers <= 1) {
        for (std::size_t t = 0; t < trials; ++t) do_trial(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < trials; t = next++) do_trial(t);
            });
    }

    RunSummary summary;
    summary.config = config;
    summary.rows = std::move(rows);
    for (Method m : config.methods) summary.methods.push_back(summarize(m, summary.rows));
    return summary;
}

std::filesystem::path summary_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".summary.txt");
    return p;
}

void write_results(const RunSummary& summary, const std::filesystem::path& csv_path) {
    {
        std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot open '" + csv_path.string() + "' for writing");
        out << "trial,method,nmse,sweeps,converged,threshold_hits,skipped_updates\n";
        for (const auto& r : summary.rows) {
            out << r.trial_id << ',' << to_string(r.method) << ',' << format_double(r.nmse) << ','
                << r.sweeps << ',' << (r.converged ? 1 : 0) << ',' << r.threshold_hits << ','
                << r.skipped_updates << '\n';
        }
        if (!out) throw Error(ErrorCode::Io, "write failed for '" + csv_path.string() + "'");
    }

    const auto path = summary_path(csv_path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    const SimConfig& c = summary.config;
    out << "n=" << c.n << '\n'
        << "k=" << c.k << '\n'
        << "snr_db=" << format_double(c.snr_db) << '\n'
        << "trials=" << c.trials << '\n'
        << "seed=" << c.seed << '\n'
        << "epsilon=" << format_double(c.epsilon) << '\n'
        << "max_sweeps=" << c.max_sweeps << '\n'
        << "tol=" << format_double(c.tol) << '\n'
        << "init_xi=" << format_double(c.init_xi) << '\n';
    for (const auto& s : summary.methods) {
        const std::string key = "method." + std::string(to_string(s.method)) + ".";
        out << key << "finite=" << s.sorted_nmse.size() << '\n'
            << key << "failures=" << s.failures << '\n'
            << key << "median_nmse=" << format_double(s.median) << '\n'
            << key << "mean_nmse=" << format_double(s.mean) << '\n'
            << key << "p75_nmse=" << format_double(s.p75) << '\n'
            << key << "converged=" << s.converged << '\n'
            << key << "total_sweeps=" << s.total_sweeps << '\n'
            << key << "threshold_hits=" << s.counters.total_threshold_hits() << '\n'
            << key << "fz_adjacent_threshold_hits=" << s.counters.fz_adjacent_threshold_hits() << '\n'
            << key << "skipped_updates=" << s.counters.total_skipped() << '\n'
            << key << "invariant_checks=" << s.counters.invariant_checks << '\n'
            << key << "invariant_violations=" << s.counters.invariant_violations << '\n';
    }
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::vector<TrialResult> read_results_csv(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + csv_path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "trial,method,nmse,sweeps,converged,threshold_hits,skipped_updates")
        throw Error(ErrorCode::Io, "unexpected header in '" + csv_path.string() + "'");
    std::vector<TrialResult> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 7) throw Error(ErrorCode::Io, "malformed row '" + line + "'");
        TrialResult r;
        r.trial_id = std::stoi(f[0]);
        r.method = parse_method(f[1]);
        r.nmse = parse_double(f[2]);
        r.sweeps = std::stoi(f[3]);
        r.converged = f[4] == "1";
        r.threshold_hits = std::stoull(f[5]);
        r.skipped_updates = std::stoull(f[6]);
        rows.push_back(r);
    }
    return rows;
}

std::map<std::string, std::string> read_summary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

}  // namespace glmep
