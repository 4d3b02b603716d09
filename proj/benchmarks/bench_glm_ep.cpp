#include <benchmark/benchmark.h>

#include <random>

#include "glmep/gaussian.hpp"
#include "glmep/glm_ep.hpp"
#include "glmep/gmm.hpp"
#include "glmep/harness.hpp"

using namespace glmep;

namespace {

Instance instance(int n, int k) {
    SimConfig c;
    c.n = n;
    c.k = k;
    auto rng = trial_rng(1, 0);
    return gen_instance(c, rng);
}

void BM_Sweep(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    const Instance inst = instance(2 * k / 3, k);
    EpConfig c;
    GlmState s = init_state(inst.model, c.init_xi);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sweep(s, inst.model, c));
    }
}
BENCHMARK(BM_Sweep)->Arg(12)->Arg(48)->Arg(192);

void BM_Run(benchmark::State& state) {
    const Instance inst = instance(8, 12);
    EpConfig c;
    c.mode = static_cast<Mode>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run(inst.model, c));
    state.SetLabel(std::string(to_string(c.mode)));
}
BENCHMARK(BM_Run)->DenseRange(0, 2);

void BM_RankOneUpdate(benchmark::State& state) {
    const auto K = static_cast<Eigen::Index>(state.range(0));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Matrix B = Matrix::NullaryExpr(K, K, [&] { return g(rng); });
    const Matrix C = B * B.transpose() / static_cast<double>(K) + Matrix::Identity(K, K);
    const Vector a = Vector::NullaryExpr(K, [&] { return g(rng); });
    for (auto _ : state) benchmark::DoNotOptimize(rank_one_precision_update(C, a, 0.5));
}
BENCHMARK(BM_RankOneUpdate)->Arg(12)->Arg(96);

void BM_GmmMoments(benchmark::State& state) {
    std::vector<GmmComponent> comps;
    for (int s = 0; s < state.range(0); ++s) comps.push_back({1.0, 0.5 * s, 0.1 + 0.05 * s});
    const GmmFactor f(comps);
    const GaussNat1 mu{0.3, -0.5 * f.min_precision()};
    for (auto _ : state) benchmark::DoNotOptimize(gmm_belief_moments(f, mu));
}
BENCHMARK(BM_GmmMoments)->Arg(2)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
