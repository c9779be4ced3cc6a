#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "sfclust/basis.hpp"
#include "sfclust/fit.hpp"
#include "sfclust/model.hpp"
#include "sfclust/mrf.hpp"
#include "sfclust/rng.hpp"
#include "sfclust/simulate.hpp"

namespace {

sfclust::SimSpec bench_spec(int n_sites) {
    sfclust::SimSpec spec;
    spec.n_sites = n_sites;
    spec.basis = sfclust::BasisSpec::bspline(12);
    spec.timepoints = 365;
    spec.burn_in = 50;
    spec.seed = 7;
    return spec;
}

struct BenchData {
    sfclust::Dataset data;
    sfclust::NeighborGraph graph;
    sfclust::LabelField labels;
};

BenchData make_bench_data(int n_sites) {
    const auto spec = bench_spec(n_sites);
    BenchData b;
    b.labels = sfclust::sample_labels(spec);
    b.data = sfclust::sample_curves(b.labels, spec);
    b.graph = spec.build_graph();
    return b;
}

void BM_EvaluateBasis(benchmark::State& state) {
    const auto spec = sfclust::BasisSpec::bspline(static_cast<int>(state.range(0)));
    Eigen::VectorXd t(365);
    for (int i = 0; i < 365; ++i) t[i] = (i + 0.5) / 365.0;
    for (auto _ : state) benchmark::DoNotOptimize(sfclust::evaluate_basis(spec, t));
}
BENCHMARK(BM_EvaluateBasis)->Arg(8)->Arg(12)->Arg(20);

void BM_MarginalLoglik(benchmark::State& state) {
    const auto spec = sfclust::BasisSpec::bspline(12);
    const auto lattice = sfclust::build_lattice_basis(spec, 365);
    sfclust::Rng rng(3);
    Eigen::VectorXd alpha(12), y(365);
    for (int j = 0; j < 12; ++j) alpha[j] = rng.normal();
    for (int i = 0; i < 365; ++i) y[i] = rng.normal();
    sfclust::CovParams cov;
    cov.gamma = 0.09 * Eigen::MatrixXd::Identity(12, 12);
    cov.sigma2 = 0.25;
    for (auto _ : state)
        benchmark::DoNotOptimize(sfclust::marginal_loglik(y, lattice.values, alpha, cov));
}
BENCHMARK(BM_MarginalLoglik);

void BM_DensityMatrix(benchmark::State& state) {
    const auto b = make_bench_data(static_cast<int>(state.range(0)));
    const auto spec = bench_spec(static_cast<int>(state.range(0)));
    const auto bases = sfclust::CurveBases::build(b.data, spec.basis);
    sfclust::ClusterParams clusters;
    clusters.alpha = spec.resolved_alpha();
    sfclust::CovParams cov;
    cov.gamma = spec.resolved_gamma();
    cov.sigma2 = spec.sigma2;
    for (auto _ : state)
        benchmark::DoNotOptimize(sfclust::density_matrix(b.data, bases, clusters, cov));
}
BENCHMARK(BM_DensityMatrix)->Arg(100)->Arg(400);

void BM_GibbsSweep(benchmark::State& state) {
    const auto b = make_bench_data(400);
    sfclust::MrfParams params;
    params.theta = 1.0;
    params.n_clusters = 3;
    sfclust::LabelField labels = b.labels;
    sfclust::Rng rng(11);
    for (auto _ : state) {
        sfclust::gibbs_sweep(labels, b.graph, params, rng, sfclust::ScanOrder::systematic);
        benchmark::DoNotOptimize(labels.data());
    }
}
BENCHMARK(BM_GibbsSweep);

void BM_MStep(benchmark::State& state) {
    const auto b = make_bench_data(static_cast<int>(state.range(0)));
    const auto spec = bench_spec(static_cast<int>(state.range(0)));
    const auto bases = sfclust::CurveBases::build(b.data, spec.basis);
    sfclust::CovParams cov;
    cov.gamma = spec.resolved_gamma();
    cov.sigma2 = spec.sigma2;
    for (auto _ : state)
        benchmark::DoNotOptimize(sfclust::m_step(b.data, bases, b.labels, spec.n_clusters, cov));
}
BENCHMARK(BM_MStep)->Arg(100)->Arg(400);

}  // namespace

BENCHMARK_MAIN();
