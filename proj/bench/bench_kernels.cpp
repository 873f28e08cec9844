#include <benchmark/benchmark.h>

#include <cmath>

#include "horolab/flows.hpp"
#include "horolab/rigidity.hpp"
#include "horolab/thermo.hpp"
#include "horolab/window.hpp"

using namespace horolab;

namespace {

const surface::FuchsianSpec& octagon() {
  static const auto spec = surface::build_octagon_group();
  return spec;
}

Exec policy(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) ? "parallel" : "serial"); }

void BM_XiEnsemble(benchmark::State& state) {
  const flows::Cover cover{&octagon(), &octagon().character("phi")};
  const std::vector<double> times{100, 200, 400};
  for (auto _ : state)
    benchmark::DoNotOptimize(flows::xi_ensemble(cover, 64, 1, times, flows::kGeodesicStep, policy(state)));
  label(state);
}

void BM_SuspensionEnsemble(benchmark::State& state) {
  static const auto m = thermo::builtin_model("full2-cosh");
  static const auto rpf = thermo::rpf_eigendata(m.space, thermo::potential(m, 1.0, std::vector<double>{0.0}));
  static const thermo::Suspension s(m, rpf);
  for (auto _ : state) benchmark::DoNotOptimize(thermo::suspension_ensemble(s, 400.0, 4096, 2, policy(state)));
  label(state);
}

void BM_DisplacementTable(benchmark::State& state) {
  static const auto m = thermo::builtin_model("full2-cosh");
  std::vector<double> axis;
  for (int i = -10; i <= 10; ++i) axis.push_back(0.2 * i);
  static const auto setup = window::make_symbolic(m, window::default_event(1), 50000, 3, axis);
  for (auto _ : state)
    benchmark::DoNotOptimize(window::DisplacementTable(setup, {4.0, 6.0, 8.0}, policy(state)));
  label(state);
}

void BM_HaarVolumes(benchmark::State& state) {
  const auto cp = rigidity::make_partition(64, octagon());
  for (auto _ : state)
    benchmark::DoNotOptimize(rigidity::haar_cell_volumes(cp, octagon(), 200000, rigidity::kVolumeSeed, policy(state)));
  label(state);
}

void BM_OrbitDensity(benchmark::State& state) {
  const rigidity::SubgroupSpec kerphi{&octagon(), {{octagon().character("phi"), 0}}};
  const auto cp = rigidity::make_partition(std::size_t{1} << 20, octagon());
  const auto x = psl2::rotation(0.3) * psl2::make_flow(psl2::FlowKind::A, 0.2) * psl2::rotation(0.7);
  for (auto _ : state) benchmark::DoNotOptimize(rigidity::orbit_density(kerphi, x, 7, cp, policy(state)));
  label(state);
}

} // namespace

BENCHMARK(BM_XiEnsemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SuspensionEnsemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DisplacementTable)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HaarVolumes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OrbitDensity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
