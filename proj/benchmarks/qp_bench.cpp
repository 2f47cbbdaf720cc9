// Solver latency on production-shaped spline QPs, cold versus warm started.

#include <benchmark/benchmark.h>

#include "emplan/planner.hpp"
#include "emplan/scenario.hpp"
#include "emplan/simulator.hpp"

namespace {

using namespace emplan;

struct FixtureQps {
  QpProblem path;
  QpProblem speed;
  QpSolution path_solution;
  QpSolution speed_solution;
};

const FixtureQps& problems() {
  static const FixtureQps qps = [] {
    const Scenario sc =
        load_scenario(std::string(EMPLAN_FIXTURE_DIR) + "/oncoming_nudge.json");
    const PlannerConfig config;
    EmPlanner planner(config);
    const World world = world_at(sc, 0.0, sc.ego, config.planner.horizon);
    const auto candidates = sc.candidates();
    const LaneCandidate& lane = candidates.front();
    const ReferenceLine& ref = *lane.reference_line;
    const FrenetState start = ref.project(world.ego);

    const auto motion = ego_motion_synthesized(ref, start.s, world.ego.v, config.sl.dt,
                                               config.planner.horizon);
    const auto sl =
        project_sl(world.obstacles, ref, motion, world.ego.v, world.footprint, config.sl);
    const auto lattice_cfg =
        LatticeConfig::make(world.ego.v, false, lane.road, world.footprint);
    const double span = std::min(config.planner.plan_span, ref.length() - start.s - 2.0);
    const auto lattice = sample_lattice(lattice_cfg, start, lane.road, start.s + span);
    PiecewiseLinear center{{start.s, start.s + span}, {0.0, 0.0}};
    const auto dp = dp_search(lattice, sl, center, config.path, world.footprint, lane.road);
    const auto tunnel =
        extract_tunnel_and_decisions(dp.path, sl, lane.road, world.footprint, config.path);
    PiecewiseLinear guidance;
    for (double s = dp.path.s_begin(); s <= dp.path.s_end() + 1e-9; s += 1.0) {
      guidance.xs.push_back(s);
      guidance.ys.push_back(dp.path.eval(s));
    }

    FixtureQps out;
    out.path = build_path_qp(tunnel.tunnel, guidance, start, world.footprint, config.path,
                             config.path_qp)
                   .problem;
    out.path_solution = solve_qp(out.path);

    const LaneResult lane_result = planner.plan_lane(lane, world, nullptr);
    PiecewiseLinear s_ref{lane_result.diag.dp_speed->times,
                          lane_result.diag.dp_speed->stations};
    out.speed = build_speed_qp(*lane_result.diag.speed_tunnel, s_ref, world.ego.v, 0.0,
                               config.limits, lane_result.diag.caps, config.speed_qp)
                    .problem;
    out.speed_solution = solve_qp(out.speed);
    return out;
  }();
  return qps;
}

void BM_PathQpCold(benchmark::State& state) {
  const auto& qps = problems();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_qp(qps.path));
  }
}
BENCHMARK(BM_PathQpCold)->Unit(benchmark::kMillisecond);

void BM_PathQpWarm(benchmark::State& state) {
  const auto& qps = problems();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_qp(qps.path, &qps.path_solution));
  }
}
BENCHMARK(BM_PathQpWarm)->Unit(benchmark::kMillisecond);

void BM_SpeedQpCold(benchmark::State& state) {
  const auto& qps = problems();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_qp(qps.speed));
  }
}
BENCHMARK(BM_SpeedQpCold)->Unit(benchmark::kMillisecond);

void BM_SpeedQpWarm(benchmark::State& state) {
  const auto& qps = problems();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_qp(qps.speed, &qps.speed_solution));
  }
}
BENCHMARK(BM_SpeedQpWarm)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
