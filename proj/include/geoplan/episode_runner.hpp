#pragma once

// End-to-end episode execution: localize the start tile by retrieval, plan
// the reference route with A* over the grid graph, then roll the policy
// along the waypoint conditioning schedule, recording rewards.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoplan/crossview.hpp"
#include "geoplan/foresight.hpp"
#include "geoplan/grpo.hpp"
#include "geoplan/metrics.hpp"
#include "geoplan/nav_env.hpp"
#include "geoplan/planner.hpp"
#include "geoplan/reward.hpp"

namespace geoplan {

struct EpisodeStepRecord {
    int stepIndex{0};
    Cell state;
    Action action{Action::Stay};
    std::optional<Cell> nextState;
    TransitionClass cls{TransitionClass::Invalid};
    double rProg{0.0};
    double rGeo{0.0};
    double rTotal{0.0};
};

struct EpisodeResult {
    int64_t localizedTileId{-1};
    std::vector<Vec2> trajectory;      // world points, starts at the start cell
    std::vector<Vec2> referencePath;   // planner waypoints
    std::vector<EpisodeStepRecord> steps;
    bool reachedGoal{false};
    bool invalidTermination{false};
    bool planFailed{false};
};

inline RetrievalIndex buildCellIndex(const GridWorld& world, const WorldAssets& assets) {
    RetrievalIndex index;
    for (const Cell& c : world.traversableCells()) {
        RetrievalEntry e;
        e.tileId = world.cellId(c);
        e.embedding.values = assets.cellCond[world.cellId(c)];
        e.position = world.cellCenter(c);
        index.entries.push_back(std::move(e));
    }
    return index;
}

// A* through all mandatory stops over the grid graph; returns the node path.
inline std::vector<int> planThroughStops(const TopoGraph& graph, const GridWorld& world,
                                         const EpisodeSpec& spec, double alpha = 1.0,
                                         double beta = 0.5) {
    std::vector<int> nodes{world.cellId(spec.start)};
    Cell cur = spec.start;
    std::vector<Cell> targets = spec.stops;
    targets.push_back(spec.goal);
    for (const Cell& t : targets) {
        PlanQuery q;
        q.startNode = world.cellId(cur);
        q.goalNode = world.cellId(t);
        q.alpha = alpha;
        q.beta = beta;
        WaypointPath leg = astar(graph, q);
        for (size_t i = 1; i < leg.nodes.size(); ++i) nodes.push_back(leg.nodes[i]);
        cur = t;
    }
    return nodes;
}

struct EpisodeRunConfig {
    double betaGeo{0.5};
    bool greedy{true};
    uint64_t seed{0};
};

inline EpisodeResult runEpisode(const GridWorld& world, const WorldAssets& assets,
                                const TopoGraph& graph, const RetrievalIndex& index,
                                const EpisodeSpec& spec, const PolicyParams& params,
                                const EpisodeRunConfig& cfg) {
    EpisodeResult result;

    // localization: match the current satellite patch against the tile index
    EmbeddingVector query{assets.cellCond[world.cellId(spec.start)]};
    result.localizedTileId = retrieve(query, index, 1).rankedIds[0];

    std::vector<int> nodePath;
    try {
        nodePath = planThroughStops(graph, world, spec);
    } catch (const GeoplanError&) {
        result.planFailed = true;  // unreachable stop: a recorded failure
        return result;
    }
    std::vector<Cell> refCells;
    for (int id : nodePath) refCells.push_back(world.cellFromId(id));
    std::vector<Vec2> waypoints =
        downsample(nodePath, graph, world.cellMeters);  // one waypoint per cell
    result.referencePath = waypoints;

    Cell cur = world.cellFromId(result.localizedTileId);
    result.trajectory.push_back(world.cellCenter(cur));
    RngStream rng(cfg.seed, "episode-exec");
    size_t wpIdx = 1;
    // collapse leading waypoints already satisfied
    while (wpIdx < refCells.size() && refCells[wpIdx] == cur) wpIdx++;

    for (int stepIdx = 0; stepIdx < spec.maxSteps && wpIdx < refCells.size(); ++stepIdx) {
        Cell subgoal = refCells[wpIdx];
        const VectorXd& cond = assets.cellCond[world.cellId(subgoal)];

        // single-state history matches the trainer's per-step candidate groups
        std::vector<int> history{world.cellId(cur)};
        VectorXd logits = policyForward(history, cond, params);
        Action action;
        if (cfg.greedy) {
            int best = 0;
            softmax(logits).maxCoeff(&best);
            action = static_cast<Action>(best);
        } else {
            action = sampleCategorical(softmax(logits), rng);
        }
        std::optional<Cell> next = step(world, cur, action);

        ProgressMap progress = ProgressMap::compute(world, subgoal);
        TransitionClass cls = parseTransition(world, cur, next, progress);
        Cell obsCell = cls == TransitionClass::Invalid ? cur : *next;
        StateObservation obs =
            observe(world, obsCell, assets.groundEncoderSeed, assets.groundDim);
        EmbeddingVector zNext{cond};

        EpisodeStepRecord rec;
        rec.stepIndex = stepIdx;
        rec.state = cur;
        rec.action = action;
        rec.nextState = next;
        rec.cls = cls;
        rec.rProg = rewardProgress(cls);
        rec.rGeo = rewardGeo(obs, zNext);
        rec.rTotal = rec.rProg + cfg.betaGeo * rec.rGeo;
        result.steps.push_back(rec);

        if (!next) {
            result.invalidTermination = true;
            break;
        }
        cur = *next;
        result.trajectory.push_back(world.cellCenter(cur));
        while (wpIdx < refCells.size() && refCells[wpIdx] == cur) wpIdx++;
    }
    result.reachedGoal = (cur == spec.goal) && wpIdx >= refCells.size();
    return result;
}

struct EvaluationSummary {
    double successRate{0.0};
    double tsMean{0.0};
    double tsStd{0.0};
    double vcsMean{0.0};
    int episodes{0};
};

// Rolls the policy over every episode and aggregates SR, trajectory
// similarity against the planner reference, and visual consistency.
inline EvaluationSummary evaluatePolicy(const GridWorld& world, const WorldAssets& assets,
                                        const TopoGraph& graph, const RetrievalIndex& index,
                                        const std::vector<EpisodeSpec>& episodes,
                                        const PolicyParams& params,
                                        const EpisodeRunConfig& baseCfg) {
    EvaluationSummary summary;
    std::vector<TrajectoryPair> pairs;
    std::vector<double> tsValues;
    double vcsSum = 0.0;
    int vcsCount = 0;
    for (size_t i = 0; i < episodes.size(); ++i) {
        EpisodeRunConfig cfg = baseCfg;
        cfg.seed = baseCfg.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1));  // per-episode stream
        EpisodeResult r = runEpisode(world, assets, graph, index, episodes[i], params, cfg);
        TrajectoryPair pair;
        pair.generated = r.trajectory;
        pair.reference = r.referencePath;
        pair.goal = world.cellCenter(episodes[i].goal);
        if (pair.generated.empty()) pair.generated.push_back(world.cellCenter(episodes[i].start));
        tsValues.push_back(trajectorySimilarity(pair));
        pairs.push_back(pair);
        vcsSum += visualConsistency(pair.generated, world, assets.canvas,
                                    assets.groundEncoderSeed, assets.satEncoderSeed,
                                    assets.groundDim, assets.condDim, assets.cellPx);
        vcsCount++;
    }
    summary.successRate = successRate(pairs, world);
    double mean = 0.0;
    for (double t : tsValues) mean += t;
    mean /= tsValues.size();
    double var = 0.0;
    for (double t : tsValues) var += (t - mean) * (t - mean);
    summary.tsMean = mean;
    summary.tsStd = std::sqrt(var / tsValues.size());
    summary.vcsMean = vcsCount ? vcsSum / vcsCount : 0.0;
    summary.episodes = static_cast<int>(episodes.size());
    return summary;
}

inline nlohmann::json episodeResultToJson(const EpisodeResult& r, const EpisodeSpec& spec) {
    nlohmann::json traj = nlohmann::json::array();
    for (const auto& p : r.trajectory) traj.push_back({p.x, p.y});
    nlohmann::json ref = nlohmann::json::array();
    for (const auto& p : r.referencePath) ref.push_back({p.x, p.y});
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : r.steps) {
        steps.push_back({{"step", s.stepIndex},
                         {"state", {s.state.row, s.state.col}},
                         {"action", actionName(s.action)},
                         {"class", s.cls == TransitionClass::Optimal      ? "optimal"
                                   : s.cls == TransitionClass::NonOptimal ? "nonoptimal"
                                                                          : "invalid"},
                         {"rProg", s.rProg},
                         {"rGeo", s.rGeo},
                         {"rTotal", s.rTotal}});
    }
    return {{"localizedTileId", r.localizedTileId},
            {"goal", {spec.goal.row, spec.goal.col}},
            {"trajectory", traj},
            {"referencePath", ref},
            {"steps", steps},
            {"reachedGoal", r.reachedGoal},
            {"invalidTermination", r.invalidTermination},
            {"planFailed", r.planFailed}};
}

}  // namespace geoplan
