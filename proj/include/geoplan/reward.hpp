#pragma once

// Geo-consistent rewards: exact transition parsing against a BFS progress
// map, progress and alignment terms, and group advantage normalization.

#include <optional>
#include <vector>

#include "geoplan/common.hpp"
#include "geoplan/crossview.hpp"
#include "geoplan/nav_env.hpp"

namespace geoplan {

enum class TransitionClass { Optimal, NonOptimal, Invalid };

struct ProgressMap {
    std::vector<int> distances;  // BFS hops to the subgoal, -1 unreachable
    Cell subgoal;

    static ProgressMap compute(const GridWorld& world, const Cell& subgoal) {
        return {bfsDistances(world, subgoal), subgoal};
    }
};

// Exact decoding of the transition class: Invalid for non-adjacent or
// non-traversable targets, Optimal when the BFS distance drops by one,
// NonOptimal otherwise.
inline TransitionClass parseTransition(const GridWorld& world, const Cell& from,
                                       const std::optional<Cell>& to,
                                       const ProgressMap& progress) {
    if (!world.traversable(from))
        fail(GeoplanError::Kind::Parameter, "parseTransition: source not traversable");
    if (!to || !world.traversable(*to)) return TransitionClass::Invalid;
    int manhattan = std::abs(to->row - from.row) + std::abs(to->col - from.col);
    if (manhattan != 1) return TransitionClass::Invalid;
    int dFrom = progress.distances[world.cellId(from)];
    int dTo = progress.distances[world.cellId(*to)];
    if (dTo >= 0 && dFrom >= 0 && dTo == dFrom - 1) return TransitionClass::Optimal;
    return TransitionClass::NonOptimal;
}

constexpr double kAlphaOptimal = 1.0;
constexpr double kAlphaNonOptimal = 0.0;
constexpr double kAlphaInvalid = -5.0;

inline double rewardProgress(TransitionClass cls) {
    switch (cls) {
        case TransitionClass::Optimal: return kAlphaOptimal;
        case TransitionClass::NonOptimal: return kAlphaNonOptimal;
        case TransitionClass::Invalid: return kAlphaInvalid;
    }
    return 0.0;
}

// Cosine between the ground-encoded predicted observation and the next
// waypoint's satellite embedding.
inline double rewardGeo(const StateObservation& predictedObs, const EmbeddingVector& zNext) {
    if (predictedObs.embedding.values.norm() <= 0 || zNext.values.norm() <= 0)
        fail(GeoplanError::Kind::Degenerate, "rewardGeo: zero embedding");
    return cosineSim(predictedObs.embedding.values, zNext.values);
}

struct RewardBundle {
    std::vector<TransitionClass> classes;
    std::vector<double> rProg;
    std::vector<double> rGeo;
    std::vector<double> rTotal;
    std::vector<double> advantage;
};

// (r - mean) / population std; a degenerate group (std ~ 0) maps to all-zero
// advantages, giving no update signal.
inline std::vector<double> groupAdvantage(const std::vector<double>& rTotals) {
    const int g = static_cast<int>(rTotals.size());
    if (g < 2) fail(GeoplanError::Kind::Parameter, "groupAdvantage: need G >= 2");
    double mean = 0.0;
    for (double r : rTotals) mean += r;
    mean /= g;
    double var = 0.0;
    for (double r : rTotals) var += (r - mean) * (r - mean);
    double std = std::sqrt(var / g);
    std::vector<double> adv(g, 0.0);
    if (std < 1e-12) return adv;
    for (int i = 0; i < g; ++i) adv[i] = (rTotals[i] - mean) / std;
    return adv;
}

// Scores one candidate group. For invalid candidates R_geo is computed at
// the last valid state so every candidate carries a complete reward pair.
inline RewardBundle scoreGroup(const GridWorld& world, const Cell& from,
                               const std::vector<std::optional<Cell>>& candidates,
                               const ProgressMap& progress, const EmbeddingVector& zNext,
                               uint64_t groundEncoderSeed, int groundDim,
                               double betaGeo = 0.5) {
    RewardBundle bundle;
    for (const auto& cand : candidates) {
        TransitionClass cls = parseTransition(world, from, cand, progress);
        const Cell obsCell = cls == TransitionClass::Invalid ? from : *cand;
        StateObservation obs = observe(world, obsCell, groundEncoderSeed, groundDim);
        double rp = rewardProgress(cls);
        double rg = rewardGeo(obs, zNext);
        bundle.classes.push_back(cls);
        bundle.rProg.push_back(rp);
        bundle.rGeo.push_back(rg);
        bundle.rTotal.push_back(rp + betaGeo * rg);
    }
    bundle.advantage = groupAdvantage(bundle.rTotal);
    return bundle;
}

}  // namespace geoplan
