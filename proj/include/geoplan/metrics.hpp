#pragma once

// Evaluation metric suite: top-k recall, average precision, hit rate,
// symmetric Hausdorff trajectory similarity, success rate, and visual
// consistency.

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "geoplan/common.hpp"
#include "geoplan/crossview.hpp"
#include "geoplan/nav_env.hpp"
#include "geoplan/planner.hpp"

namespace geoplan {

struct RankedResult {
    int64_t queryId{0};
    std::vector<int64_t> rankedIds;          // distinct, best first
    std::set<int64_t> relevantIds;           // >= 1 truth; supports multi-match
};

inline double topkRecall(const std::vector<RankedResult>& results, int k) {
    if (k < 1) fail(GeoplanError::Kind::Parameter, "topkRecall: k must be >= 1");
    if (results.empty()) fail(GeoplanError::Kind::Parameter, "topkRecall: empty results");
    int hits = 0;
    for (const auto& r : results) {
        int limit = std::min<int>(k, static_cast<int>(r.rankedIds.size()));
        for (int i = 0; i < limit; ++i)
            if (r.relevantIds.count(r.rankedIds[i])) {
                hits++;
                break;
            }
    }
    return static_cast<double>(hits) / results.size();
}

// k for the Top-1% variant
inline int topOnePercentK(int candidateCount) {
    return std::max(1, static_cast<int>(std::ceil(0.01 * candidateCount)));
}

struct AveragePrecisionResult {
    double meanAp{0.0};
    int excludedQueries{0};  // queries without any relevant item
};

// Per-query step-interpolated AP: sum over relevant ranks of (delta recall *
// precision at that rank); mean over queries with at least one relevant item.
inline AveragePrecisionResult averagePrecision(const std::vector<RankedResult>& results) {
    if (results.empty()) fail(GeoplanError::Kind::Parameter, "averagePrecision: empty results");
    AveragePrecisionResult out;
    double sum = 0.0;
    int counted = 0;
    for (const auto& r : results) {
        const int totalRelevant = static_cast<int>(r.relevantIds.size());
        if (totalRelevant == 0) {
            out.excludedQueries++;
            continue;
        }
        double ap = 0.0;
        int relevantSeen = 0;
        for (size_t i = 0; i < r.rankedIds.size(); ++i) {
            if (!r.relevantIds.count(r.rankedIds[i])) continue;
            relevantSeen++;
            double precision = static_cast<double>(relevantSeen) / (i + 1);
            ap += precision / totalRelevant;  // delta recall = 1/totalRelevant
        }
        sum += ap;
        counted++;
    }
    if (counted == 0) fail(GeoplanError::Kind::Parameter, "averagePrecision: no relevant items");
    out.meanAp = sum / counted;
    return out;
}

// Axis-aligned world-frame footprint of a view.
struct Footprint {
    Vec2 minCorner;
    Vec2 maxCorner;

    double area() const {
        return std::max(0.0, maxCorner.x - minCorner.x) *
               std::max(0.0, maxCorner.y - minCorner.y);
    }
};

// intersection area over query area
inline double footprintOverlap(const Footprint& query, const Footprint& tile) {
    double qa = query.area();
    if (qa <= 0) fail(GeoplanError::Kind::Parameter, "footprintOverlap: empty query footprint");
    double ix = std::min(query.maxCorner.x, tile.maxCorner.x) -
                std::max(query.minCorner.x, tile.minCorner.x);
    double iy = std::min(query.maxCorner.y, tile.maxCorner.y) -
                std::max(query.minCorner.y, tile.minCorner.y);
    if (ix <= 0 || iy <= 0) return 0.0;
    return ix * iy / qa;
}

// Hit iff the top-1 retrieval's overlap score reaches the threshold.
inline double hitRate(const std::vector<RankedResult>& results,
                      const std::vector<double>& overlapScores, double threshold) {
    if (results.empty()) fail(GeoplanError::Kind::Parameter, "hitRate: empty results");
    if (overlapScores.size() != results.size())
        fail(GeoplanError::Kind::Parameter, "hitRate: one overlap score per query required");
    int hits = 0;
    for (double s : overlapScores)
        if (s >= threshold) hits++;
    return static_cast<double>(hits) / results.size();
}

struct TrajectoryPair {
    std::vector<Vec2> generated;
    std::vector<Vec2> reference;
    Vec2 goal;
};

namespace detail {

inline double directedHausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    double worst = 0.0;
    for (const Vec2& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec2& q : b) best = std::min(best, distance(p, q));
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace detail

// Symmetric Hausdorff distance over the discrete waypoint sets.
inline double trajectorySimilarity(const TrajectoryPair& pair) {
    if (pair.generated.empty() || pair.reference.empty())
        fail(GeoplanError::Kind::Parameter, "trajectorySimilarity: empty trajectory");
    return std::max(detail::directedHausdorff(pair.generated, pair.reference),
                    detail::directedHausdorff(pair.reference, pair.generated));
}

// Densifies a polyline so the discrete Hausdorff approximates the continuous
// one; interval in meters.
inline std::vector<Vec2> densify(const std::vector<Vec2>& points, double interval) {
    if (interval <= 0) fail(GeoplanError::Kind::Parameter, "densify: interval must be > 0");
    if (points.size() < 2) return points;
    std::vector<Vec2> out{points[0]};
    for (size_t i = 1; i < points.size(); ++i) {
        Vec2 a = points[i - 1], b = points[i];
        double seg = distance(a, b);
        int pieces = std::max(1, static_cast<int>(std::ceil(seg / interval)));
        for (int k = 1; k <= pieces; ++k) {
            double t = static_cast<double>(k) / pieces;
            out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
        }
    }
    return out;
}

// Success: final point within `radius` of the goal AND every trajectory
// point on a traversable cell of the road mask.
inline double successRate(const std::vector<TrajectoryPair>& pairs, const GridWorld& roadMask,
                          double radius = 5.0) {
    if (pairs.empty()) fail(GeoplanError::Kind::Parameter, "successRate: empty episode set");
    int successes = 0;
    for (const auto& p : pairs) {
        if (p.generated.empty()) continue;
        bool onRoad = true;
        for (const Vec2& pt : p.generated)
            if (!roadMask.traversable(roadMask.cellAt(pt))) {
                onRoad = false;
                break;
            }
        if (onRoad && distance(p.generated.back(), p.goal) <= radius) successes++;
    }
    return static_cast<double>(successes) / pairs.size();
}

// Mean cosine between ground-encoded forward views and satellite-encoded
// patches at min(m, length) evenly spaced waypoints.
inline double visualConsistency(const std::vector<Vec2>& trajectory, const GridWorld& world,
                                const RasterTile& canvas, uint64_t groundSeed,
                                uint64_t satSeed, int groundDim, int satDim, int cellPx,
                                int m = 16) {
    if (trajectory.empty())
        fail(GeoplanError::Kind::Parameter, "visualConsistency: empty trajectory");
    const int n = static_cast<int>(trajectory.size());
    const int samples = std::min(m, n);
    double sum = 0.0;
    int used = 0;
    for (int k = 0; k < samples; ++k) {
        int idx = samples == 1 ? 0
                               : static_cast<int>(std::llround(
                                     static_cast<double>(k) * (n - 1) / (samples - 1)));
        Cell cell = world.cellAt(trajectory[idx]);
        if (!world.traversable(cell)) continue;  // off-road points carry no view
        StateObservation obs = observe(world, cell, groundSeed, groundDim);

        const int patchPx = 3 * cellPx;
        RasterTile patch = cropPatch(canvas, world.cellCenter(cell), patchPx);
        FeatureMap fm = encodeTile(patch, patchPx, satDim, satSeed);
        VectorXd z(satDim);
        for (int d = 0; d < satDim; ++d) z[d] = fm.data[d];
        if (obs.embedding.values.norm() <= 0 || z.norm() <= 0)
            fail(GeoplanError::Kind::Degenerate, "visualConsistency: degenerate embedding");
        sum += cosineSim(obs.embedding.values, z);
        used++;
    }
    return used > 0 ? sum / used : 0.0;
}

// cosine between two explicit per-waypoint embedding streams, for encoders
// supplied by the caller
inline double visualConsistencyFromEmbeddings(const std::vector<VectorXd>& groundViews,
                                              const std::vector<VectorXd>& satPatches) {
    if (groundViews.empty() || groundViews.size() != satPatches.size())
        fail(GeoplanError::Kind::Dimension, "visualConsistency: stream size mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < groundViews.size(); ++i)
        sum += cosineSim(groundViews[i], satPatches[i]);
    return sum / groundViews.size();
}

}  // namespace geoplan
