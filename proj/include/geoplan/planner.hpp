#pragma once

// Curvature-weighted A* over the topological graph, arc-length waypoint
// downsampling, and canvas patch cropping.

#include <algorithm>
#include <limits>
#include <queue>
#include <set>
#include <unordered_map>
#include <vector>

#include "geoplan/canvas_graph.hpp"
#include "geoplan/common.hpp"
#include "geoplan/raster.hpp"

namespace geoplan {

struct PlanQuery {
    int startNode{0};
    int goalNode{0};
    double alpha{1.0};
    double beta{0.5};
    std::set<int> disabledEdges;  // dynamic priors reduce to an edge-disable set
};

struct WaypointPath {
    std::vector<int> nodes;
    std::vector<Vec2> waypoints;
    double totalCost{0.0};
};

namespace detail {

struct AdjacencyEntry {
    int neighbor;
    int edgeId;
    double cost;
};

// edge cost: alpha * Euclidean(node positions) + beta * curvature
inline std::unordered_map<int, std::vector<AdjacencyEntry>> buildAdjacency(
    const TopoGraph& graph, const PlanQuery& q) {
    std::unordered_map<int, Vec2> pos;
    for (const auto& n : graph.nodes) pos[n.id] = n.position;
    std::unordered_map<int, std::vector<AdjacencyEntry>> adj;
    for (const auto& n : graph.nodes) adj[n.id];
    for (const auto& e : graph.edges) {
        if (q.disabledEdges.count(e.id)) continue;
        double cost = q.alpha * distance(pos.at(e.a), pos.at(e.b)) + q.beta * e.curvature;
        adj[e.a].push_back({e.b, e.id, cost});
        if (e.a != e.b) adj[e.b].push_back({e.a, e.id, cost});
    }
    // deterministic expansion order
    for (auto& [id, list] : adj)
        std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
            if (a.neighbor != b.neighbor) return a.neighbor < b.neighbor;
            return a.edgeId < b.edgeId;
        });
    return adj;
}

}  // namespace detail

// A* with Euclidean-distance heuristic scaled by alpha. The heuristic is
// admissible: beta*kappa >= 0 and alpha*straight-line <= alpha*edge length.
// Priority-queue ties break on lower node id.
inline WaypointPath astar(const TopoGraph& graph, const PlanQuery& q) {
    if (q.alpha < 0 || q.beta < 0)
        fail(GeoplanError::Kind::Parameter, "astar: alpha and beta must be >= 0");
    const TopoNode* start = graph.findNode(q.startNode);
    const TopoNode* goal = graph.findNode(q.goalNode);
    if (!start) fail(GeoplanError::Kind::Lookup, "astar: unknown start node");
    if (!goal) fail(GeoplanError::Kind::Lookup, "astar: unknown goal node");

    auto adj = detail::buildAdjacency(graph, q);
    std::unordered_map<int, Vec2> pos;
    for (const auto& n : graph.nodes) pos[n.id] = n.position;
    auto heuristic = [&](int id) { return q.alpha * distance(pos.at(id), goal->position); };

    struct QueueEntry {
        double f;
        int node;
        bool operator>(const QueueEntry& o) const {
            if (f != o.f) return f > o.f;
            return node > o.node;
        }
    };
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> open;
    std::unordered_map<int, double> gScore;
    std::unordered_map<int, int> parent;
    gScore[q.startNode] = 0.0;
    open.push({heuristic(q.startNode), q.startNode});

    while (!open.empty()) {
        auto [f, node] = open.top();
        open.pop();
        double g = gScore.at(node);
        if (f > g + heuristic(node) + 1e-12) continue;  // stale entry
        if (node == q.goalNode) {
            WaypointPath path;
            path.totalCost = g;
            for (int cur = node;; cur = parent.at(cur)) {
                path.nodes.push_back(cur);
                if (cur == q.startNode) break;
            }
            std::reverse(path.nodes.begin(), path.nodes.end());
            return path;
        }
        for (const auto& entry : adj.at(node)) {
            double tentative = g + entry.cost;
            auto it = gScore.find(entry.neighbor);
            if (it == gScore.end() || tentative < it->second) {
                gScore[entry.neighbor] = tentative;
                parent[entry.neighbor] = node;
                open.push({tentative + heuristic(entry.neighbor), entry.neighbor});
            }
        }
    }
    fail(GeoplanError::Kind::NoPath, "astar: goal unreachable from start");
}

namespace detail {

// Finds the edge joining nodes a and b with the lowest edge id; orients its
// polyline from a to b.
inline std::vector<Vec2> orientedPolyline(const TopoGraph& graph, int a, int b) {
    const TopoEdge* best = nullptr;
    for (const auto& e : graph.edges) {
        if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) {
            if (!best || e.id < best->id) best = &e;
        }
    }
    if (!best) fail(GeoplanError::Kind::Lookup, "downsample: consecutive nodes not joined");
    std::vector<Vec2> poly = best->polyline;
    if (best->a != a) std::reverse(poly.begin(), poly.end());
    return poly;
}

}  // namespace detail

// Concatenates the edge polylines along the node path and emits points every
// `interval` meters of arc length, plus the final endpoint.
inline std::vector<Vec2> downsample(const std::vector<int>& pathNodes,
                                    const TopoGraph& graph, double interval) {
    if (interval <= 0)
        fail(GeoplanError::Kind::Parameter, "downsample: interval must be > 0");
    if (pathNodes.empty())
        fail(GeoplanError::Kind::Parameter, "downsample: empty path");

    std::vector<Vec2> full;
    const TopoNode* startNode = graph.findNode(pathNodes[0]);
    if (!startNode) fail(GeoplanError::Kind::Lookup, "downsample: unknown node");
    full.push_back(startNode->position);
    for (size_t i = 1; i < pathNodes.size(); ++i) {
        std::vector<Vec2> poly = detail::orientedPolyline(graph, pathNodes[i - 1], pathNodes[i]);
        for (size_t k = 1; k < poly.size(); ++k) full.push_back(poly[k]);
    }
    if (full.size() == 1) return {full[0]};

    std::vector<Vec2> waypoints{full[0]};
    double nextArc = interval;
    double arc = 0.0;
    for (size_t i = 1; i < full.size(); ++i) {
        Vec2 a = full[i - 1], b = full[i];
        double seg = distance(a, b);
        while (seg > 0 && nextArc <= arc + seg + 1e-12) {
            double t = (nextArc - arc) / seg;
            waypoints.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
            nextArc += interval;
        }
        arc += seg;
    }
    // always terminate at the endpoint; drop a sampled point that coincides
    Vec2 last = full.back();
    if (!waypoints.empty() && distance(waypoints.back(), last) < 1e-9)
        waypoints.back() = last;
    else
        waypoints.push_back(last);
    return waypoints;
}

// Axis-aligned crop centered at `center` (world meters); out-of-bounds area
// is zero-padded. Output is exactly sizePx x sizePx.
inline RasterTile cropPatch(const RasterTile& canvas, const Vec2& center, int sizePx) {
    if (sizePx <= 0) fail(GeoplanError::Kind::Parameter, "cropPatch: sizePx must be > 0");
    if (!std::isfinite(center.x) || !std::isfinite(center.y))
        fail(GeoplanError::Kind::Parameter, "cropPatch: non-finite center");

    // pixel containing the center
    int cCol = static_cast<int>(std::floor((center.x - canvas.origin.x) / canvas.resolution));
    int cRow = static_cast<int>(std::floor((center.y - canvas.origin.y) / canvas.resolution));
    int r0 = cRow - sizePx / 2;
    int c0 = cCol - sizePx / 2;

    RasterTile out = RasterTile::zeros(sizePx, sizePx, canvas.channels);
    out.resolution = canvas.resolution;
    out.origin = {canvas.origin.x + c0 * canvas.resolution,
                  canvas.origin.y + r0 * canvas.resolution};
    for (int r = 0; r < sizePx; ++r)
        for (int c = 0; c < sizePx; ++c) {
            int sr = r0 + r, sc = c0 + c;
            if (!canvas.inBounds(sr, sc)) continue;
            for (int ch = 0; ch < canvas.channels; ++ch)
                out.at(r, c, ch) = canvas.at(sr, sc, ch);
        }
    return out;
}

}  // namespace geoplan
