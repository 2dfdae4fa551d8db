#pragma once

// Raster-to-graph extraction: adaptive thresholding of a similarity map,
// topology-preserving thinning, and deterministic junction/edge tracing
// into a world-frame topological graph.

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoplan/common.hpp"
#include "geoplan/encoder.hpp"
#include "geoplan/raster.hpp"

namespace geoplan {

struct PathMask {
    int gridWidth{0};
    int gridHeight{0};
    std::vector<uint8_t> bits;

    static PathMask zeros(int gw, int gh) {
        PathMask m;
        m.gridWidth = gw;
        m.gridHeight = gh;
        m.bits.assign(static_cast<size_t>(gw) * gh, 0);
        return m;
    }

    uint8_t& at(int row, int col) { return bits[static_cast<size_t>(row) * gridWidth + col]; }
    uint8_t at(int row, int col) const { return bits[static_cast<size_t>(row) * gridWidth + col]; }
    bool inBounds(int row, int col) const {
        return row >= 0 && row < gridHeight && col >= 0 && col < gridWidth;
    }
    bool fg(int row, int col) const { return inBounds(row, col) && at(row, col) != 0; }

    bool operator==(const PathMask& o) const {
        return gridWidth == o.gridWidth && gridHeight == o.gridHeight && bits == o.bits;
    }
};

struct TopoNode {
    int id{0};
    Vec2 position;  // world meters
};

struct TopoEdge {
    int id{0};
    int a{0};
    int b{0};
    std::vector<Vec2> polyline;  // world meters, includes both endpoints
    double length{0.0};         // meters
    double curvature{0.0};      // radians per meter
};

struct TopoGraph {
    std::vector<TopoNode> nodes;
    std::vector<TopoEdge> edges;

    const TopoNode* findNode(int id) const {
        for (const auto& n : nodes)
            if (n.id == id) return &n;
        return nullptr;
    }
};

// Per-tile threshold by two-class variance maximization over a 256-bin
// histogram of the similarity values. All-equal input yields an empty mask.
inline PathMask adaptiveThreshold(const std::vector<double>& sim, int gridWidth,
                                  int gridHeight) {
    if (gridWidth <= 0 || gridHeight <= 0 ||
        sim.size() != static_cast<size_t>(gridWidth) * gridHeight)
        fail(GeoplanError::Kind::Parameter, "adaptiveThreshold: empty or mismatched grid");

    double lo = sim[0], hi = sim[0];
    for (double v : sim) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    PathMask mask = PathMask::zeros(gridWidth, gridHeight);
    if (hi <= lo) return mask;  // constant tile, conservative empty mask

    constexpr int kBins = 256;
    std::array<int, kBins> hist{};
    const double binWidth = (hi - lo) / kBins;
    for (double v : sim) {
        int b = static_cast<int>((v - lo) / binWidth);
        hist[std::min(b, kBins - 1)]++;
    }

    const int total = static_cast<int>(sim.size());
    double sumAll = 0.0;
    for (int b = 0; b < kBins; ++b) sumAll += b * static_cast<double>(hist[b]);

    // split k: background bins [0..k], foreground (k..255]
    int bestK = -1;
    double bestVar = -1.0;
    int wB = 0;
    double sumB = 0.0;
    for (int k = 0; k < kBins - 1; ++k) {
        wB += hist[k];
        sumB += k * static_cast<double>(hist[k]);
        int wF = total - wB;
        if (wB == 0 || wF == 0) continue;
        double mB = sumB / wB;
        double mF = (sumAll - sumB) / wF;
        double var = static_cast<double>(wB) * wF * (mB - mF) * (mB - mF);
        if (var > bestVar) {
            bestVar = var;
            bestK = k;
        }
    }
    if (bestK < 0) return mask;  // single occupied bin

    const double threshold = lo + (bestK + 1) * binWidth;
    for (int r = 0; r < gridHeight; ++r)
        for (int c = 0; c < gridWidth; ++c)
            if (sim[static_cast<size_t>(r) * gridWidth + c] >= threshold) mask.at(r, c) = 1;
    return mask;
}

namespace detail {

// 8-neighborhood offsets, clockwise from north.
inline constexpr std::array<std::pair<int, int>, 8> kRing = {{
    {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1},
}};

// A pixel is simple iff deleting it preserves local topology: exactly one
// 8-connected foreground component in the ring, and exactly one 4-connected
// background component touching a 4-neighbor.
inline bool computeSimple(unsigned ringMask) {
    auto adj8 = [](int i, int j) {
        int dr = kRing[i].first - kRing[j].first;
        int dc = kRing[i].second - kRing[j].second;
        return std::max(std::abs(dr), std::abs(dc)) <= 1;
    };
    auto adj4 = [](int i, int j) {
        int dr = kRing[i].first - kRing[j].first;
        int dc = kRing[i].second - kRing[j].second;
        return std::abs(dr) + std::abs(dc) == 1;
    };

    // count 8-components of foreground ring cells
    int fgComponents = 0;
    std::array<int, 8> comp{};
    comp.fill(-1);
    for (int i = 0; i < 8; ++i) {
        if (!((ringMask >> i) & 1u) || comp[i] >= 0) continue;
        comp[i] = fgComponents;
        std::vector<int> stack{i};
        while (!stack.empty()) {
            int cur = stack.back();
            stack.pop_back();
            for (int j = 0; j < 8; ++j)
                if (((ringMask >> j) & 1u) && comp[j] < 0 && adj8(cur, j)) {
                    comp[j] = fgComponents;
                    stack.push_back(j);
                }
        }
        fgComponents++;
    }
    if (fgComponents != 1) return false;

    // count 4-components of background ring cells that touch a 4-neighbor of p
    std::array<int, 8> bgComp{};
    bgComp.fill(-1);
    int bgComponents = 0;
    for (int i = 0; i < 8; ++i) {
        if (((ringMask >> i) & 1u) || bgComp[i] >= 0) continue;
        bgComp[i] = bgComponents;
        std::vector<int> stack{i};
        while (!stack.empty()) {
            int cur = stack.back();
            stack.pop_back();
            for (int j = 0; j < 8; ++j)
                if (!((ringMask >> j) & 1u) && bgComp[j] < 0 && adj4(cur, j)) {
                    bgComp[j] = bgComponents;
                    stack.push_back(j);
                }
        }
        bgComponents++;
    }
    // 4-neighbors of p are ring indices 0 (N), 2 (E), 4 (S), 6 (W)
    bool seen[8] = {};
    int touching = 0;
    for (int i : {0, 2, 4, 6}) {
        if (((ringMask >> i) & 1u)) continue;
        int c = bgComp[i];
        if (c >= 0 && !seen[c]) {
            seen[c] = true;
            touching++;
        }
    }
    return touching == 1;
}

inline bool isSimple(unsigned ringMask) {
    static const std::array<bool, 256> table = [] {
        std::array<bool, 256> t{};
        for (unsigned m = 0; m < 256; ++m) t[m] = computeSimple(m);
        return t;
    }();
    return table[ringMask];
}

inline unsigned ringMaskAt(const PathMask& m, int r, int c) {
    unsigned mask = 0;
    for (int i = 0; i < 8; ++i)
        if (m.fg(r + kRing[i].first, c + kRing[i].second)) mask |= 1u << i;
    return mask;
}

inline int neighborCount(unsigned ringMask) { return __builtin_popcount(ringMask); }

}  // namespace detail

// Iterative directional thinning to a width-1 skeleton. Each iteration runs
// four subpasses (north, west, south, east): candidates are the pixels whose
// border direction matches in a snapshot taken at subpass start, so at most
// one pixel layer peels off per direction per iteration and arms erode
// symmetrically instead of being consumed by one raster sweep. A candidate is
// deleted only if it is still simple and not an endpoint against the current
// mask, which preserves the 8-connectivity of every foreground component.
// A final cleanup pass removes simple pixels of any residual 2x2 block.
inline PathMask skeletonize(const PathMask& input) {
    PathMask m = input;
    constexpr std::pair<int, int> kDirs[4] = {{-1, 0}, {0, -1}, {1, 0}, {0, 1}};
    auto tryDelete = [&m](int r, int c) {
        unsigned ring = detail::ringMaskAt(m, r, c);
        if (detail::neighborCount(ring) <= 1) return false;  // keep endpoints
        if (!detail::isSimple(ring)) return false;
        m.at(r, c) = 0;
        return true;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto [dr, dc] : kDirs) {
            std::vector<std::pair<int, int>> candidates;
            for (int r = 0; r < m.gridHeight; ++r)
                for (int c = 0; c < m.gridWidth; ++c)
                    if (m.at(r, c) && !m.fg(r + dr, c + dc)) candidates.push_back({r, c});
            for (auto [r, c] : candidates)
                if (m.at(r, c) && tryDelete(r, c)) changed = true;
        }
    }
    // residual thick spots: any pixel of a full 2x2 block has >= 3 neighbors,
    // so endpoint protection never applies and simple deletions stay safe
    changed = true;
    while (changed) {
        changed = false;
        for (int r = 0; r + 1 < m.gridHeight; ++r)
            for (int c = 0; c + 1 < m.gridWidth; ++c) {
                if (!(m.at(r, c) && m.at(r, c + 1) && m.at(r + 1, c) && m.at(r + 1, c + 1)))
                    continue;
                for (auto [br, bc] : {std::pair{r, c}, {r, c + 1}, {r + 1, c}, {r + 1, c + 1}})
                    if (tryDelete(br, bc)) {
                        changed = true;
                        break;
                    }
            }
    }
    return m;
}

// Sum of absolute turning angles at interior vertices over total length.
inline double estimateCurvature(const std::vector<Vec2>& polyline) {
    if (polyline.size() < 2)
        fail(GeoplanError::Kind::Degenerate, "estimateCurvature: need at least 2 points");
    double length = 0.0;
    for (size_t i = 1; i < polyline.size(); ++i)
        length += distance(polyline[i - 1], polyline[i]);
    if (length <= 0.0)
        fail(GeoplanError::Kind::Degenerate, "estimateCurvature: zero-length polyline");

    double totalTurn = 0.0;
    std::optional<Vec2> prevDir;
    for (size_t i = 1; i < polyline.size(); ++i) {
        Vec2 seg = polyline[i] - polyline[i - 1];
        double n = seg.norm();
        if (n <= 0.0) continue;  // repeated point, no direction
        Vec2 dir{seg.x / n, seg.y / n};
        if (prevDir) {
            double cosA = std::clamp(prevDir->dot(dir), -1.0, 1.0);
            totalTurn += std::acos(cosA);
        }
        prevDir = dir;
    }
    return totalTurn / length;
}

namespace detail {

inline bool hasTwoByTwoBlock(const PathMask& m) {
    for (int r = 0; r + 1 < m.gridHeight; ++r)
        for (int c = 0; c + 1 < m.gridWidth; ++c)
            if (m.at(r, c) && m.at(r, c + 1) && m.at(r + 1, c) && m.at(r + 1, c + 1))
                return true;
    return false;
}

}  // namespace detail

// Traces the skeleton into junction/endpoint nodes and maximal degree-2
// chains. Adjacent junction pixels (8-degree >= 3) collapse into a single
// node at their centroid: on a width-1 skeleton the pixels flanking a
// crossing also see three or more neighbors, and clustering keeps one node
// per physical junction. Node ids are assigned in raster order; isolated
// cycles are anchored at their lowest pixel index so closed loops stay
// representable.
inline TopoGraph extractGraph(const PathMask& skeleton, const RasterTile& tileMeta) {
    if (detail::hasTwoByTwoBlock(skeleton))
        fail(GeoplanError::Kind::Parameter,
             "extractGraph: skeleton contains a 2x2 block (not width-1)");

    const int gw = skeleton.gridWidth;
    const int gh = skeleton.gridHeight;
    auto pixelIndex = [gw](int r, int c) { return r * gw + c; };
    auto degree = [&](int r, int c) {
        return detail::neighborCount(detail::ringMaskAt(skeleton, r, c));
    };
    // Tokens map 1:1 to pixels of the source raster when the mask grid equals
    // the raster grid; otherwise each token covers a patch and we place it at
    // the patch center.
    const double pxPerToken =
        skeleton.gridWidth > 0 ? static_cast<double>(tileMeta.width) / skeleton.gridWidth : 1.0;
    auto tokenToWorld = [&](int r, int c) -> Vec2 {
        return {tileMeta.origin.x + (c + 0.5) * pxPerToken * tileMeta.resolution,
                tileMeta.origin.y + (r + 0.5) * pxPerToken * tileMeta.resolution};
    };

    TopoGraph graph;
    std::vector<int> nodeIdOf(static_cast<size_t>(gw) * gh, -1);
    for (int r = 0; r < gh; ++r)
        for (int c = 0; c < gw; ++c) {
            if (!skeleton.at(r, c) || nodeIdOf[pixelIndex(r, c)] >= 0) continue;
            int d = degree(r, c);
            if (d >= 3) {
                // flood the 8-connected cluster of junction pixels
                int id = static_cast<int>(graph.nodes.size());
                std::vector<std::pair<int, int>> stack{{r, c}}, cluster;
                nodeIdOf[pixelIndex(r, c)] = id;
                while (!stack.empty()) {
                    auto [cr, cc] = stack.back();
                    stack.pop_back();
                    cluster.push_back({cr, cc});
                    for (const auto& [dr, dc] : detail::kRing) {
                        int tr = cr + dr, tc = cc + dc;
                        if (!skeleton.fg(tr, tc) || nodeIdOf[pixelIndex(tr, tc)] >= 0)
                            continue;
                        if (detail::neighborCount(detail::ringMaskAt(skeleton, tr, tc)) < 3)
                            continue;
                        nodeIdOf[pixelIndex(tr, tc)] = id;
                        stack.push_back({tr, tc});
                    }
                }
                Vec2 centroid{0.0, 0.0};
                for (auto [cr, cc] : cluster) {
                    Vec2 p = tokenToWorld(cr, cc);
                    centroid.x += p.x;
                    centroid.y += p.y;
                }
                centroid.x /= cluster.size();
                centroid.y /= cluster.size();
                graph.nodes.push_back({id, centroid});
            } else if (d == 1 || d == 0) {
                int id = static_cast<int>(graph.nodes.size());
                nodeIdOf[pixelIndex(r, c)] = id;
                graph.nodes.push_back({id, tokenToWorld(r, c)});
            }
        }

    // Trace chains from every node pixel. A traversed directed step (from,to)
    // is marked so each undirected chain is emitted exactly once.
    std::vector<uint8_t> stepUsed(static_cast<size_t>(gw) * gh * 8, 0);
    auto dirIndex = [](int dr, int dc) {
        for (int i = 0; i < 8; ++i)
            if (detail::kRing[i].first == dr && detail::kRing[i].second == dc) return i;
        return -1;
    };
    auto markStep = [&](int r, int c, int nr, int nc) {
        stepUsed[static_cast<size_t>(pixelIndex(r, c)) * 8 + dirIndex(nr - r, nc - c)] = 1;
    };
    auto stepIsUsed = [&](int r, int c, int nr, int nc) {
        return stepUsed[static_cast<size_t>(pixelIndex(r, c)) * 8 + dirIndex(nr - r, nc - c)] != 0;
    };

    auto traceFrom = [&](int r0, int c0, int dirIdx) {
        int pr = r0, pc = c0;
        int nr = r0 + detail::kRing[dirIdx].first;
        int nc = c0 + detail::kRing[dirIdx].second;
        std::vector<Vec2> polyline{tokenToWorld(r0, c0)};
        markStep(pr, pc, nr, nc);
        markStep(nr, nc, pr, pc);
        while (true) {
            polyline.push_back(tokenToWorld(nr, nc));
            if (nodeIdOf[pixelIndex(nr, nc)] >= 0) break;
            // interior chain pixel: exactly two neighbors, continue away from pr
            int xr = -1, xc = -1;
            for (const auto& [dr, dc] : detail::kRing) {
                int tr = nr + dr, tc = nc + dc;
                if (!skeleton.fg(tr, tc)) continue;
                if (tr == pr && tc == pc) continue;
                xr = tr;
                xc = tc;
            }
            if (xr < 0) break;  // dangling chain, cannot happen on valid skeletons
            markStep(nr, nc, xr, xc);
            markStep(xr, xc, nr, nc);
            pr = nr;
            pc = nc;
            nr = xr;
            nc = xc;
        }
        TopoEdge e;
        e.id = static_cast<int>(graph.edges.size());
        e.a = nodeIdOf[pixelIndex(r0, c0)];
        e.b = nodeIdOf[pixelIndex(nr, nc)];
        e.polyline = std::move(polyline);
        // clustered junctions sit at their centroid; anchor the chain there
        e.polyline.front() = graph.nodes[e.a].position;
        e.polyline.back() = graph.nodes[e.b].position;
        for (size_t i = 1; i < e.polyline.size(); ++i)
            e.length += distance(e.polyline[i - 1], e.polyline[i]);
        e.curvature = e.polyline.size() >= 2 && e.length > 0 ? estimateCurvature(e.polyline) : 0.0;
        if (e.length > 0) graph.edges.push_back(std::move(e));
    };

    for (int r = 0; r < gh; ++r)
        for (int c = 0; c < gw; ++c) {
            if (nodeIdOf[pixelIndex(r, c)] < 0 || !skeleton.at(r, c)) continue;
            for (int i = 0; i < 8; ++i) {
                int nr = r + detail::kRing[i].first;
                int nc = c + detail::kRing[i].second;
                if (!skeleton.fg(nr, nc) || stepIsUsed(r, c, nr, nc)) continue;
                // steps between pixels of the same junction cluster are not chains
                if (nodeIdOf[pixelIndex(nr, nc)] == nodeIdOf[pixelIndex(r, c)]) continue;
                traceFrom(r, c, i);
            }
        }

    // isolated cycles: every pixel degree 2 and no node yet; anchor at the
    // lowest pixel index and trace the loop as a self-edge
    for (int r = 0; r < gh; ++r)
        for (int c = 0; c < gw; ++c) {
            if (!skeleton.at(r, c) || nodeIdOf[pixelIndex(r, c)] >= 0) continue;
            bool touched = false;
            for (int i = 0; i < 8 && !touched; ++i) {
                int nr = r + detail::kRing[i].first;
                int nc = c + detail::kRing[i].second;
                if (skeleton.fg(nr, nc) && stepIsUsed(r, c, nr, nc)) touched = true;
            }
            if (touched) continue;  // already part of a traced chain
            int id = static_cast<int>(graph.nodes.size());
            nodeIdOf[pixelIndex(r, c)] = id;
            graph.nodes.push_back({id, tokenToWorld(r, c)});
            for (int i = 0; i < 8; ++i) {
                int nr = r + detail::kRing[i].first;
                int nc = c + detail::kRing[i].second;
                if (skeleton.fg(nr, nc) && !stepIsUsed(r, c, nr, nc)) {
                    traceFrom(r, c, i);
                    break;  // one trace consumes the whole cycle
                }
            }
        }

    return graph;
}

// ---- JSON serialization (coordinates rounded to 1e-6 m) ----

namespace detail {

inline double round6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace detail

inline nlohmann::json graphToJson(const TopoGraph& g) {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : g.nodes)
        j["nodes"].push_back({{"id", n.id},
                              {"x", detail::round6(n.position.x)},
                              {"y", detail::round6(n.position.y)}});
    j["edges"] = nlohmann::json::array();
    for (const auto& e : g.edges) {
        nlohmann::json poly = nlohmann::json::array();
        for (const auto& p : e.polyline)
            poly.push_back({detail::round6(p.x), detail::round6(p.y)});
        j["edges"].push_back({{"id", e.id},
                              {"a", e.a},
                              {"b", e.b},
                              {"polyline", poly},
                              {"length", detail::round6(e.length)},
                              {"curvature", detail::round6(e.curvature)}});
    }
    return j;
}

inline TopoGraph graphFromJson(const nlohmann::json& j) {
    TopoGraph g;
    for (const auto& n : j.at("nodes"))
        g.nodes.push_back({n.at("id").get<int>(),
                           {n.at("x").get<double>(), n.at("y").get<double>()}});
    for (const auto& e : j.at("edges")) {
        TopoEdge edge;
        edge.id = e.at("id").get<int>();
        edge.a = e.at("a").get<int>();
        edge.b = e.at("b").get<int>();
        for (const auto& p : e.at("polyline"))
            edge.polyline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        edge.length = e.at("length").get<double>();
        edge.curvature = e.at("curvature").get<double>();
        g.edges.push_back(std::move(edge));
    }
    return g;
}

}  // namespace geoplan
