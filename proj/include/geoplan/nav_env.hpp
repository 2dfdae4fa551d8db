#pragma once

// Deterministic gridworld environments: seeded procedural worlds with a
// connected traversable set, 4-way movement, multi-stop episode sampling,
// and renderable local observations.

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoplan/canvas_graph.hpp"
#include "geoplan/common.hpp"
#include "geoplan/crossview.hpp"
#include "geoplan/encoder.hpp"
#include "geoplan/raster.hpp"

namespace geoplan {

struct Cell {
    int row{0};
    int col{0};
    bool operator==(const Cell& o) const { return row == o.row && col == o.col; }
    bool operator!=(const Cell& o) const { return !(*this == o); }
};

enum class Action { Up = 0, Down = 1, Left = 2, Right = 3, Stay = 4 };
constexpr int kActionCount = 5;
constexpr int kMoveActionCount = 4;  // Stay is a policy token, not a move

inline const char* actionName(Action a) {
    switch (a) {
        case Action::Up: return "up";
        case Action::Down: return "down";
        case Action::Left: return "left";
        case Action::Right: return "right";
        case Action::Stay: return "stay";
    }
    return "?";
}

struct GridWorld {
    int size{0};
    double cellMeters{10.0};
    uint64_t seed{0};
    std::vector<uint8_t> blockedGrid;  // size*size, 1 = blocked

    bool inBounds(const Cell& c) const {
        return c.row >= 0 && c.row < size && c.col >= 0 && c.col < size;
    }
    bool blocked(const Cell& c) const {
        return blockedGrid[static_cast<size_t>(c.row) * size + c.col] != 0;
    }
    bool traversable(const Cell& c) const { return inBounds(c) && !blocked(c); }

    int cellId(const Cell& c) const { return c.row * size + c.col; }
    Cell cellFromId(int id) const { return {id / size, id % size}; }

    Vec2 cellCenter(const Cell& c) const {
        return {(c.col + 0.5) * cellMeters, (c.row + 0.5) * cellMeters};
    }
    Cell cellAt(const Vec2& p) const {
        return {static_cast<int>(std::floor(p.y / cellMeters)),
                static_cast<int>(std::floor(p.x / cellMeters))};
    }

    std::vector<Cell> traversableCells() const {
        std::vector<Cell> out;
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c)
                if (!blocked({r, c})) out.push_back({r, c});
        return out;
    }
};

inline std::optional<Cell> applyAction(const Cell& c, Action a) {
    switch (a) {
        case Action::Up: return Cell{c.row - 1, c.col};
        case Action::Down: return Cell{c.row + 1, c.col};
        case Action::Left: return Cell{c.row, c.col - 1};
        case Action::Right: return Cell{c.row, c.col + 1};
        case Action::Stay: return std::nullopt;
    }
    return std::nullopt;
}

// One grid move; std::nullopt is the invalid-transition outcome, not an error.
inline std::optional<Cell> step(const GridWorld& world, const Cell& cell, Action action) {
    if (!world.traversable(cell))
        fail(GeoplanError::Kind::Parameter, "step: source cell not traversable");
    std::optional<Cell> target = applyAction(cell, action);
    if (!target || !world.traversable(*target)) return std::nullopt;
    return target;
}

// BFS hop distances from `target` over traversable cells (4-connectivity);
// unreachable cells get -1.
inline std::vector<int> bfsDistances(const GridWorld& world, const Cell& target) {
    std::vector<int> dist(static_cast<size_t>(world.size) * world.size, -1);
    if (!world.traversable(target)) return dist;
    std::deque<Cell> queue{target};
    dist[world.cellId(target)] = 0;
    while (!queue.empty()) {
        Cell cur = queue.front();
        queue.pop_front();
        for (Action a : {Action::Up, Action::Down, Action::Left, Action::Right}) {
            std::optional<Cell> next = applyAction(cur, a);
            if (!next || !world.traversable(*next)) continue;
            int& d = dist[world.cellId(*next)];
            if (d < 0) {
                d = dist[world.cellId(cur)] + 1;
                queue.push_back(*next);
            }
        }
    }
    return dist;
}

inline bool isConnected(const GridWorld& world) {
    auto cells = world.traversableCells();
    if (cells.empty()) return false;
    std::vector<int> dist = bfsDistances(world, cells[0]);
    for (const Cell& c : cells)
        if (dist[world.cellId(c)] < 0) return false;
    return true;
}

// Seeded blocked-cell placement, rejection-resampled until the traversable
// set is one connected component.
inline GridWorld generateWorld(int size, double blockDensity, uint64_t seed,
                               double cellMeters = 10.0) {
    if (size < 2) fail(GeoplanError::Kind::Parameter, "generateWorld: size must be >= 2");
    if (blockDensity < 0.0 || blockDensity >= 0.5)
        fail(GeoplanError::Kind::Parameter, "generateWorld: blockDensity in [0, 0.5)");

    RngStream rng(seed, "world-generation");
    for (int attempt = 0; attempt < 1000; ++attempt) {
        GridWorld world;
        world.size = size;
        world.cellMeters = cellMeters;
        world.seed = seed;
        world.blockedGrid.assign(static_cast<size_t>(size) * size, 0);
        for (auto& b : world.blockedGrid)
            b = rng.uniform() < blockDensity ? 1 : 0;
        if (isConnected(world)) return world;
    }
    fail(GeoplanError::Kind::Generation,
         "generateWorld: no connected layout after 1000 resamples");
}

struct EpisodeSpec {
    Cell start;
    std::vector<Cell> stops;  // 1-3 mandatory stops, in visit order
    Cell goal;
    int maxSteps{0};
};

// Shortest-path length through start -> stops... -> goal, by chained BFS.
inline int shortestPathThroughStops(const GridWorld& world, const EpisodeSpec& spec) {
    int total = 0;
    Cell cur = spec.start;
    std::vector<Cell> targets = spec.stops;
    targets.push_back(spec.goal);
    for (const Cell& t : targets) {
        std::vector<int> dist = bfsDistances(world, t);
        int d = dist[world.cellId(cur)];
        if (d < 0) fail(GeoplanError::Kind::Generation, "episode: unreachable stop");
        total += d;
        cur = t;
    }
    return total;
}

inline std::vector<EpisodeSpec> sampleEpisodes(const GridWorld& world, int count,
                                               int stopCount, uint64_t seed) {
    if (stopCount < 1 || stopCount > 3)
        fail(GeoplanError::Kind::Parameter, "sampleEpisodes: stopCount must be 1..3");
    auto cells = world.traversableCells();
    const int needed = stopCount + 2;
    if (static_cast<int>(cells.size()) < needed)
        fail(GeoplanError::Kind::Generation, "sampleEpisodes: not enough traversable cells");

    std::vector<EpisodeSpec> episodes;
    for (int e = 0; e < count; ++e) {
        RngStream rng(seed, "episodes", static_cast<uint64_t>(e));
        // distinct uniform draws: partial Fisher-Yates over the cell list
        std::vector<Cell> pool = cells;
        std::vector<Cell> picks;
        for (int i = 0; i < needed; ++i) {
            int64_t j = rng.uniformInt(i, static_cast<int64_t>(pool.size()) - 1);
            std::swap(pool[i], pool[j]);
            picks.push_back(pool[i]);
        }
        EpisodeSpec spec;
        spec.start = picks[0];
        spec.stops.assign(picks.begin() + 1, picks.begin() + 1 + stopCount);
        spec.goal = picks[needed - 1];
        spec.maxSteps = 4 * shortestPathThroughStops(world, spec);
        episodes.push_back(std::move(spec));
    }
    return episodes;
}

// ---- observations and canvas rendering ----

struct StateObservation {
    Cell cell;
    RasterTile localView;
    EmbeddingVector embedding;
};

// Renders the 3x3 neighborhood (blocked/out-of-bounds = 0, open = 1, agent
// cell = 0.5) and encodes it with the shared patch encoder.
inline StateObservation observe(const GridWorld& world, const Cell& cell,
                                uint64_t encoderSeed, int dim = 16) {
    if (!world.traversable(cell))
        fail(GeoplanError::Kind::Parameter, "observe: cell not traversable");
    RasterTile view = RasterTile::zeros(3, 3, 1);
    view.resolution = world.cellMeters;
    for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
            Cell n{cell.row + dr, cell.col + dc};
            view.at(dr + 1, dc + 1) = world.traversable(n) ? 1.0 : 0.0;
        }
    view.at(1, 1) = 0.5;

    FeatureMap fm = encodeTile(view, 3, dim, encoderSeed);
    StateObservation obs;
    obs.cell = cell;
    obs.localView = view;
    obs.embedding.values = VectorXd(dim);
    for (int d = 0; d < dim; ++d) obs.embedding.values[d] = fm.data[d];
    return obs;
}

// Satellite-style canvas of the whole world. Channels carry smooth position
// ramps plus seeded per-cell texture so every local crop is location
// discriminative, standing in for distinctive real imagery.
inline RasterTile renderCanvas(const GridWorld& world, int cellPx = 3) {
    RasterTile canvas = RasterTile::zeros(world.size * cellPx, world.size * cellPx, 3);
    canvas.resolution = world.cellMeters / cellPx;
    for (int r = 0; r < world.size; ++r)
        for (int c = 0; c < world.size; ++c) {
            bool open = !world.blocked({r, c});
            uint64_t h = world.seed ^ (static_cast<uint64_t>(r) * 73856093u) ^
                         (static_cast<uint64_t>(c) * 19349663u);
            double texture = static_cast<double>(detail::splitmix64(h) >> 11) /
                             static_cast<double>(1ULL << 53);
            double ch0 = (c + 0.5) / world.size;
            double ch1 = (r + 0.5) / world.size;
            double ch2 = open ? 0.3 + 0.7 * texture : 0.0;
            for (int pr = 0; pr < cellPx; ++pr)
                for (int pc = 0; pc < cellPx; ++pc) {
                    canvas.at(r * cellPx + pr, c * cellPx + pc, 0) = ch0;
                    canvas.at(r * cellPx + pr, c * cellPx + pc, 1) = ch1;
                    canvas.at(r * cellPx + pr, c * cellPx + pc, 2) = ch2;
                }
        }
    return canvas;
}

// ---- JSON formats ----

inline nlohmann::json worldToJson(const GridWorld& w) {
    nlohmann::json blocked = nlohmann::json::array();
    for (int r = 0; r < w.size; ++r)
        for (int c = 0; c < w.size; ++c)
            if (w.blocked({r, c})) blocked.push_back({r, c});
    return {{"size", w.size},
            {"cellMeters", w.cellMeters},
            {"blocked", blocked},
            {"seed", w.seed}};
}

inline GridWorld worldFromJson(const nlohmann::json& j) {
    GridWorld w;
    w.size = j.at("size").get<int>();
    w.cellMeters = j.at("cellMeters").get<double>();
    w.seed = j.at("seed").get<uint64_t>();
    w.blockedGrid.assign(static_cast<size_t>(w.size) * w.size, 0);
    for (const auto& b : j.at("blocked"))
        w.blockedGrid[static_cast<size_t>(b.at(0).get<int>()) * w.size +
                      b.at(1).get<int>()] = 1;
    return w;
}

inline nlohmann::json episodesToJson(const std::vector<EpisodeSpec>& episodes) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : episodes) {
        nlohmann::json stops = nlohmann::json::array();
        for (const auto& s : e.stops) stops.push_back({s.row, s.col});
        arr.push_back({{"start", {e.start.row, e.start.col}},
                       {"stops", stops},
                       {"goal", {e.goal.row, e.goal.col}},
                       {"maxSteps", e.maxSteps}});
    }
    return arr;
}

inline std::vector<EpisodeSpec> episodesFromJson(const nlohmann::json& j) {
    std::vector<EpisodeSpec> episodes;
    for (const auto& e : j) {
        EpisodeSpec spec;
        spec.start = {e.at("start").at(0).get<int>(), e.at("start").at(1).get<int>()};
        for (const auto& s : e.at("stops"))
            spec.stops.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
        spec.goal = {e.at("goal").at(0).get<int>(), e.at("goal").at(1).get<int>()};
        spec.maxSteps = e.at("maxSteps").get<int>();
        episodes.push_back(std::move(spec));
    }
    return episodes;
}

// Grid as a topological graph: one node per traversable cell, one edge per
// 4-adjacency, lengths in meters, zero curvature.
inline TopoGraph gridToGraph(const GridWorld& world) {
    TopoGraph g;
    for (int r = 0; r < world.size; ++r)
        for (int c = 0; c < world.size; ++c)
            if (!world.blocked({r, c}))
                g.nodes.push_back({world.cellId({r, c}), world.cellCenter({r, c})});
    for (int r = 0; r < world.size; ++r)
        for (int c = 0; c < world.size; ++c) {
            Cell cur{r, c};
            if (world.blocked(cur)) continue;
            for (Cell n : {Cell{r, c + 1}, Cell{r + 1, c}}) {
                if (!world.traversable(n)) continue;
                TopoEdge e;
                e.id = static_cast<int>(g.edges.size());
                e.a = world.cellId(cur);
                e.b = world.cellId(n);
                e.polyline = {world.cellCenter(cur), world.cellCenter(n)};
                e.length = world.cellMeters;
                e.curvature = 0.0;
                g.edges.push_back(std::move(e));
            }
        }
    return g;
}

}  // namespace geoplan
