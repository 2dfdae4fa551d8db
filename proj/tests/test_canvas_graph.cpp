#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "geoplan/canvas_graph.hpp"
#include "geoplan/encoder.hpp"

using namespace geoplan;

namespace {

RasterTile randomTile(int w, int h, RngStream& rng) {
    RasterTile t = RasterTile::zeros(w, h, 1);
    for (auto& v : t.data) v = rng.uniform();
    return t;
}

// independent per-patch projection oracle
std::vector<double> projectPatchOracle(const RasterTile& tile, int r0, int c0,
                                       int patchSize, int dim, uint64_t seed) {
    int len = patchSize * patchSize * tile.channels;
    std::vector<double> proj = detail::projectionMatrix(seed, len, dim);
    std::vector<double> patch;
    for (int pr = 0; pr < patchSize; ++pr)
        for (int pc = 0; pc < patchSize; ++pc)
            for (int ch = 0; ch < tile.channels; ++ch)
                patch.push_back(tile.at(r0 + pr, c0 + pc, ch));
    std::vector<double> out(dim, 0.0);
    for (int d = 0; d < dim; ++d)
        for (int i = 0; i < len; ++i) out[d] += proj[static_cast<size_t>(d) * len + i] * patch[i];
    double n = l2norm(out);
    if (n > 1e-12)
        for (auto& v : out) v /= n;
    return out;
}

int countComponents8(const PathMask& m) {
    std::vector<int> label(m.bits.size(), -1);
    int components = 0;
    for (int r = 0; r < m.gridHeight; ++r)
        for (int c = 0; c < m.gridWidth; ++c) {
            if (!m.at(r, c) || label[static_cast<size_t>(r) * m.gridWidth + c] >= 0) continue;
            std::vector<std::pair<int, int>> stack{{r, c}};
            label[static_cast<size_t>(r) * m.gridWidth + c] = components;
            while (!stack.empty()) {
                auto [cr, cc] = stack.back();
                stack.pop_back();
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        int nr = cr + dr, nc = cc + dc;
                        if (!m.fg(nr, nc)) continue;
                        int& l = label[static_cast<size_t>(nr) * m.gridWidth + nc];
                        if (l < 0) {
                            l = components;
                            stack.emplace_back(nr, nc);
                        }
                    }
            }
            components++;
        }
    return components;
}

bool hasFatBlock(const PathMask& m) {
    for (int r = 0; r + 1 < m.gridHeight; ++r)
        for (int c = 0; c + 1 < m.gridWidth; ++c)
            if (m.at(r, c) && m.at(r, c + 1) && m.at(r + 1, c) && m.at(r + 1, c + 1))
                return true;
    return false;
}

}  // namespace

TEST_CASE("encodeTile: single patch is unit norm") {
    RngStream rng(7);
    RasterTile t = randomTile(16, 16, rng);
    FeatureMap fm = encodeTile(t, 16, 8, 99);
    REQUIRE(fm.gridWidth == 1);
    REQUIRE(fm.gridHeight == 1);
    REQUIRE(fm.dim == 8);
    double n = 0.0;
    for (double v : fm.data) n += v * v;
    REQUIRE(std::sqrt(n) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("encodeTile: deterministic for identical inputs") {
    RngStream rng(11);
    RasterTile t = randomTile(32, 16, rng);
    FeatureMap a = encodeTile(t, 8, 12, 5);
    FeatureMap b = encodeTile(t, 8, 12, 5);
    REQUIRE(a.data == b.data);
}

TEST_CASE("encodeTile: a changed patch changes only its token") {
    RngStream rng(13);
    RasterTile t1 = randomTile(24, 24, rng);
    RasterTile t2 = t1;
    // perturb one pixel inside patch (1,2) of a 8px grid
    t2.at(10, 18) = std::min(1.0, t2.at(10, 18) + 0.5) - (t2.at(10, 18) > 0.5 ? 0.5 : 0.0);
    FeatureMap a = encodeTile(t1, 8, 6, 3);
    FeatureMap b = encodeTile(t2, 8, 6, 3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            bool same = true;
            for (int d = 0; d < 6; ++d)
                if (a.token(r, c)[d] != b.token(r, c)[d]) same = false;
            if (r == 1 && c == 2)
                REQUIRE_FALSE(same);
            else
                REQUIRE(same);
        }
    // and the changed token matches the direct projection oracle
    std::vector<double> expect = projectPatchOracle(t2, 8, 16, 8, 6, 3);
    for (int d = 0; d < 6; ++d)
        REQUIRE(b.token(1, 2)[d] == Catch::Approx(expect[d]).margin(1e-12));
}

TEST_CASE("encodeTile: non-divisible patch size is an error") {
    RasterTile t = RasterTile::zeros(10, 10, 1);
    REQUIRE_THROWS_AS(encodeTile(t, 3, 4, 0), GeoplanError);
}

TEST_CASE("similarityMap: exact prototype copy scores 1, orthogonal scores 0") {
    FeatureMap fm;
    fm.gridWidth = 2;
    fm.gridHeight = 1;
    fm.dim = 3;
    fm.data = {1, 0, 0, 0, 0, 1};
    PrototypeSet protos;
    protos.prototypes = {{1, 0, 0}, {0, 1, 0}};
    protos.labels = {"a", "b"};
    auto sim = similarityMap(fm, protos);
    REQUIRE(sim[0] == Catch::Approx(1.0));
    REQUIRE(sim[1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("similarityMap matches brute-force max-cosine and stays in [-1,1]") {
    RngStream rng(21);
    FeatureMap fm;
    fm.gridWidth = 4;
    fm.gridHeight = 4;
    fm.dim = 5;
    fm.data.resize(4 * 4 * 5);
    for (auto& v : fm.data) v = rng.normal();
    for (int i = 0; i < 16; ++i) detail::normalizeOrZero(fm.data.data() + i * 5, 5);

    PrototypeSet protos;
    for (int p = 0; p < 3; ++p) {
        std::vector<double> v(5);
        for (auto& x : v) x = rng.normal();
        double n = l2norm(v);
        for (auto& x : v) x /= n;
        protos.prototypes.push_back(v);
        protos.labels.push_back("p");
    }
    auto sim = similarityMap(fm, protos);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            double best = -1.0;
            for (const auto& p : protos.prototypes) {
                double dot = 0.0;
                for (int d = 0; d < 5; ++d) dot += fm.token(r, c)[d] * p[d];
                best = std::max(best, dot);
            }
            double got = sim[static_cast<size_t>(r) * 4 + c];
            REQUIRE(got == Catch::Approx(best).margin(1e-12));
            REQUIRE(got >= -1.0 - 1e-12);
            REQUIRE(got <= 1.0 + 1e-12);
        }
}

TEST_CASE("similarityMap: dimension mismatch is an error") {
    FeatureMap fm;
    fm.gridWidth = fm.gridHeight = 1;
    fm.dim = 3;
    fm.data = {1, 0, 0};
    PrototypeSet protos;
    protos.prototypes = {{1, 0}};
    protos.labels = {"x"};
    REQUIRE_THROWS_AS(similarityMap(fm, protos), GeoplanError);
}

namespace {

// exhaustive two-class variance maximization over the same 256-bin histogram
PathMask thresholdOracle(const std::vector<double>& sim, int gw, int gh) {
    double lo = sim[0], hi = sim[0];
    for (double v : sim) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    PathMask mask = PathMask::zeros(gw, gh);
    if (hi <= lo) return mask;
    constexpr int kBins = 256;
    std::vector<int> hist(kBins, 0);
    for (double v : sim)
        hist[std::min(static_cast<int>((v - lo) / (hi - lo) * kBins), kBins - 1)]++;
    double bestVar = -1;
    int bestK = -1;
    for (int k = 0; k < kBins - 1; ++k) {
        double wB = 0, sB = 0, wF = 0, sF = 0;
        for (int b = 0; b <= k; ++b) {
            wB += hist[b];
            sB += b * static_cast<double>(hist[b]);
        }
        for (int b = k + 1; b < kBins; ++b) {
            wF += hist[b];
            sF += b * static_cast<double>(hist[b]);
        }
        if (wB == 0 || wF == 0) continue;
        double var = wB * wF * std::pow(sB / wB - sF / wF, 2.0);
        if (var > bestVar) {
            bestVar = var;
            bestK = k;
        }
    }
    if (bestK < 0) return mask;
    double threshold = lo + (bestK + 1) * (hi - lo) / kBins;
    for (int i = 0; i < gw * gh; ++i)
        if (sim[i] >= threshold) mask.bits[i] = 1;
    return mask;
}

}  // namespace

TEST_CASE("adaptiveThreshold: bimodal grid keeps exactly the high mode") {
    std::vector<double> sim;
    for (int i = 0; i < 8; ++i) sim.push_back(0.1);
    for (int i = 0; i < 8; ++i) sim.push_back(0.9);
    PathMask mask = adaptiveThreshold(sim, 4, 4);
    PathMask oracle = thresholdOracle(sim, 4, 4);
    REQUIRE(mask == oracle);
    for (int i = 0; i < 16; ++i) REQUIRE(mask.bits[i] == (sim[i] > 0.5 ? 1 : 0));
}

TEST_CASE("adaptiveThreshold: constant grid gives empty mask") {
    std::vector<double> sim(9, 0.42);
    PathMask mask = adaptiveThreshold(sim, 3, 3);
    for (auto b : mask.bits) REQUIRE(b == 0);
}

TEST_CASE("adaptiveThreshold: single outlier is isolated") {
    std::vector<double> sim(25, 0.05);
    sim[12] = 0.95;
    PathMask mask = adaptiveThreshold(sim, 5, 5);
    REQUIRE(mask == thresholdOracle(sim, 5, 5));
    for (int i = 0; i < 25; ++i) REQUIRE(mask.bits[i] == (i == 12 ? 1 : 0));
}

TEST_CASE("adaptiveThreshold: random grids match the exhaustive oracle") {
    RngStream rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> sim(64);
        for (auto& v : sim) v = rng.uniform() * 2.0 - 1.0;
        REQUIRE(adaptiveThreshold(sim, 8, 8) == thresholdOracle(sim, 8, 8));
    }
}

TEST_CASE("skeletonize: 3px ribbon thins to a width-1 line, extent kept") {
    PathMask m = PathMask::zeros(24, 7);
    for (int r = 2; r <= 4; ++r)
        for (int c = 1; c <= 20; ++c) m.at(r, c) = 1;
    PathMask s = skeletonize(m);
    REQUIRE_FALSE(hasFatBlock(s));
    REQUIRE(countComponents8(s) == 1);
    // horizontal extent preserved up to one pixel of end erosion
    int minC = 99, maxC = -1;
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 24; ++c)
            if (s.at(r, c)) {
                minC = std::min(minC, c);
                maxC = std::max(maxC, c);
            }
    REQUIRE(minC <= 2);
    REQUIRE(maxC >= 19);
}

TEST_CASE("skeletonize: empty and single-pixel masks are fixpoints") {
    PathMask empty = PathMask::zeros(5, 5);
    REQUIRE(skeletonize(empty) == empty);
    PathMask dot = PathMask::zeros(5, 5);
    dot.at(2, 2) = 1;
    REQUIRE(skeletonize(dot) == dot);
}

TEST_CASE("skeletonize: idempotent and component preserving on random masks") {
    RngStream rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        PathMask m = PathMask::zeros(16, 16);
        for (auto& b : m.bits) b = rng.uniform() < 0.45 ? 1 : 0;
        PathMask s = skeletonize(m);
        REQUIRE(skeletonize(s) == s);
        REQUIRE(countComponents8(s) == countComponents8(m));
        // Any surviving 2x2 block must be irreducible: no pixel in it is
        // deletable without changing topology (an X-crossing of diagonals is
        // the canonical case; its thick center cannot thin to one pixel).
        for (int r = 0; r + 1 < s.gridHeight; ++r)
            for (int c = 0; c + 1 < s.gridWidth; ++c) {
                if (!(s.at(r, c) && s.at(r, c + 1) && s.at(r + 1, c) && s.at(r + 1, c + 1)))
                    continue;
                for (auto [br, bc] :
                     {std::pair{r, c}, {r, c + 1}, {r + 1, c}, {r + 1, c + 1}})
                    REQUIRE_FALSE(
                        geoplan::detail::isSimple(geoplan::detail::ringMaskAt(s, br, bc)));
            }
    }
}

TEST_CASE("extractGraph: straight 10px line") {
    PathMask m = PathMask::zeros(12, 3);
    for (int c = 1; c <= 10; ++c) m.at(1, c) = 1;
    RasterTile meta = RasterTile::zeros(12, 3, 1);
    meta.resolution = 2.0;
    TopoGraph g = extractGraph(m, meta);
    REQUIRE(g.nodes.size() == 2);
    REQUIRE(g.edges.size() == 1);
    REQUIRE(g.edges[0].length == Catch::Approx(9 * 2.0));
    REQUIRE(g.edges[0].polyline.front() == g.findNode(g.edges[0].a)->position);
    REQUIRE(g.edges[0].polyline.back() == g.findNode(g.edges[0].b)->position);
}

TEST_CASE("extractGraph: plus shape has 1 junction, 4 endpoints, 4 edges") {
    PathMask m = PathMask::zeros(11, 11);
    for (int c = 0; c < 11; ++c) m.at(5, c) = 1;
    for (int r = 0; r < 11; ++r) m.at(r, 5) = 1;
    RasterTile meta = RasterTile::zeros(11, 11, 1);
    TopoGraph g = extractGraph(m, meta);
    REQUIRE(g.nodes.size() == 5);
    REQUIRE(g.edges.size() == 4);
    // count node degrees by edge incidence: the junction has degree 4
    std::vector<int> degree(g.nodes.size(), 0);
    for (const auto& e : g.edges) {
        degree[e.a]++;
        degree[e.b]++;
    }
    int junctions = 0, endpoints = 0;
    for (int d : degree) {
        if (d == 4) junctions++;
        if (d == 1) endpoints++;
    }
    REQUIRE(junctions == 1);
    REQUIRE(endpoints == 4);
}

TEST_CASE("extractGraph: two disjoint lines give 4 nodes and 2 edges") {
    PathMask m = PathMask::zeros(10, 6);
    for (int c = 0; c < 5; ++c) m.at(1, c) = 1;
    for (int c = 3; c < 9; ++c) m.at(4, c) = 1;
    RasterTile meta = RasterTile::zeros(10, 6, 1);
    TopoGraph g = extractGraph(m, meta);
    REQUIRE(g.nodes.size() == 4);
    REQUIRE(g.edges.size() == 2);
}

TEST_CASE("extractGraph: 2x2 block violates the precondition") {
    PathMask m = PathMask::zeros(4, 4);
    m.at(1, 1) = m.at(1, 2) = m.at(2, 1) = m.at(2, 2) = 1;
    RasterTile meta = RasterTile::zeros(4, 4, 1);
    REQUIRE_THROWS_AS(extractGraph(m, meta), GeoplanError);
}

TEST_CASE("extractGraph: isolated cycle is anchored and survives") {
    // diamond loop, all pixels degree 2
    PathMask m = PathMask::zeros(7, 7);
    m.at(1, 3) = m.at(2, 2) = m.at(2, 4) = m.at(3, 1) = m.at(3, 5) = 1;
    m.at(4, 2) = m.at(4, 4) = m.at(5, 3) = 1;
    RasterTile meta = RasterTile::zeros(7, 7, 1);
    TopoGraph g = extractGraph(m, meta);
    REQUIRE(g.nodes.size() == 1);
    REQUIRE(g.edges.size() == 1);
    REQUIRE(g.edges[0].a == g.edges[0].b);
    REQUIRE(g.edges[0].polyline.size() == 9);  // closed loop back to the anchor
}

TEST_CASE("extractGraph: node degrees match skeleton neighbor counts") {
    RngStream rng(57);
    for (int trial = 0; trial < 30; ++trial) {
        PathMask raw = PathMask::zeros(14, 14);
        for (auto& b : raw.bits) b = rng.uniform() < 0.35 ? 1 : 0;
        PathMask s = skeletonize(raw);
        RasterTile meta = RasterTile::zeros(14, 14, 1);
        TopoGraph g = extractGraph(s, meta);
        // sum of edge endpoint incidences equals sum of node degrees
        size_t incidences = 0;
        for (const auto& e : g.edges) incidences += 2;
        size_t degreeSum = 0;
        for (const auto& n : g.nodes) {
            for (const auto& e : g.edges) {
                if (e.a == n.id) degreeSum++;
                if (e.b == n.id) degreeSum++;
            }
        }
        REQUIRE(degreeSum == incidences);
    }
}

TEST_CASE("estimateCurvature: collinear polyline has zero curvature") {
    REQUIRE(estimateCurvature({{0, 0}, {1, 0}, {2, 0}}) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("estimateCurvature: right angle of unit segments") {
    double k = estimateCurvature({{0, 0}, {1, 0}, {1, 1}});
    REQUIRE(k == Catch::Approx(M_PI / 2.0 / 2.0).margin(1e-12));
}

TEST_CASE("estimateCurvature: unit semicircle approaches 1 rad/m") {
    std::vector<Vec2> pts;
    for (int i = 0; i < 64; ++i) {
        double a = M_PI * i / 63.0;
        pts.push_back({std::cos(a), std::sin(a)});
    }
    double k = estimateCurvature(pts);
    REQUIRE(k == Catch::Approx(1.0).epsilon(0.05));
}

TEST_CASE("estimateCurvature: rigid motion invariance") {
    RngStream rng(71);
    std::vector<Vec2> pts;
    for (int i = 0; i < 12; ++i) pts.push_back({rng.uniform() * 10, rng.uniform() * 10});
    double base = estimateCurvature(pts);
    double theta = 0.83;
    std::vector<Vec2> moved;
    for (const auto& p : pts)
        moved.push_back({p.x * std::cos(theta) - p.y * std::sin(theta) + 5.5,
                         p.x * std::sin(theta) + p.y * std::cos(theta) - 2.25});
    REQUIRE(estimateCurvature(moved) == Catch::Approx(base).margin(1e-9));
}

TEST_CASE("estimateCurvature: degenerate inputs are errors") {
    REQUIRE_THROWS_AS(estimateCurvature({{1, 1}}), GeoplanError);
    REQUIRE_THROWS_AS(estimateCurvature({{1, 1}, {1, 1}}), GeoplanError);
}

TEST_CASE("full canvas pipeline is deterministic") {
    // render a cross road, run the full chain twice, expect identical JSON
    auto runOnce = [] {
        RasterTile tile = RasterTile::zeros(64, 64, 1);
        for (int c = 0; c < 64; ++c)
            for (int p = 0; p < 4; ++p) tile.at(28 + p, c) = 1.0;
        for (int r = 0; r < 64; ++r)
            for (int p = 0; p < 4; ++p) tile.at(r, 28 + p) = 1.0;
        PrototypeSet protos = buildPrototypes(4, 16, 77);
        FeatureMap fm = encodeTile(tile, 4, 16, 77);
        PathMask mask = adaptiveThreshold(similarityMap(fm, protos), fm.gridWidth, fm.gridHeight);
        TopoGraph g = extractGraph(skeletonize(mask), tile);
        return graphToJson(g).dump();
    };
    REQUIRE(runOnce() == runOnce());
}
