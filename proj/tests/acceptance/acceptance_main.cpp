// Acceptance suite: eight end-to-end criteria, one pass/fail line each.
//
// A1 gradient integrity        A5 multi-stop planning success
// A2 retrieval on paired views A6 alignment-reward ablation
// A3 planner optimality        A7 metric oracles
// A4 raster-to-graph pipeline  A8 CLI determinism (argv[1] = binary path)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "geoplan/canvas_graph.hpp"
#include "geoplan/crossview.hpp"
#include "geoplan/encoder.hpp"
#include "geoplan/episode_runner.hpp"
#include "geoplan/foresight.hpp"
#include "geoplan/grpo.hpp"
#include "geoplan/metrics.hpp"
#include "geoplan/nav_env.hpp"
#include "geoplan/planner.hpp"
#include "geoplan/raster.hpp"
#include "geoplan/reward.hpp"

using namespace geoplan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass{false};
    std::string detail;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// scaled relative error: |a - n| / max(1, |n|)
double relErr(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

// ---------------- A1: gradient integrity ----------------

Outcome runA1() {
    const double h = 1e-6;
    const double tol = 1e-4;
    double worst = 0.0;

    // InfoNCE, both denominator variants
    for (int inst = 0; inst < 20; ++inst) {
        RngStream rng(100 + inst, "a1-infonce");
        AlignBatch batch;
        batch.intraViewDenominator = inst % 2 == 1;
        const int n = 4, dim = 6;
        for (int i = 0; i < n; ++i) {
            VectorXd g(dim), s(dim);
            for (int d = 0; d < dim; ++d) {
                g(d) = rng.normal();
                s(d) = rng.normal();
            }
            batch.ground.push_back(g);
            batch.satellite.push_back(s);
        }
        InfoNceGradients grads = infoNceGrad(batch);
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < dim; ++d)
                for (int side = 0; side < 2; ++side) {
                    VectorXd& v = side == 0 ? batch.ground[i] : batch.satellite[i];
                    double saved = v(d);
                    v(d) = saved + h;
                    double up = infoNceLoss(batch);
                    v(d) = saved - h;
                    double dn = infoNceLoss(batch);
                    v(d) = saved;
                    double fd = (up - dn) / (2 * h);
                    double an = side == 0 ? grads.dGround[i](d) : grads.dSatellite[i](d);
                    worst = std::max(worst, relErr(an, fd));
                }
    }
    if (worst >= tol) return {false, "InfoNCE grad rel err " + std::to_string(worst)};

    // imitation NLL through the policy recurrence
    for (int inst = 0; inst < 20; ++inst) {
        GridWorld world = generateWorld(5, 0.1, 300 + inst);
        RngStream rng(400 + inst, "a1-imitation");
        const int condDim = 6;
        std::vector<VectorXd> cond(25, VectorXd::Zero(condDim));
        for (auto& c : cond)
            for (int d = 0; d < condDim; ++d) c(d) = rng.normal();
        PolicyParams params = PolicyParams::init(25, 8, condDim, rng);
        ImitationBuildConfig cfg;
        cfg.walks = 4;
        cfg.walkLength = 4;
        cfg.seed = 500 + inst;
        ImitationCorpus corpus = imitationBuild(world, cond, cfg);
        if (corpus.samples.empty()) continue;
        PolicyGrads grads = PolicyGrads::zeroLike(params);
        imitationLoss(corpus, params, &grads);
        MatrixXd* mats[] = {&params.stateEmbed, &params.condProj, &params.historyMix,
                            &params.outputHead};
        const MatrixXd* gmats[] = {&grads.stateEmbed, &grads.condProj, &grads.historyMix,
                                   &grads.outputHead};
        for (int probe = 0; probe < 12; ++probe) {
            int m = static_cast<int>(rng.uniformInt(0, 3));
            int r = static_cast<int>(rng.uniformInt(0, mats[m]->rows() - 1));
            int c = static_cast<int>(rng.uniformInt(0, mats[m]->cols() - 1));
            double saved = (*mats[m])(r, c);
            (*mats[m])(r, c) = saved + h;
            double up = imitationLoss(corpus, params);
            (*mats[m])(r, c) = saved - h;
            double dn = imitationLoss(corpus, params);
            (*mats[m])(r, c) = saved;
            worst = std::max(worst, relErr((*gmats[m])(r, c), (up - dn) / (2 * h)));
        }
    }
    if (worst >= tol) return {false, "imitation grad rel err " + std::to_string(worst)};

    // GRPO clipped surrogate, away from the clip kink
    GrpoConfig cfg;
    for (int inst = 0; inst < 20; ++inst) {
        RngStream rng(700 + inst, "a1-grpo");
        const int g = 8;
        std::vector<double> oldLp(g), newLp(g), adv(g);
        for (int k = 0; k < g; ++k) {
            oldLp[k] = -0.5 - 2.5 * rng.uniform();
            newLp[k] = oldLp[k] + 0.3 * (2 * rng.uniform() - 1);
            adv[k] = rng.normal();
        }
        double klEst = rng.uniform();
        std::vector<double> dNew;
        grpoObjective(oldLp, newLp, adv, klEst, cfg, &dNew);
        for (int k = 0; k < g; ++k) {
            double rho = std::exp(newLp[k] - oldLp[k]);
            if (std::abs(rho - (1 - cfg.clip)) < 1e-3 || std::abs(rho - (1 + cfg.clip)) < 1e-3)
                continue;  // kink: FD undefined
            double saved = newLp[k];
            newLp[k] = saved + h;
            double up = grpoObjective(oldLp, newLp, adv, klEst, cfg);
            newLp[k] = saved - h;
            double dn = grpoObjective(oldLp, newLp, adv, klEst, cfg);
            newLp[k] = saved;
            worst = std::max(worst, relErr(dNew[k], (up - dn) / (2 * h)));
        }
    }
    if (worst >= tol) return {false, "grpo grad rel err " + std::to_string(worst)};
    return {true, "max rel err " + std::to_string(worst)};
}

// ---------------- A2: retrieval on synthetic paired views ----------------

Outcome runA2() {
    const int samples = 1000, stages = 4, tokenLen = 16, hidden = 32, dim = 16;
    const double sigma = 0.1;
    const uint64_t seed = 2026;
    RngStream rng(seed, "paired-views");
    PairedTokenSet data;
    for (int i = 0; i < samples; ++i) {
        std::vector<VectorXd> ground, sat;
        for (int s = 0; s < stages; ++s) {
            VectorXd shared(tokenLen);
            for (int d = 0; d < tokenLen; ++d) shared(d) = rng.normal();
            VectorXd g = shared, z = shared;
            for (int d = 0; d < tokenLen; ++d) {
                g(d) += rng.normal(0.0, sigma);
                z(d) += rng.normal(0.0, sigma);
            }
            ground.push_back(g);
            sat.push_back(z);
        }
        data.groundTokens.push_back(std::move(ground));
        data.satTokens.push_back(std::move(sat));
    }

    RngStream initRng(seed, "align-init");
    MixModuleParams gp = MixModuleParams::init(stages, tokenLen, hidden, dim, initRng);
    MixModuleParams sp = MixModuleParams::init(stages, tokenLen, hidden, dim, initRng);
    RngStream batchRng(seed, "align-batches");
    const int holdoutStart = 800;
    for (int s = 0; s < 2000; ++s) {
        std::vector<int> batch;
        for (int b = 0; b < 32; ++b)
            batch.push_back(static_cast<int>(batchRng.uniformInt(0, holdoutStart - 1)));
        alignTrainStep(data, batch, gp, sp, 0.05, 0.07);
    }

    RetrievalIndex index;
    for (int i = holdoutStart; i < samples; ++i) {
        RetrievalEntry e;
        e.tileId = i;
        e.embedding = mixForward(data.satTokens[i], sp);
        index.entries.push_back(std::move(e));
    }
    int hit1 = 0, hit5 = 0;
    for (int i = holdoutStart; i < samples; ++i) {
        RetrievalResult r = retrieve(mixForward(data.groundTokens[i], gp), index, 5);
        if (r.rankedIds[0] == i) hit1++;
        for (int64_t id : r.rankedIds)
            if (id == i) {
                hit5++;
                break;
            }
    }
    double top1 = hit1 / 200.0, top5 = hit5 / 200.0;
    std::ostringstream det;
    det << "top1=" << top1 << " top5=" << top5;
    return {top1 >= 0.95 && top5 >= 0.99, det.str()};
}

// ---------------- A3: planner optimality ----------------

double dijkstraCost(const TopoGraph& g, const PlanQuery& q) {
    std::map<int, std::vector<std::pair<int, double>>> adj;
    std::map<int, Vec2> pos;
    for (const auto& n : g.nodes) pos[n.id] = n.position;
    for (const auto& e : g.edges) {
        if (q.disabledEdges.count(e.id)) continue;
        double c = q.alpha * distance(pos.at(e.a), pos.at(e.b)) + q.beta * e.curvature;
        adj[e.a].push_back({e.b, c});
        if (e.a != e.b) adj[e.b].push_back({e.a, c});
    }
    std::map<int, double> dist;
    dist[q.startNode] = 0.0;
    std::set<std::pair<double, int>> open{{0.0, q.startNode}};
    while (!open.empty()) {
        auto [d, u] = *open.begin();
        open.erase(open.begin());
        if (u == q.goalNode) return d;
        for (auto [v, c] : adj[u]) {
            auto it = dist.find(v);
            if (it == dist.end() || d + c < it->second) {
                if (it != dist.end()) open.erase({it->second, v});
                dist[v] = d + c;
                open.insert({d + c, v});
            }
        }
    }
    return std::numeric_limits<double>::infinity();
}

TopoGraph randomConnectedGraph(RngStream& rng, int n) {
    TopoGraph g;
    for (int i = 0; i < n; ++i)
        g.nodes.push_back({i, {100.0 * rng.uniform(), 100.0 * rng.uniform()}});
    int edgeId = 0;
    for (int i = 1; i < n; ++i) {
        TopoEdge e;
        e.id = edgeId++;
        e.a = static_cast<int>(rng.uniformInt(0, i - 1));
        e.b = i;
        e.curvature = 2.0 * rng.uniform();
        e.polyline = {g.nodes[e.a].position, g.nodes[e.b].position};
        e.length = distance(e.polyline[0], e.polyline[1]);
        g.edges.push_back(e);
    }
    for (int x = 0; x < n; ++x) {
        TopoEdge e;
        e.id = edgeId++;
        e.a = static_cast<int>(rng.uniformInt(0, n - 1));
        e.b = static_cast<int>(rng.uniformInt(0, n - 1));
        if (e.a == e.b) continue;
        e.curvature = 2.0 * rng.uniform();
        e.polyline = {g.nodes[e.a].position, g.nodes[e.b].position};
        e.length = distance(e.polyline[0], e.polyline[1]);
        g.edges.push_back(e);
    }
    return g;
}

Outcome runA3() {
    RngStream rng(33, "a3");
    for (int t = 0; t < 100; ++t) {
        int n = static_cast<int>(rng.uniformInt(5, 50));
        TopoGraph g = randomConnectedGraph(rng, n);
        PlanQuery q;
        q.startNode = static_cast<int>(rng.uniformInt(0, n - 1));
        q.goalNode = static_cast<int>(rng.uniformInt(0, n - 1));
        double astarCost = astar(g, q).totalCost;
        double oracle = dijkstraCost(g, q);
        if (std::abs(astarCost - oracle) > 1e-9)
            return {false, "cost mismatch on trial " + std::to_string(t)};
    }

    // straight chain, zero curvature: cost collapses to the Euclidean sum
    {
        TopoGraph g;
        double expect = 0.0;
        RngStream crng(34, "a3-chain");
        double x = 0.0;
        for (int i = 0; i < 6; ++i) {
            g.nodes.push_back({i, {x, 0.0}});
            if (i > 0) {
                TopoEdge e;
                e.id = i - 1;
                e.a = i - 1;
                e.b = i;
                e.polyline = {g.nodes[i - 1].position, g.nodes[i].position};
                e.length = distance(e.polyline[0], e.polyline[1]);
                expect += e.length;
                g.edges.push_back(e);
            }
            x += 1.0 + 9.0 * crng.uniform();
        }
        PlanQuery q;
        q.goalNode = 5;
        if (std::abs(astar(g, q).totalCost - expect) > 1e-9)
            return {false, "straight-chain cost != Euclidean sum"};
    }

    // replan latency on a 1,000-node ring with 2,000 chords
    TopoGraph big;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
        double ang = 2 * M_PI * i / n;
        big.nodes.push_back({i, {500 + 400 * std::cos(ang), 500 + 400 * std::sin(ang)}});
    }
    int edgeId = 0;
    auto addEdge = [&](int a, int b) {
        TopoEdge e;
        e.id = edgeId++;
        e.a = a;
        e.b = b;
        e.polyline = {big.nodes[a].position, big.nodes[b].position};
        e.length = distance(e.polyline[0], e.polyline[1]);
        big.edges.push_back(e);
    };
    for (int i = 0; i < n; ++i) addEdge(i, (i + 1) % n);
    RngStream brng(35, "a3-big");
    for (int x = 0; x < 2000; ++x) {
        int a = static_cast<int>(brng.uniformInt(0, n - 1));
        int b = static_cast<int>(brng.uniformInt(0, n - 1));
        if (a != b) addEdge(a, b);
    }
    std::vector<double> times;
    for (int t = 0; t < 21; ++t) {
        PlanQuery q;
        q.startNode = static_cast<int>(brng.uniformInt(0, n - 1));
        q.goalNode = static_cast<int>(brng.uniformInt(0, n - 1));
        q.disabledEdges = {static_cast<int>(brng.uniformInt(0, edgeId - 1))};
        auto t0 = std::chrono::steady_clock::now();
        astar(big, q);
        auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    double med = median(times);
    std::ostringstream det;
    det << "costs exact, median replan " << med << " ms";
    return {med < 100.0, det.str()};
}

// ---------------- A4: raster-to-graph pipeline ----------------

struct Template {
    std::string name;
    int nodes, edges, components;
};

int maskComponents(const PathMask& m) {
    std::vector<int> label(m.bits.size(), 0);
    int comps = 0;
    for (size_t s = 0; s < m.bits.size(); ++s) {
        if (!m.bits[s] || label[s]) continue;
        comps++;
        std::vector<size_t> stack{s};
        label[s] = comps;
        while (!stack.empty()) {
            size_t cur = stack.back();
            stack.pop_back();
            int r = static_cast<int>(cur) / m.gridWidth;
            int c = static_cast<int>(cur) % m.gridWidth;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    int nr = r + dr, nc = c + dc;
                    if (nr < 0 || nc < 0 || nr >= m.gridHeight || nc >= m.gridWidth) continue;
                    size_t ni = static_cast<size_t>(nr) * m.gridWidth + nc;
                    if (m.bits[ni] && !label[ni]) {
                        label[ni] = comps;
                        stack.push_back(ni);
                    }
                }
        }
    }
    return comps;
}

bool hasFullBlock(const PathMask& m) {
    for (int r = 0; r + 1 < m.gridHeight; ++r)
        for (int c = 0; c + 1 < m.gridWidth; ++c)
            if (m.at(r, c) && m.at(r, c + 1) && m.at(r + 1, c) && m.at(r + 1, c + 1))
                return true;
    return false;
}

int graphComponents(const TopoGraph& g) {
    std::map<int, int> parent;
    std::function<int(int)> find = [&](int x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (const auto& node : g.nodes) parent[node.id] = node.id;
    for (const auto& e : g.edges) parent[find(e.a)] = find(e.b);
    std::set<int> roots;
    for (const auto& node : g.nodes) roots.insert(find(node.id));
    return static_cast<int>(roots.size());
}

Outcome runA4() {
    RngStream rng(44, "a4");
    int matches = 0;
    const int trials = 50;
    for (int t = 0; t < trials; ++t) {
        RasterTile tile = RasterTile::zeros(64, 64);
        auto hbar = [&](int r0, int c0, int c1) {
            for (int r = r0; r < r0 + 4; ++r)
                for (int c = c0; c < c1; ++c) tile.at(r, c) = 1.0;
        };
        auto vbar = [&](int c0, int r0, int r1) {
            for (int c = c0; c < c0 + 4; ++c)
                for (int r = r0; r < r1; ++r) tile.at(r, c) = 1.0;
        };
        // bar anchors snap to the 4-px patch grid
        int off = 4 * static_cast<int>(rng.uniformInt(6, 9));  // 24..36
        Template truth;
        switch (t % 5) {
            case 0:
                truth = {"straight", 2, 1, 1};
                hbar(off, 8, 56);
                break;
            case 1:
                truth = {"cross", 5, 4, 1};
                hbar(off, 8, 56);
                vbar(off, 8, 56);
                break;
            case 2:
                truth = {"tee", 4, 3, 1};
                hbar(off, 8, 56);
                vbar(28, off, 56);
                break;
            case 3:
                truth = {"ell", 2, 1, 1};
                hbar(off, 8, 32);
                vbar(28, off, 56);
                break;
            default:
                truth = {"parallel", 4, 2, 2};
                hbar(12, 8, 56);
                hbar(44, 8, 56);
                break;
        }

        FeatureMap fm = encodeTile(tile, 4, 16, 4400 + t);
        PrototypeSet protos = buildPrototypes(4, 16, 4400 + t);
        std::vector<double> sim = similarityMap(fm, protos);
        PathMask mask = adaptiveThreshold(sim, fm.gridWidth, fm.gridHeight);
        PathMask skeleton = skeletonize(mask);

        // hard invariants: width-1 skeleton, component count preserved
        if (hasFullBlock(skeleton)) return {false, truth.name + ": skeleton not width-1"};
        if (maskComponents(mask) != maskComponents(skeleton))
            return {false, truth.name + ": thinning changed connectivity"};

        TopoGraph g = extractGraph(skeleton, tile);
        if (static_cast<int>(g.nodes.size()) == truth.nodes &&
            static_cast<int>(g.edges.size()) == truth.edges &&
            graphComponents(g) == truth.components)
            matches++;
    }
    std::ostringstream det;
    det << matches << "/" << trials << " topology matches";
    return {matches * 10 >= trials * 9, det.str()};
}

// ---------------- A5 / A6 helpers ----------------

struct TrainedPolicy {
    GridWorld world;
    WorldAssets assets;
    TopoGraph graph;
    RetrievalIndex index;
    PolicyParams params;
};

TrainedPolicy trainPolicy(uint64_t seed, int size, double blockDensity, int grpoUpdates,
                          double betaGeo) {
    TrainedPolicy tp{generateWorld(size, blockDensity, seed), {}, {}, {}, {}};
    tp.assets = WorldAssets::build(tp.world, seed ^ 0x5a5a5a5aULL, seed ^ 0xa5a5a5a5ULL);
    tp.graph = gridToGraph(tp.world);
    tp.index = buildCellIndex(tp.world, tp.assets);

    RngStream initRng(seed, "policy");
    tp.params = PolicyParams::init(size * size, 64, tp.assets.condDim, initRng);
    ImitationBuildConfig icfg;
    icfg.walks = 600;
    icfg.seed = seed;
    ImitationCorpus corpus = imitationBuild(tp.world, tp.assets.cellCond, icfg);
    imitationTrain(corpus, tp.params, 4000, 64, 0.2, seed);

    if (grpoUpdates > 0) {
        GrpoConfig gcfg;
        gcfg.updates = grpoUpdates;
        gcfg.betaGeo = betaGeo;
        gcfg.seed = seed;
        std::vector<EpisodeSpec> train = sampleEpisodes(tp.world, 50, 1, seed + 7);
        tp.params = grpoTrain(tp.world, train, tp.params, tp.assets, gcfg).params;
    }
    return tp;
}

EvaluationSummary evalStops(const TrainedPolicy& tp, int stops, int episodes, uint64_t seed) {
    std::vector<EpisodeSpec> specs = sampleEpisodes(tp.world, episodes, stops, seed);
    EpisodeRunConfig cfg;
    cfg.seed = seed;
    return evaluatePolicy(tp.world, tp.assets, tp.graph, tp.index, specs, tp.params, cfg);
}

// ---------------- A5: multi-stop planning ----------------

Outcome runA5() {
    std::vector<double> sr1, sr2, sr3, ts1, ts3;
    for (int s = 0; s < 5; ++s) {
        TrainedPolicy tp = trainPolicy(1000 + s, 8, 0.2, 1000, 0.5);
        EvaluationSummary e1 = evalStops(tp, 1, 200, 9100 + s);
        EvaluationSummary e2 = evalStops(tp, 2, 200, 9200 + s);
        EvaluationSummary e3 = evalStops(tp, 3, 200, 9300 + s);
        sr1.push_back(e1.successRate);
        sr2.push_back(e2.successRate);
        sr3.push_back(e3.successRate);
        ts1.push_back(e1.tsMean);
        ts3.push_back(e3.tsMean);
    }
    double m1 = median(sr1), m2 = median(sr2), m3 = median(sr3);
    double t1 = median(ts1), t3 = median(ts3);
    std::ostringstream det;
    det << "SR medians 1/2/3-stop = " << m1 << "/" << m2 << "/" << m3 << ", TS " << t1
        << " vs " << t3;
    bool pass = m1 >= 0.70 && m1 >= m2 && m2 >= m3 && t1 <= t3;
    return {pass, det.str()};
}

// ---------------- A6: alignment-reward ablation ----------------

Outcome runA6() {
    std::vector<double> withGeo, withoutGeo;
    for (int s = 0; s < 5; ++s) {
        TrainedPolicy a = trainPolicy(2000 + s, 7, 0.15, 800, 0.5);
        TrainedPolicy b = trainPolicy(2000 + s, 7, 0.15, 800, 0.0);
        withGeo.push_back(evalStops(a, 1, 100, 9600 + s).successRate);
        withoutGeo.push_back(evalStops(b, 1, 100, 9600 + s).successRate);
    }
    double mg = median(withGeo), mn = median(withoutGeo);
    std::ostringstream det;
    det << "median SR beta=0.5: " << mg << ", beta=0: " << mn;
    return {mg >= mn, det.str()};
}

// ---------------- A7: metric oracles ----------------

Outcome runA7() {
    RngStream rng(77, "a7");
    // top-k recall vs brute force, plus monotonicity in k
    for (int t = 0; t < 100; ++t) {
        std::vector<RankedResult> results;
        int q = static_cast<int>(rng.uniformInt(1, 10));
        for (int i = 0; i < q; ++i) {
            RankedResult r;
            r.queryId = i;
            int n = static_cast<int>(rng.uniformInt(1, 12));
            std::vector<int64_t> ids(20);
            std::iota(ids.begin(), ids.end(), 0);
            for (int j = 0; j < n; ++j) {
                int pick = static_cast<int>(rng.uniformInt(j, 19));
                std::swap(ids[j], ids[pick]);
                r.rankedIds.push_back(ids[j]);
            }
            int rel = static_cast<int>(rng.uniformInt(1, 5));
            for (int j = 0; j < rel; ++j) r.relevantIds.insert(rng.uniformInt(0, 19));
            results.push_back(std::move(r));
        }
        double prev = 0.0;
        for (int k = 1; k <= 12; ++k) {
            int hits = 0;
            for (const auto& r : results) {
                bool hit = false;
                for (size_t i = 0; i < r.rankedIds.size() && i < static_cast<size_t>(k); ++i)
                    if (r.relevantIds.count(r.rankedIds[i])) hit = true;
                if (hit) hits++;
            }
            double got = topkRecall(results, k);
            if (std::abs(got - static_cast<double>(hits) / q) > 1e-12)
                return {false, "topkRecall mismatch"};
            if (got + 1e-12 < prev) return {false, "topkRecall not monotone in k"};
            prev = got;
        }
        // AP oracle: mean over queries of sum(precision@hit)/|relevant|
        double apSum = 0.0;
        int counted = 0;
        for (const auto& r : results) {
            if (r.relevantIds.empty()) continue;
            double ap = 0.0;
            int seen = 0;
            for (size_t i = 0; i < r.rankedIds.size(); ++i)
                if (r.relevantIds.count(r.rankedIds[i])) {
                    seen++;
                    ap += static_cast<double>(seen) / (i + 1) / r.relevantIds.size();
                }
            apSum += ap;
            counted++;
        }
        double ap = averagePrecision(results).meanAp;
        if (counted > 0 && std::abs(ap - apSum / counted) > 1e-12)
            return {false, "averagePrecision mismatch"};
        if (ap < 0.0 || ap > 1.0) return {false, "AP out of [0,1]"};
    }

    // top-1% k formula
    for (int n = 1; n <= 1000; ++n)
        if (topOnePercentK(n) != std::max(1, static_cast<int>(std::ceil(0.01 * n))))
            return {false, "topOnePercentK mismatch"};

    // footprint overlap vs direct rectangle intersection
    for (int t = 0; t < 100; ++t) {
        auto box = [&]() {
            double x0 = 10 * rng.uniform(), y0 = 10 * rng.uniform();
            return Footprint{{x0, y0}, {x0 + 0.5 + 5 * rng.uniform(), y0 + 0.5 + 5 * rng.uniform()}};
        };
        Footprint a = box(), b = box();
        double ix = std::max(0.0, std::min(a.maxCorner.x, b.maxCorner.x) -
                                      std::max(a.minCorner.x, b.minCorner.x));
        double iy = std::max(0.0, std::min(a.maxCorner.y, b.maxCorner.y) -
                                      std::max(a.minCorner.y, b.minCorner.y));
        if (std::abs(footprintOverlap(a, b) - ix * iy / a.area()) > 1e-12)
            return {false, "footprintOverlap mismatch"};
    }

    // trajectory similarity: symmetry and brute-force oracle
    for (int t = 0; t < 100; ++t) {
        TrajectoryPair p;
        int na = static_cast<int>(rng.uniformInt(1, 12)),
            nb = static_cast<int>(rng.uniformInt(1, 12));
        for (int i = 0; i < na; ++i) p.generated.push_back({10 * rng.uniform(), 10 * rng.uniform()});
        for (int i = 0; i < nb; ++i) p.reference.push_back({10 * rng.uniform(), 10 * rng.uniform()});
        auto directed = [](const std::vector<Vec2>& from, const std::vector<Vec2>& to) {
            double worst = 0.0;
            for (const auto& x : from) {
                double best = 1e300;
                for (const auto& y : to)
                    best = std::min(best, std::hypot(x.x - y.x, x.y - y.y));
                worst = std::max(worst, best);
            }
            return worst;
        };
        double oracle = std::max(directed(p.generated, p.reference),
                                 directed(p.reference, p.generated));
        double got = trajectorySimilarity(p);
        TrajectoryPair swapped{p.reference, p.generated, p.goal};
        if (std::abs(got - oracle) > 1e-12) return {false, "TS vs oracle mismatch"};
        if (std::abs(got - trajectorySimilarity(swapped)) > 1e-12)
            return {false, "TS not symmetric"};
    }

    // hit rate vs direct count
    for (int t = 0; t < 100; ++t) {
        int n = static_cast<int>(rng.uniformInt(1, 20));
        std::vector<RankedResult> results(n);
        std::vector<double> overlaps;
        double thr = rng.uniform();
        int expect = 0;
        for (int i = 0; i < n; ++i) {
            overlaps.push_back(rng.uniform());
            if (overlaps.back() >= thr) expect++;
        }
        if (std::abs(hitRate(results, overlaps, thr) - static_cast<double>(expect) / n) > 1e-12)
            return {false, "hitRate mismatch"};
    }

    // group advantages: zero mean, unit population std when non-degenerate
    for (int t = 0; t < 100; ++t) {
        int g = static_cast<int>(rng.uniformInt(2, 16));
        std::vector<double> r(g);
        for (double& x : r) x = 5 * rng.normal();
        std::vector<double> adv = groupAdvantage(r);
        double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / g;
        double var = 0.0;
        for (double a : adv) var += (a - mean) * (a - mean);
        var /= g;
        bool degenerate = *std::max_element(r.begin(), r.end()) -
                              *std::min_element(r.begin(), r.end()) < 1e-12;
        if (degenerate) continue;
        if (std::abs(mean) > 1e-9 || std::abs(std::sqrt(var) - 1.0) > 1e-9)
            return {false, "advantage normalization violated"};
    }
    return {true, "all oracles matched"};
}

// ---------------- A8: CLI determinism ----------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome runA8(const std::string& bin) {
    fs::path dir = fs::temp_directory_path() / "geoplan_a8";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto sh = [&](const std::string& cmd) {
        return std::system((cmd + " >/dev/null 2>&1").c_str()) == 0;
    };

    RasterTile tile = RasterTile::zeros(64, 64);
    for (int r = 8; r < 56; ++r)
        for (int c = 30; c < 34; ++c) tile.at(r, c) = 1.0;
    for (int c = 8; c < 56; ++c)
        for (int r = 30; r < 34; ++r) tile.at(r, c) = 1.0;
    fs::path raster = dir / "cross.pgm";
    pnm::write(raster.string(), tile);

    GridWorld world = generateWorld(6, 0.1, 808);
    fs::path worldFile = dir / "world.json";
    std::ofstream(worldFile) << worldToJson(world).dump(2);
    fs::path episodesFile = dir / "episodes.json";
    std::ofstream(episodesFile) << episodesToJson(sampleEpisodes(world, 2, 1, 808)).dump(2);

    for (int round = 0; round < 2; ++round) {
        std::string sfx = round == 0 ? "_a" : "_b";
        fs::path graph = dir / ("graph" + sfx + ".json");
        if (!sh(bin + " --seed 9 extract --raster " + raster.string() + " --out " +
                graph.string()))
            return {false, "extract failed"};
        if (!sh(bin + " plan --graph " + graph.string() +
                " --start 0 --goal 1 --alpha 1 --beta 0.5 --interval 7.5 --out " +
                (dir / ("plan" + sfx + ".json")).string()))
            return {false, "plan failed"};
        if (!sh(bin + " --seed 9 train-plan --world " + worldFile.string() + " --episodes " +
                episodesFile.string() + " --out " + (dir / ("policy" + sfx + ".bin")).string() +
                " --updates 20 --imitation-walks 40 --imitation-steps 40"))
            return {false, "train-plan failed"};
        if (!sh(bin + " --seed 9 episode --world " + worldFile.string() + " --policy " +
                (dir / ("policy" + sfx + ".bin")).string() + " --episodes " +
                episodesFile.string() + " --out " + (dir / ("run" + sfx + ".json")).string()))
            return {false, "episode failed"};
    }
    for (const char* f : {"graph", "plan", "run"}) {
        if (slurp(dir / (std::string(f) + "_a.json")) != slurp(dir / (std::string(f) + "_b.json")))
            return {false, std::string(f) + " output differs between reruns"};
    }
    if (slurp(dir / "policy_a.bin") != slurp(dir / "policy_b.bin"))
        return {false, "policy checkpoint differs between reruns"};
    return {true, "all rerun outputs byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
    std::string bin = argc > 1 ? argv[1] : "";
    struct Entry {
        const char* name;
        std::function<Outcome()> fn;
    };
    std::vector<Entry> entries = {
        {"A1 gradient integrity", runA1},
        {"A2 paired-view retrieval", runA2},
        {"A3 planner optimality", runA3},
        {"A4 raster-to-graph pipeline", runA4},
        {"A5 multi-stop planning", runA5},
        {"A6 alignment-reward ablation", runA6},
        {"A7 metric oracles", runA7},
        {"A8 CLI determinism", [&] {
             if (bin.empty()) return Outcome{false, "no CLI binary path supplied"};
             return runA8(bin);
         }},
    };
    bool allPass = true;
    for (auto& e : entries) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = e.fn();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        auto t1 = std::chrono::steady_clock::now();
        double secs = std::chrono::duration<double>(t1 - t0).count();
        std::cout << e.name << ": " << (o.pass ? "PASS" : "FAIL") << " — " << o.detail << " ["
                  << secs << " s]" << std::endl;
        if (!o.pass) allPass = false;
    }
    return allPass ? 0 : 1;
}
