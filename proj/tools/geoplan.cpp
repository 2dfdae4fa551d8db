// geoplan: end-to-end command line harness.
//
// Subcommands: extract, train-align, train-plan, plan, episode, evaluate.
// Every subcommand accepts --config <json> whose keys provide defaults;
// explicit flags win. --threads (or env GEOPLAN_THREADS) caps worker counts;
// the implementation is sequential, so the cap is recorded but never exceeded.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "geoplan/canvas_graph.hpp"
#include "geoplan/checkpoint.hpp"
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

using json = nlohmann::json;
using namespace geoplan;

namespace {

json loadJsonFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(GeoplanError::Kind::Io, "cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        fail(GeoplanError::Kind::Io, path + ": " + e.what());
    }
    return j;
}

void writeTextFile(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(GeoplanError::Kind::Io, "cannot write file: " + path);
    out << content;
}

void writeJsonFile(const std::string& path, const json& j) {
    writeTextFile(path, j.dump(2) + "\n");
}

// Pre-scan for --config and use its values as option defaults; flags given
// on the command line then override them during the real parse.
json configDefaults(const std::vector<std::string>& args) {
    for (size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--config") return loadJsonFile(args[i + 1]);
    return json::object();
}

template <typename T>
void applyDefault(const json& cfg, const char* key, T& value) {
    if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

int resolveThreads(int flagValue) {
    if (flagValue > 0) return flagValue;
    if (const char* env = std::getenv("GEOPLAN_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

const char* className(TransitionClass c) {
    switch (c) {
        case TransitionClass::Optimal: return "optimal";
        case TransitionClass::NonOptimal: return "nonoptimal";
        case TransitionClass::Invalid: return "invalid";
    }
    return "?";
}

// ---- extract ----

int cmdExtract(const std::string& rasterPath, const std::string& outPath, int patchSize,
               int dim, uint64_t seed) {
    RasterTile tile = pnm::read(rasterPath);
    TopoGraph graph;
    // all-zero tiles produce a constant similarity map and an empty graph
    FeatureMap fm = encodeTile(tile, patchSize, dim, seed);
    PrototypeSet protos = buildPrototypes(patchSize, dim, seed);
    std::vector<double> sim = similarityMap(fm, protos);
    PathMask mask = adaptiveThreshold(sim, fm.gridWidth, fm.gridHeight);
    PathMask skeleton = skeletonize(mask);
    graph = extractGraph(skeleton, tile);
    writeJsonFile(outPath, graphToJson(graph));
    std::cout << "nodes=" << graph.nodes.size() << " edges=" << graph.edges.size() << "\n";
    return 0;
}

// ---- train-align ----

// Synthetic paired views: a shared latent token stack per sample plus
// independent per-view Gaussian noise.
PairedTokenSet buildPairedViews(int samples, int stages, int tokenLen, double noiseSigma,
                                uint64_t seed) {
    RngStream rng(seed, "paired-views");
    PairedTokenSet data;
    for (int i = 0; i < samples; ++i) {
        std::vector<VectorXd> ground, sat;
        for (int s = 0; s < stages; ++s) {
            VectorXd shared(tokenLen);
            for (int d = 0; d < tokenLen; ++d) shared(d) = rng.normal();
            VectorXd g = shared, z = shared;
            for (int d = 0; d < tokenLen; ++d) {
                g(d) += rng.normal(0.0, noiseSigma);
                z(d) += rng.normal(0.0, noiseSigma);
            }
            ground.push_back(g);
            sat.push_back(z);
        }
        data.groundTokens.push_back(std::move(ground));
        data.satTokens.push_back(std::move(sat));
    }
    return data;
}

struct AlignEval {
    double top1{0.0};
    double top5{0.0};
};

AlignEval evalAlignment(const PairedTokenSet& data, const std::vector<int>& heldOut,
                        const MixModuleParams& groundParams, const MixModuleParams& satParams) {
    RetrievalIndex index;
    for (int idx : heldOut) {
        RetrievalEntry e;
        e.tileId = idx;
        e.embedding = mixForward(data.satTokens[idx], satParams);
        index.entries.push_back(std::move(e));
    }
    int hit1 = 0, hit5 = 0;
    for (int idx : heldOut) {
        EmbeddingVector q = mixForward(data.groundTokens[idx], groundParams);
        RetrievalResult r = retrieve(q, index, 5);
        if (r.rankedIds[0] == idx) hit1++;
        for (int64_t id : r.rankedIds)
            if (id == idx) {
                hit5++;
                break;
            }
    }
    AlignEval out;
    out.top1 = static_cast<double>(hit1) / heldOut.size();
    out.top5 = static_cast<double>(hit5) / heldOut.size();
    return out;
}

int cmdTrainAlign(int samples, int stages, int tokenLen, int hidden, int dim,
                  double noiseSigma, int steps, int batchSize, double lr, double tau,
                  uint64_t seed, const std::string& outCkpt, const std::string& outMetrics) {
    PairedTokenSet data = buildPairedViews(samples, stages, tokenLen, noiseSigma, seed);
    const int holdoutStart = samples * 4 / 5;
    std::vector<int> trainIdx, heldOut;
    for (int i = 0; i < holdoutStart; ++i) trainIdx.push_back(i);
    for (int i = holdoutStart; i < samples; ++i) heldOut.push_back(i);
    if (trainIdx.empty() || heldOut.empty())
        fail(GeoplanError::Kind::Parameter, "train-align: need enough samples for a holdout");

    RngStream initRng(seed, "align-init");
    MixModuleParams groundParams = MixModuleParams::init(stages, tokenLen, hidden, dim, initRng);
    MixModuleParams satParams = MixModuleParams::init(stages, tokenLen, hidden, dim, initRng);

    RngStream batchRng(seed, "align-batches");
    double lastLoss = 0.0;
    for (int s = 0; s < steps; ++s) {
        std::vector<int> batch;
        for (int b = 0; b < batchSize; ++b)
            batch.push_back(trainIdx[batchRng.uniformInt(
                0, static_cast<int64_t>(trainIdx.size()) - 1)]);
        lastLoss = alignTrainStep(data, batch, groundParams, satParams, lr, tau);
        if (!std::isfinite(lastLoss))
            fail(GeoplanError::Kind::Divergence, "train-align: non-finite loss");
    }

    AlignEval eval = evalAlignment(data, heldOut, groundParams, satParams);
    TensorStore store;
    store.seed = seed;
    mixToStore(groundParams, "ground", store);
    mixToStore(satParams, "satellite", store);
    checkpoint::save(outCkpt, store);
    writeJsonFile(outMetrics, {{"top1", eval.top1},
                               {"top5", eval.top5},
                               {"heldOut", static_cast<int>(heldOut.size())},
                               {"steps", steps},
                               {"finalLoss", lastLoss},
                               {"seed", seed}});
    std::cout << "top1=" << eval.top1 << " top5=" << eval.top5 << "\n";
    return 0;
}

// ---- train-plan ----

int cmdTrainPlan(const std::string& worldPath, const std::string& episodesPath,
                 const GrpoConfig& grpoCfg, int imitationWalks, int imitationSteps,
                 const std::string& outPolicy, const std::string& telemetryPath,
                 const std::string& tracePath) {
    GridWorld world = worldFromJson(loadJsonFile(worldPath));
    std::vector<EpisodeSpec> episodes = episodesFromJson(loadJsonFile(episodesPath));
    WorldAssets assets = WorldAssets::build(world, grpoCfg.seed ^ 0x5a5a5a5aULL,
                                            grpoCfg.seed ^ 0xa5a5a5a5ULL);

    RngStream initRng(grpoCfg.seed, "policy");
    PolicyParams params =
        PolicyParams::init(world.size * world.size, 64, assets.condDim, initRng);

    ImitationBuildConfig imitationCfg;
    imitationCfg.walks = imitationWalks;
    imitationCfg.seed = grpoCfg.seed;
    ImitationCorpus corpus = imitationBuild(world, assets.cellCond, imitationCfg);
    imitationTrain(corpus, params, imitationSteps, 64, 0.2, grpoCfg.seed);

    std::vector<RewardTraceRow> trace;
    GrpoTrainResult result = grpoTrain(world, episodes, params, assets, grpoCfg,
                                       tracePath.empty() ? nullptr : &trace);

    TensorStore store;
    store.seed = grpoCfg.seed;
    policyToStore(result.params, store);
    checkpoint::save(outPolicy, store);

    if (!telemetryPath.empty()) {
        std::ostringstream csv;
        csv << "update,meanReward,objective,klEstimate,clippedFraction\n";
        for (const auto& r : result.records)
            csv << r.update << "," << r.meanReward << "," << r.objective << ","
                << r.klEstimate << "," << r.clippedFraction << "\n";
        writeTextFile(telemetryPath, csv.str());
    }
    if (!tracePath.empty()) {
        std::ostringstream csv;
        csv << "episode,step,k,class,rProg,rGeo,rTotal,advantage\n";
        for (const auto& r : trace)
            csv << r.episode << "," << r.step << "," << r.k << "," << className(r.cls)
                << "," << r.rProg << "," << r.rGeo << "," << r.rTotal << ","
                << r.advantage << "\n";
        writeTextFile(tracePath, csv.str());
    }
    std::cout << "updates=" << result.records.size()
              << " finalMeanReward="
              << (result.records.empty() ? 0.0 : result.records.back().meanReward) << "\n";
    return 0;
}

// ---- plan ----

int cmdPlan(const std::string& graphPath, int start, int goal, double alpha, double beta,
            double interval, const std::string& disableEdges, const std::string& outPath) {
    TopoGraph graph = graphFromJson(loadJsonFile(graphPath));
    PlanQuery q;
    q.startNode = start;
    q.goalNode = goal;
    q.alpha = alpha;
    q.beta = beta;
    if (!disableEdges.empty()) {
        std::stringstream ss(disableEdges);
        std::string tok;
        while (std::getline(ss, tok, ',')) q.disabledEdges.insert(std::stoi(tok));
    }
    WaypointPath path = astar(graph, q);
    std::vector<Vec2> waypoints = downsample(path.nodes, graph, interval);
    json wp = json::array();
    for (const auto& p : waypoints)
        wp.push_back({detail::round6(p.x), detail::round6(p.y)});
    writeJsonFile(outPath,
                  {{"nodes", path.nodes}, {"waypoints", wp}, {"cost", path.totalCost}});
    std::cout << "nodes=" << path.nodes.size() << " cost=" << path.totalCost << "\n";
    return 0;
}

// ---- episode ----

int cmdEpisode(const std::string& worldPath, const std::string& policyPath,
               const std::string& episodesPath, uint64_t seed, const std::string& outPath,
               const std::string& tracePath) {
    GridWorld world = worldFromJson(loadJsonFile(worldPath));
    std::vector<EpisodeSpec> episodes = episodesFromJson(loadJsonFile(episodesPath));
    TensorStore store = checkpoint::load(policyPath);
    PolicyParams params = policyFromStore(store);
    WorldAssets assets = WorldAssets::build(world, store.seed ^ 0x5a5a5a5aULL,
                                            store.seed ^ 0xa5a5a5a5ULL);
    TopoGraph graph = gridToGraph(world);
    RetrievalIndex index = buildCellIndex(world, assets);

    json results = json::array();
    std::ostringstream csv;
    csv << "episode,step,k,class,rProg,rGeo,rTotal,advantage\n";
    for (size_t i = 0; i < episodes.size(); ++i) {
        EpisodeRunConfig cfg;
        cfg.seed = seed ^ (0x9e3779b97f4a7c15ULL * (i + 1));
        EpisodeResult r = runEpisode(world, assets, graph, index, episodes[i], params, cfg);
        results.push_back(episodeResultToJson(r, episodes[i]));
        // executed episodes have one realized candidate per step (k = 0);
        // the advantage column only applies to training groups and stays 0
        for (const auto& s : r.steps)
            csv << i << "," << s.stepIndex << ",0," << className(s.cls) << "," << s.rProg
                << "," << s.rGeo << "," << s.rTotal << ",0\n";
    }
    writeJsonFile(outPath, {{"episodes", results}, {"seed", seed}});
    if (!tracePath.empty()) writeTextFile(tracePath, csv.str());
    std::cout << "episodes=" << results.size() << "\n";
    return 0;
}

// ---- evaluate ----

int cmdEvaluate(const std::string& predPath, const std::string& refPath,
                const std::string& worldPath, const std::string& reportPath,
                double hitThreshold) {
    json pred = loadJsonFile(predPath);
    json ref = loadJsonFile(refPath);
    GridWorld world = worldFromJson(loadJsonFile(worldPath));

    // retrieval block: ranked ids from predictions, relevance from references
    std::vector<RankedResult> ranked;
    std::vector<double> overlaps;
    const json& predRuns = pred.at("retrieval");
    const json& refRuns = ref.at("retrieval");
    if (predRuns.size() != refRuns.size())
        fail(GeoplanError::Kind::Dimension, "evaluate: retrieval list size mismatch");
    int candidateCount = ref.value("candidateCount", 100);
    for (size_t i = 0; i < predRuns.size(); ++i) {
        RankedResult r;
        r.queryId = predRuns[i].at("queryId").get<int64_t>();
        for (const auto& id : predRuns[i].at("rankedIds")) r.rankedIds.push_back(id.get<int64_t>());
        for (const auto& id : refRuns[i].at("relevantIds"))
            r.relevantIds.insert(id.get<int64_t>());
        ranked.push_back(std::move(r));
        overlaps.push_back(predRuns[i].value("overlap", 0.0));
    }

    // trajectory block
    auto parsePoints = [](const json& arr) {
        std::vector<Vec2> pts;
        for (const auto& p : arr) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        return pts;
    };
    std::vector<TrajectoryPair> pairs;
    const json& predTraj = pred.at("trajectories");
    const json& refTraj = ref.at("trajectories");
    if (predTraj.size() != refTraj.size())
        fail(GeoplanError::Kind::Dimension, "evaluate: trajectory list size mismatch");
    for (size_t i = 0; i < predTraj.size(); ++i) {
        TrajectoryPair p;
        p.generated = parsePoints(predTraj[i].at("points"));
        p.reference = parsePoints(refTraj[i].at("points"));
        p.goal = {refTraj[i].at("goal").at(0).get<double>(),
                  refTraj[i].at("goal").at(1).get<double>()};
        pairs.push_back(std::move(p));
    }

    RasterTile canvas = renderCanvas(world, 3);
    uint64_t seed = world.seed;
    std::vector<double> ts;
    double vcsSum = 0.0;
    for (const auto& p : pairs) {
        ts.push_back(trajectorySimilarity(p));
        vcsSum += visualConsistency(p.generated, world, canvas, seed ^ 0xa5a5a5a5ULL,
                                    seed ^ 0x5a5a5a5aULL, 16, 16, 3);
    }
    double tsMean = 0.0;
    for (double t : ts) tsMean += t;
    tsMean /= ts.size();
    double tsVar = 0.0;
    for (double t : ts) tsVar += (t - tsMean) * (t - tsMean);

    json report = {{"top1", topkRecall(ranked, 1)},
                   {"top5", topkRecall(ranked, 5)},
                   {"top10", topkRecall(ranked, 10)},
                   {"top1pct", topkRecall(ranked, topOnePercentK(candidateCount))},
                   {"ap", averagePrecision(ranked).meanAp},
                   {"hitRate", hitRate(ranked, overlaps, hitThreshold)},
                   {"ts_mean", tsMean},
                   {"ts_std", std::sqrt(tsVar / ts.size())},
                   {"sr", successRate(pairs, world)},
                   {"vcs_mean", vcsSum / pairs.size()}};
    writeJsonFile(reportPath, report);
    std::cout << "sr=" << report["sr"] << " ts_mean=" << report["ts_mean"] << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"satellite-canvas graph extraction, cross-view alignment, and "
                 "conditioned grid navigation"};
    app.require_subcommand(1);

    std::vector<std::string> rawArgs(argv + 1, argv + argc);
    json cfg;
    try {
        cfg = configDefaults(rawArgs);
    } catch (const GeoplanError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    std::string configPath;
    int threads = 0;
    uint64_t seed = 0;
    applyDefault(cfg, "seed", seed);
    applyDefault(cfg, "threads", threads);
    app.add_option("--config", configPath, "JSON config supplying option defaults");
    app.add_option("--threads", threads, "worker cap (env GEOPLAN_THREADS as fallback)");
    app.add_option("--seed", seed, "root random seed");

    // extract
    auto* extract = app.add_subcommand("extract", "raster -> road graph JSON");
    std::string rasterPath, outGraph = "graph.json";
    int patchSize = 4, encDim = 16;
    applyDefault(cfg, "raster", rasterPath);
    applyDefault(cfg, "out", outGraph);
    applyDefault(cfg, "patchSize", patchSize);
    applyDefault(cfg, "dim", encDim);
    extract->add_option("--raster", rasterPath, "P5/P6 raster path")->required();
    extract->add_option("--out", outGraph, "output graph JSON");
    extract->add_option("--patch-size", patchSize, "encoder patch size");
    extract->add_option("--dim", encDim, "embedding dimension");

    // train-align
    auto* trainAlign = app.add_subcommand("train-align", "contrastive cross-view alignment");
    int taSamples = 1000, taStages = 4, taTokenLen = 16, taHidden = 32, taDim = 16;
    int taSteps = 2000, taBatch = 32;
    double taNoise = 0.1, taLr = 0.05, taTau = 0.07;
    std::string taOut = "align.bin", taMetrics = "align_metrics.json";
    applyDefault(cfg, "samples", taSamples);
    applyDefault(cfg, "steps", taSteps);
    applyDefault(cfg, "noiseSigma", taNoise);
    trainAlign->add_option("--samples", taSamples, "paired-view sample count");
    trainAlign->add_option("--stages", taStages, "token stages per view");
    trainAlign->add_option("--token-len", taTokenLen, "token length");
    trainAlign->add_option("--hidden", taHidden, "stage hidden width");
    trainAlign->add_option("--dim", taDim, "embedding dimension");
    trainAlign->add_option("--noise-sigma", taNoise, "per-view noise sigma");
    trainAlign->add_option("--steps", taSteps, "SGD steps");
    trainAlign->add_option("--batch", taBatch, "batch size");
    trainAlign->add_option("--lr", taLr, "learning rate");
    trainAlign->add_option("--tau", taTau, "contrastive temperature");
    trainAlign->add_option("--out", taOut, "checkpoint path");
    trainAlign->add_option("--metrics", taMetrics, "metrics JSON path");

    // train-plan
    auto* trainPlan = app.add_subcommand("train-plan", "two-stage policy training");
    std::string tpWorld, tpEpisodes, tpOut = "policy.bin", tpTelemetry, tpTrace, tpCfg;
    GrpoConfig grpoCfg;
    int imitationWalks = 600, imitationSteps = 4000;
    applyDefault(cfg, "world", tpWorld);
    applyDefault(cfg, "episodes", tpEpisodes);
    applyDefault(cfg, "updates", grpoCfg.updates);
    applyDefault(cfg, "groupSize", grpoCfg.groupSize);
    applyDefault(cfg, "betaGeo", grpoCfg.betaGeo);
    applyDefault(cfg, "learningRate", grpoCfg.learningRate);
    applyDefault(cfg, "imitationWalks", imitationWalks);
    applyDefault(cfg, "imitationSteps", imitationSteps);
    trainPlan->add_option("--world", tpWorld, "world JSON")->required();
    trainPlan->add_option("--episodes", tpEpisodes, "episodes JSON")->required();
    trainPlan->add_option("--cfg", tpCfg, "extra GRPO config JSON");
    trainPlan->add_option("--out", tpOut, "policy checkpoint path");
    trainPlan->add_option("--telemetry", tpTelemetry, "per-update telemetry CSV");
    trainPlan->add_option("--trace", tpTrace, "per-candidate reward trace CSV");
    trainPlan->add_option("--updates", grpoCfg.updates, "GRPO update count");
    trainPlan->add_option("--group-size", grpoCfg.groupSize, "candidate group size");
    trainPlan->add_option("--beta-geo", grpoCfg.betaGeo, "alignment reward weight");
    trainPlan->add_option("--lr", grpoCfg.learningRate, "GRPO learning rate");
    trainPlan->add_option("--imitation-walks", imitationWalks, "pretraining walk count");
    trainPlan->add_option("--imitation-steps", imitationSteps, "pretraining SGD steps");

    // plan
    auto* plan = app.add_subcommand("plan", "A* route over a road graph");
    std::string plGraph, plOut = "plan.json", plDisable;
    int plStart = 0, plGoal = 0;
    double plAlpha = 1.0, plBeta = 0.5, plInterval = 7.5;
    applyDefault(cfg, "graph", plGraph);
    applyDefault(cfg, "alpha", plAlpha);
    applyDefault(cfg, "beta", plBeta);
    applyDefault(cfg, "interval", plInterval);
    plan->add_option("--graph", plGraph, "graph JSON")->required();
    plan->add_option("--start", plStart, "start node id")->required();
    plan->add_option("--goal", plGoal, "goal node id")->required();
    plan->add_option("--alpha", plAlpha, "distance weight");
    plan->add_option("--beta", plBeta, "curvature weight");
    plan->add_option("--interval", plInterval, "waypoint spacing (m)");
    plan->add_option("--disable-edges", plDisable, "comma-separated edge ids to drop");
    plan->add_option("--out", plOut, "output plan JSON");

    // episode
    auto* episode = app.add_subcommand("episode", "localize, plan, and execute episodes");
    std::string epWorld, epPolicy, epEpisodes, epOut = "episodes_out.json", epTrace;
    applyDefault(cfg, "world", epWorld);
    applyDefault(cfg, "policy", epPolicy);
    applyDefault(cfg, "episodes", epEpisodes);
    episode->add_option("--world", epWorld, "world JSON")->required();
    episode->add_option("--policy", epPolicy, "policy checkpoint")->required();
    episode->add_option("--episodes", epEpisodes, "episodes JSON")->required();
    episode->add_option("--out", epOut, "output JSON");
    episode->add_option("--trace", epTrace, "per-step reward CSV");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "metric report from runs + references");
    std::string evPred, evRef, evWorld, evReport = "report.json";
    double evThreshold = 0.5;
    applyDefault(cfg, "hitThreshold", evThreshold);
    evaluate->add_option("--pred", evPred, "predicted runs JSON")->required();
    evaluate->add_option("--ref", evRef, "reference runs JSON")->required();
    evaluate->add_option("--world", evWorld, "world JSON")->required();
    evaluate->add_option("--report", evReport, "output report JSON");
    evaluate->add_option("--hit-threshold", evThreshold, "overlap hit threshold");

    CLI11_PARSE(app, argc, argv);
    resolveThreads(threads);  // recorded cap; execution is single-threaded

    try {
        if (*extract) return cmdExtract(rasterPath, outGraph, patchSize, encDim, seed);
        if (*trainAlign)
            return cmdTrainAlign(taSamples, taStages, taTokenLen, taHidden, taDim, taNoise,
                                 taSteps, taBatch, taLr, taTau, seed, taOut, taMetrics);
        if (*trainPlan) {
            grpoCfg.seed = seed;
            if (!tpCfg.empty()) {
                json extra = loadJsonFile(tpCfg);
                applyDefault(extra, "updates", grpoCfg.updates);
                applyDefault(extra, "groupSize", grpoCfg.groupSize);
                applyDefault(extra, "betaGeo", grpoCfg.betaGeo);
                applyDefault(extra, "learningRate", grpoCfg.learningRate);
                applyDefault(extra, "klWeight", grpoCfg.klWeight);
                applyDefault(extra, "clip", grpoCfg.clip);
                applyDefault(extra, "epochLength", grpoCfg.epochLength);
                applyDefault(extra, "imitationWalks", imitationWalks);
                applyDefault(extra, "imitationSteps", imitationSteps);
            }
            return cmdTrainPlan(tpWorld, tpEpisodes, grpoCfg, imitationWalks,
                                imitationSteps, tpOut, tpTelemetry, tpTrace);
        }
        if (*plan)
            return cmdPlan(plGraph, plStart, plGoal, plAlpha, plBeta, plInterval, plDisable,
                           plOut);
        if (*episode) return cmdEpisode(epWorld, epPolicy, epEpisodes, seed, epOut, epTrace);
        if (*evaluate) return cmdEvaluate(evPred, evRef, evWorld, evReport, evThreshold);
    } catch (const GeoplanError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
