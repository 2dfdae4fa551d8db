#pragma once

// Group-relative policy optimization: clipped surrogate over candidate
// groups with an exact categorical KL anchor to the post-imitation reference.

#include <cstdint>
#include <vector>

#include "geoplan/common.hpp"
#include "geoplan/foresight.hpp"
#include "geoplan/planner.hpp"
#include "geoplan/reward.hpp"

namespace geoplan {

struct GrpoConfig {
    int groupSize{16};
    double clip{0.2};
    double klWeight{0.01};
    double betaGeo{0.5};
    double learningRate{0.002};
    int updates{1000};
    int epochLength{8};  // updates per pi_old snapshot
    uint64_t seed{0};

    void validate() const {
        if (groupSize < 2) fail(GeoplanError::Kind::Parameter, "grpo: G must be >= 2");
        if (clip <= 0 || clip >= 1) fail(GeoplanError::Kind::Parameter, "grpo: 0 < eps < 1");
        if (klWeight < 0) fail(GeoplanError::Kind::Parameter, "grpo: klWeight >= 0");
    }
};

struct UpdateRecord {
    int update{0};
    double meanReward{0.0};
    double objective{0.0};
    double klEstimate{0.0};
    double clippedFraction{0.0};
};

// (1/G) sum_k min(rho*A, clip(rho)*A) - klWeight * klEst, rho = exp(new-old).
// Optionally reports d(objective)/d(newLogProb) per candidate and the
// fraction of candidates whose surrogate is clipped inactive.
inline double grpoObjective(const std::vector<double>& oldLogProbs,
                            const std::vector<double>& newLogProbs,
                            const std::vector<double>& advantages, double klEst,
                            const GrpoConfig& cfg,
                            std::vector<double>* dNewLogProbs = nullptr,
                            double* clippedFraction = nullptr) {
    cfg.validate();
    const size_t g = oldLogProbs.size();
    if (newLogProbs.size() != g || advantages.size() != g || g == 0)
        fail(GeoplanError::Kind::Dimension, "grpoObjective: array size mismatch");
    for (size_t k = 0; k < g; ++k)
        if (!std::isfinite(oldLogProbs[k]) || !std::isfinite(newLogProbs[k]))
            fail(GeoplanError::Kind::Numeric, "grpoObjective: non-finite log prob");

    if (dNewLogProbs) dNewLogProbs->assign(g, 0.0);
    double surrogate = 0.0;
    int clipped = 0;
    for (size_t k = 0; k < g; ++k) {
        double rho = std::exp(newLogProbs[k] - oldLogProbs[k]);
        double clippedRho = std::clamp(rho, 1.0 - cfg.clip, 1.0 + cfg.clip);
        double unclippedTerm = rho * advantages[k];
        double clippedTerm = clippedRho * advantages[k];
        surrogate += std::min(unclippedTerm, clippedTerm);
        bool active = unclippedTerm <= clippedTerm;  // min picks the rho branch
        if (!active) clipped++;
        // d(rho*A)/dlogp_new = rho*A on the active branch, 0 when clipped
        if (dNewLogProbs && active) (*dNewLogProbs)[k] = unclippedTerm / g;
    }
    if (clippedFraction) *clippedFraction = static_cast<double>(clipped) / g;
    return surrogate / g - cfg.klWeight * klEst;
}

struct KlProbeState {
    std::vector<int> history;
    VectorXd cond;
};

// Exact categorical KL(pi_theta || pi_ref) averaged over probe states.
// Optionally accumulates d(KL)/d(theta).
inline double klEstimate(const PolicyParams& params, const PolicyParams& refParams,
                         const std::vector<KlProbeState>& states,
                         PolicyGrads* grads = nullptr) {
    if (states.empty()) return 0.0;
    double total = 0.0;
    const double invN = 1.0 / static_cast<double>(states.size());
    for (const auto& s : states) {
        PolicyForwardTrace trace;
        VectorXd logits = policyForward(s.history, s.cond, params, &trace);
        VectorXd refLogits = policyForward(s.history, s.cond, refParams);
        VectorXd logp = logSoftmax(logits);
        VectorXd logq = logSoftmax(refLogits);
        VectorXd p = logp.array().exp();
        double kl = p.dot(logp - logq);
        total += kl;
        if (grads) {
            // dKL/dlogit_b = p_b * ((logp_b - logq_b) - KL)
            VectorXd dLogits = p.cwiseProduct(((logp - logq).array() - kl).matrix());
            policyBackward(params, trace, dLogits * invN, *grads);
        }
    }
    return total * invN;
}

// ---- training orchestration ----

// Precomputed per-world assets shared by imitation pretraining, GRPO, and evaluation: the
// satellite canvas and per-cell conditioning embeddings.
struct WorldAssets {
    RasterTile canvas;
    std::vector<VectorXd> cellCond;  // indexed by cell id
    uint64_t satEncoderSeed{0};
    uint64_t groundEncoderSeed{0};
    int condDim{16};
    int groundDim{16};
    int cellPx{3};

    static WorldAssets build(const GridWorld& world, uint64_t satSeed, uint64_t groundSeed,
                             int condDim = 16, int groundDim = 16, int cellPx = 3) {
        WorldAssets a;
        a.canvas = renderCanvas(world, cellPx);
        a.satEncoderSeed = satSeed;
        a.groundEncoderSeed = groundSeed;
        a.condDim = condDim;
        a.groundDim = groundDim;
        a.cellPx = cellPx;
        a.cellCond.assign(static_cast<size_t>(world.size) * world.size,
                          VectorXd::Zero(condDim));
        const int patchPx = 3 * cellPx;
        for (int r = 0; r < world.size; ++r)
            for (int c = 0; c < world.size; ++c) {
                RasterTile patch = cropPatch(a.canvas, world.cellCenter({r, c}), patchPx);
                FeatureMap fm = encodeTile(patch, patchPx, condDim, satSeed);
                VectorXd z(condDim);
                for (int d = 0; d < condDim; ++d) z[d] = fm.data[d];
                a.cellCond[static_cast<size_t>(r) * world.size + c] = z;
            }
        return a;
    }
};

struct GrpoTrainResult {
    PolicyParams params;
    std::vector<UpdateRecord> records;
};

// One row per candidate per update; serializable as the reward-trace CSV
// (episode, step, k, class, rProg, rGeo, rTotal, advantage).
struct RewardTraceRow {
    int episode{0};
    int step{0};
    int k{0};
    TransitionClass cls{TransitionClass::Invalid};
    double rProg{0.0};
    double rGeo{0.0};
    double rTotal{0.0};
    double advantage{0.0};
};

namespace detail {

// Uniform draw over the on-path states of a sampled episode, paired with the
// next reference waypoint as subgoal. Reference paths come from chained BFS.
struct TrainState {
    Cell cell;
    Cell subgoal;
    int episodeIndex{0};
    int stepIndex{0};
};

inline std::vector<Cell> referenceCellPath(const GridWorld& world, const EpisodeSpec& spec) {
    std::vector<Cell> path{spec.start};
    Cell cur = spec.start;
    std::vector<Cell> targets = spec.stops;
    targets.push_back(spec.goal);
    for (const Cell& t : targets) {
        std::vector<int> dist = bfsDistances(world, t);
        while (cur != t) {
            Cell best = cur;
            int bestD = dist[world.cellId(cur)];
            // deterministic tie-break: fixed action order
            for (Action a : {Action::Up, Action::Down, Action::Left, Action::Right}) {
                auto next = step(world, cur, a);
                if (next && dist[world.cellId(*next)] >= 0 &&
                    dist[world.cellId(*next)] < bestD) {
                    best = *next;
                    bestD = dist[world.cellId(*next)];
                    break;
                }
            }
            cur = best;
            path.push_back(cur);
        }
    }
    return path;
}

inline TrainState sampleTrainState(const GridWorld& world,
                                   const std::vector<EpisodeSpec>& episodes,
                                   RngStream& rng) {
    int e = static_cast<int>(rng.uniformInt(0, static_cast<int64_t>(episodes.size()) - 1));
    const EpisodeSpec& spec = episodes[e];
    std::vector<Cell> path = referenceCellPath(world, spec);
    if (path.size() < 2) return {spec.start, spec.goal, e, 0};
    int64_t i = rng.uniformInt(0, static_cast<int64_t>(path.size()) - 2);
    return {path[i], path[i + 1], e, static_cast<int>(i)};
}

}  // namespace detail

// Stage-2 loop: snapshot pi_old per epoch, draw G one-step continuations per
// sampled on-path state, score with geo-consistent rewards, normalize within
// the group, and ascend the clipped objective with a KL anchor to the
// post-imitation reference.
inline GrpoTrainResult grpoTrain(const GridWorld& world,
                                 const std::vector<EpisodeSpec>& episodes,
                                 const PolicyParams& policyInit, const WorldAssets& assets,
                                 const GrpoConfig& cfg,
                                 std::vector<RewardTraceRow>* trace = nullptr) {
    cfg.validate();
    if (episodes.empty()) fail(GeoplanError::Kind::Parameter, "grpoTrain: no episodes");

    GrpoTrainResult result;
    result.params = policyInit;
    PolicyParams refParams = policyInit;  // pi_ref: the post-imitation snapshot, fixed
    PolicyParams oldParams = policyInit;

    RngStream rng(cfg.seed, "grpo");
    for (int update = 0; update < cfg.updates; ++update) {
        if (update % cfg.epochLength == 0) oldParams = result.params;

        detail::TrainState ts = detail::sampleTrainState(world, episodes, rng);
        const VectorXd& cond = assets.cellCond[world.cellId(ts.subgoal)];
        std::vector<int> history{world.cellId(ts.cell)};

        VectorXd oldLogits = policyForward(history, cond, oldParams);
        VectorXd oldLogp = logSoftmax(oldLogits);
        VectorXd oldProbs = softmax(oldLogits);

        // G candidate one-step continuations from pi_old
        std::vector<Action> actions;
        std::vector<std::optional<Cell>> candidates;
        std::vector<double> oldLogProbs;
        for (int k = 0; k < cfg.groupSize; ++k) {
            Action a = sampleCategorical(oldProbs, rng);
            actions.push_back(a);
            candidates.push_back(step(world, ts.cell, a));
            oldLogProbs.push_back(oldLogp[static_cast<int>(a)]);
        }

        ProgressMap progress = ProgressMap::compute(world, ts.subgoal);
        EmbeddingVector zNext{cond};
        RewardBundle rewards =
            scoreGroup(world, ts.cell, candidates, progress, zNext,
                       assets.groundEncoderSeed, assets.groundDim, cfg.betaGeo);
        if (trace)
            for (int k = 0; k < cfg.groupSize; ++k)
                trace->push_back({ts.episodeIndex, ts.stepIndex, k, rewards.classes[k],
                                  rewards.rProg[k], rewards.rGeo[k], rewards.rTotal[k],
                                  rewards.advantage[k]});

        PolicyForwardTrace trace;
        VectorXd newLogits = policyForward(history, cond, result.params, &trace);
        if (newLogits.cwiseAbs().mean() > 50.0)
            fail(GeoplanError::Kind::Divergence, "grpoTrain: logits diverged");
        VectorXd newLogp = logSoftmax(newLogits);
        std::vector<double> newLogProbs;
        for (Action a : actions) newLogProbs.push_back(newLogp[static_cast<int>(a)]);

        PolicyGrads klGrads = PolicyGrads::zeroLike(result.params);
        std::vector<KlProbeState> probe{{history, cond}};
        double kl = klEstimate(result.params, refParams, probe, &klGrads);

        std::vector<double> dNewLogProbs;
        double clippedFraction = 0.0;
        double objective = grpoObjective(oldLogProbs, newLogProbs, rewards.advantage, kl,
                                         cfg, &dNewLogProbs, &clippedFraction);

        // d(surrogate)/dlogits via dlogp(a)/dlogits = onehot(a) - softmax
        VectorXd probs = softmax(newLogits);
        VectorXd dLogits = VectorXd::Zero(kActionCount);
        for (int k = 0; k < cfg.groupSize; ++k) {
            if (dNewLogProbs[k] == 0.0) continue;
            VectorXd d = -probs;
            d[static_cast<int>(actions[k])] += 1.0;
            dLogits += dNewLogProbs[k] * d;
        }
        PolicyGrads grads = PolicyGrads::zeroLike(result.params);
        policyBackward(result.params, trace, dLogits, grads);
        grads.accumulate(klGrads, -cfg.klWeight);

        // gradient ascent on the objective
        sgdStep(result.params, grads, -cfg.learningRate);

        UpdateRecord rec;
        rec.update = update;
        rec.meanReward = 0.0;
        for (double r : rewards.rTotal) rec.meanReward += r;
        rec.meanReward /= cfg.groupSize;
        rec.objective = objective;
        rec.klEstimate = kl;
        rec.clippedFraction = clippedFraction;
        result.records.push_back(rec);
    }
    return result;
}

}  // namespace geoplan
