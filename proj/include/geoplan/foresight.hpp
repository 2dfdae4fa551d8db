#pragma once

// Conditional autoregressive next-state policy: order-1 recurrent hidden
// state over the visited-cell history, additive conditioning on the next
// waypoint's satellite embedding, 5-way categorical action head.
// Supervised initialization draws targets from plausible continuations.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "geoplan/checkpoint.hpp"
#include "geoplan/common.hpp"
#include "geoplan/crossview.hpp"
#include "geoplan/nav_env.hpp"

namespace geoplan {

struct PolicyParams {
    MatrixXd stateEmbed;  // cellCount x E, one learned vector per grid cell
    MatrixXd condProj;    // E x D, mixes the conditioning embedding in
    MatrixXd historyMix;  // E x E, order-1 recurrence
    MatrixXd outputHead;  // 5 x E

    int hiddenDim() const { return static_cast<int>(condProj.rows()); }
    int condDim() const { return static_cast<int>(condProj.cols()); }
    int cellCount() const { return static_cast<int>(stateEmbed.rows()); }

    static PolicyParams init(int cellCount, int hiddenDim, int condDim, RngStream& rng,
                             double scale = 0.1) {
        auto randn = [&](int rows, int cols) {
            MatrixXd m(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) m(r, c) = rng.normal(0.0, scale);
            return m;
        };
        PolicyParams p;
        p.stateEmbed = randn(cellCount, hiddenDim);
        p.condProj = randn(hiddenDim, condDim);
        p.historyMix = randn(hiddenDim, hiddenDim) * 0.1;  // start near memoryless
        p.outputHead = randn(kActionCount, hiddenDim);
        return p;
    }
};

struct PolicyGrads {
    MatrixXd stateEmbed;
    MatrixXd condProj;
    MatrixXd historyMix;
    MatrixXd outputHead;

    static PolicyGrads zeroLike(const PolicyParams& p) {
        return {MatrixXd::Zero(p.stateEmbed.rows(), p.stateEmbed.cols()),
                MatrixXd::Zero(p.condProj.rows(), p.condProj.cols()),
                MatrixXd::Zero(p.historyMix.rows(), p.historyMix.cols()),
                MatrixXd::Zero(p.outputHead.rows(), p.outputHead.cols())};
    }

    void accumulate(const PolicyGrads& o, double w = 1.0) {
        stateEmbed += w * o.stateEmbed;
        condProj += w * o.condProj;
        historyMix += w * o.historyMix;
        outputHead += w * o.outputHead;
    }
};

struct PolicyForwardTrace {
    std::vector<VectorXd> preact;   // per history step, pre-ReLU hidden
    std::vector<VectorXd> hidden;   // per history step, post-ReLU
    std::vector<int> cellIds;
    VectorXd cond;
    VectorXd logits;
};

// hidden_t = relu(historyMix * hidden_{t-1} + stateEmbed[cell_t] + condProj * cond);
// logits = outputHead * hidden_last.
inline VectorXd policyForward(const std::vector<int>& historyCellIds, const VectorXd& cond,
                              const PolicyParams& params,
                              PolicyForwardTrace* trace = nullptr) {
    if (historyCellIds.empty())
        fail(GeoplanError::Kind::Parameter, "policyForward: empty history");
    if (cond.size() != params.condDim())
        fail(GeoplanError::Kind::Dimension, "policyForward: conditioning dim mismatch");

    PolicyForwardTrace local;
    PolicyForwardTrace& tr = trace ? *trace : local;
    tr.preact.clear();
    tr.hidden.clear();
    tr.cellIds = historyCellIds;
    tr.cond = cond;

    VectorXd condTerm = params.condProj * cond;
    VectorXd hidden = VectorXd::Zero(params.hiddenDim());
    for (int cellId : historyCellIds) {
        if (cellId < 0 || cellId >= params.cellCount())
            fail(GeoplanError::Kind::Lookup, "policyForward: unknown cell id");
        VectorXd pre = params.historyMix * hidden +
                       params.stateEmbed.row(cellId).transpose() + condTerm;
        hidden = pre.cwiseMax(0.0);
        tr.preact.push_back(std::move(pre));
        tr.hidden.push_back(hidden);
    }
    tr.logits = params.outputHead * hidden;
    return tr.logits;
}

// Backpropagation through the recurrence; accumulates into `grads`.
inline void policyBackward(const PolicyParams& params, const PolicyForwardTrace& trace,
                           const VectorXd& dLogits, PolicyGrads& grads) {
    const int T = static_cast<int>(trace.cellIds.size());
    grads.outputHead += dLogits * trace.hidden[T - 1].transpose();
    VectorXd dHidden = params.outputHead.transpose() * dLogits;
    VectorXd dCondTerm = VectorXd::Zero(params.hiddenDim());
    for (int t = T - 1; t >= 0; --t) {
        VectorXd dPre =
            dHidden.cwiseProduct((trace.preact[t].array() > 0.0).cast<double>().matrix());
        grads.stateEmbed.row(trace.cellIds[t]) += dPre.transpose();
        dCondTerm += dPre;
        if (t > 0) {
            grads.historyMix += dPre * trace.hidden[t - 1].transpose();
            dHidden = params.historyMix.transpose() * dPre;
        }
    }
    grads.condProj += dCondTerm * trace.cond.transpose();
}

inline VectorXd softmax(const VectorXd& logits) {
    VectorXd p = (logits.array() - logits.maxCoeff()).exp();
    return p / p.sum();
}

inline VectorXd logSoftmax(const VectorXd& logits) {
    double mx = logits.maxCoeff();
    double lse = mx + std::log((logits.array() - mx).exp().sum());
    return logits.array() - lse;
}

struct RolloutStep {
    Cell state;
    VectorXd actionLogits;
    Action sampledAction;
    std::optional<Cell> nextState;  // nullopt = invalid transition
    double logProb{0.0};
};

inline Action sampleCategorical(const VectorXd& probs, RngStream& rng) {
    double u = rng.uniform();
    double acc = 0.0;
    for (int a = 0; a < probs.size(); ++a) {
        acc += probs[a];
        if (u < acc) return static_cast<Action>(a);
    }
    return static_cast<Action>(probs.size() - 1);
}

// Autoregressive sampling; an invalid next state is recorded and terminates
// the rollout. `condSchedule` supplies the per-step conditioning embedding.
inline std::vector<RolloutStep> sampleRollout(
    const GridWorld& world, const Cell& start,
    const std::vector<VectorXd>& condSchedule, const PolicyParams& params,
    RngStream& rng, int horizon, bool greedy = false) {
    if (horizon < 1) fail(GeoplanError::Kind::Parameter, "sampleRollout: horizon >= 1");
    std::vector<RolloutStep> steps;
    std::vector<int> history{world.cellId(start)};
    Cell cur = start;
    for (int t = 0; t < horizon; ++t) {
        const VectorXd& cond =
            condSchedule[std::min<size_t>(t, condSchedule.size() - 1)];
        RolloutStep rs;
        rs.state = cur;
        rs.actionLogits = policyForward(history, cond, params);
        VectorXd probs = softmax(rs.actionLogits);
        if (greedy) {
            int best = 0;
            probs.maxCoeff(&best);
            rs.sampledAction = static_cast<Action>(best);
        } else {
            rs.sampledAction = sampleCategorical(probs, rng);
        }
        rs.logProb = logSoftmax(rs.actionLogits)[static_cast<int>(rs.sampledAction)];
        rs.nextState = step(world, cur, rs.sampledAction);
        bool invalid = !rs.nextState.has_value();
        steps.push_back(rs);
        if (invalid) break;
        cur = *rs.nextState;
        history.push_back(world.cellId(cur));
    }
    return steps;
}

// ---- imitation corpus and loss ----

struct ImitationSample {
    std::vector<int> stateHistory;  // cell ids, most recent last
    VectorXd condEmbedding;
    Action targetAction;
};

struct ImitationCorpus {
    std::vector<ImitationSample> samples;
    int skippedStates{0};  // fully enclosed states encountered during walks
};

namespace detail {

inline std::vector<Action> validActions(const GridWorld& world, const Cell& c) {
    std::vector<Action> out;
    for (Action a : {Action::Up, Action::Down, Action::Left, Action::Right})
        if (step(world, c, a)) out.push_back(a);
    return out;
}

}  // namespace detail

// Plausible continuations at `cell` toward `subgoal`: valid actions that do
// not increase BFS distance, padded repeat-free with further valid actions
// up to K.
inline std::vector<Action> plausibleActions(const GridWorld& world, const Cell& cell,
                                            const std::vector<int>& distToSubgoal,
                                            int K, RngStream& rng) {
    std::vector<Action> valid = detail::validActions(world, cell);
    std::vector<Action> plausible;
    int here = distToSubgoal[world.cellId(cell)];
    for (Action a : valid) {
        Cell next = *step(world, cell, a);
        if (distToSubgoal[world.cellId(next)] >= 0 &&
            distToSubgoal[world.cellId(next)] <= here)
            plausible.push_back(a);
    }
    // repeat-free uniform fill from the remaining valid actions
    std::vector<Action> rest;
    for (Action a : valid)
        if (std::find(plausible.begin(), plausible.end(), a) == plausible.end())
            rest.push_back(a);
    while (static_cast<int>(plausible.size()) < K && !rest.empty()) {
        int64_t j = rng.uniformInt(0, static_cast<int64_t>(rest.size()) - 1);
        plausible.push_back(rest[j]);
        rest.erase(rest.begin() + j);
    }
    if (static_cast<int>(plausible.size()) > K) plausible.resize(K);
    return plausible;
}

struct ImitationBuildConfig {
    int walks{200};
    int walkLength{8};
    int historyWindow{4};
    int K{8};
    int subgoalRadius{1};  // max BFS distance of the sampled subgoal
    uint64_t seed{0};
};

// Seeded random walks; each visited state yields one sample conditioned on a
// subgoal drawn within `subgoalRadius` BFS steps of the state, mirroring the
// execution-time distribution where the conditioning is always the next
// nearby waypoint. The target is drawn uniformly from the strictly
// distance-decreasing actions (falling back to the full plausible set when
// no decreasing move exists). Padding actions are kept out of the
// supervision signal: training on them teaches the argmax policy to walk
// away from its waypoint.
inline ImitationCorpus imitationBuild(const GridWorld& world,
                            const std::vector<VectorXd>& cellCondEmbeddings,
                            const ImitationBuildConfig& cfg) {
    if (cfg.K < 1) fail(GeoplanError::Kind::Parameter, "imitationBuild: K >= 1");
    auto cells = world.traversableCells();
    ImitationCorpus corpus;
    for (int w = 0; w < cfg.walks; ++w) {
        RngStream rng(cfg.seed, "imitation-walk", static_cast<uint64_t>(w));
        Cell cur = cells[rng.uniformInt(0, static_cast<int64_t>(cells.size()) - 1)];
        std::vector<int> history{world.cellId(cur)};
        for (int t = 0; t < cfg.walkLength; ++t) {
            // subgoal: a traversable cell within the radius, excluding cur
            std::vector<int> fromCur = bfsDistances(world, cur);
            std::vector<Cell> near;
            for (const Cell& cand : cells) {
                int d = fromCur[world.cellId(cand)];
                if (d >= 1 && d <= cfg.subgoalRadius) near.push_back(cand);
            }
            if (near.empty()) {
                corpus.skippedStates++;
                break;
            }
            Cell subgoal = near[rng.uniformInt(0, static_cast<int64_t>(near.size()) - 1)];
            std::vector<int> dist = bfsDistances(world, subgoal);
            std::vector<Action> plausible =
                plausibleActions(world, cur, dist, cfg.K, rng);
            if (plausible.empty()) {
                corpus.skippedStates++;
                break;
            }
            ImitationSample sample;
            size_t h0 = history.size() > static_cast<size_t>(cfg.historyWindow)
                            ? history.size() - cfg.historyWindow
                            : 0;
            sample.stateHistory.assign(history.begin() + h0, history.end());
            sample.condEmbedding = cellCondEmbeddings[world.cellId(subgoal)];
            std::vector<Action> decreasing;
            int here = dist[world.cellId(cur)];
            for (Action a : plausible) {
                Cell next = *step(world, cur, a);
                if (dist[world.cellId(next)] >= 0 && dist[world.cellId(next)] < here)
                    decreasing.push_back(a);
            }
            const std::vector<Action>& pool = decreasing.empty() ? plausible : decreasing;
            sample.targetAction =
                pool[rng.uniformInt(0, static_cast<int64_t>(pool.size()) - 1)];
            corpus.samples.push_back(std::move(sample));

            // continue the walk with a uniformly random valid move
            std::vector<Action> valid = detail::validActions(world, cur);
            Action a = valid[rng.uniformInt(0, static_cast<int64_t>(valid.size()) - 1)];
            cur = *step(world, cur, a);
            history.push_back(world.cellId(cur));
        }
    }
    return corpus;
}

// Mean negative log-likelihood of the corpus targets; optionally accumulates
// the analytic gradient (softmax derivative chained through the recurrence).
inline double imitationLoss(const ImitationCorpus& corpus, const PolicyParams& params,
                       PolicyGrads* grads = nullptr) {
    if (corpus.samples.empty())
        fail(GeoplanError::Kind::Parameter, "imitationLoss: empty corpus");
    double loss = 0.0;
    const double invN = 1.0 / static_cast<double>(corpus.samples.size());
    for (const auto& s : corpus.samples) {
        PolicyForwardTrace trace;
        VectorXd logits = policyForward(s.stateHistory, s.condEmbedding, params, &trace);
        VectorXd logp = logSoftmax(logits);
        loss -= logp[static_cast<int>(s.targetAction)];
        if (grads) {
            VectorXd dLogits = softmax(logits);
            dLogits[static_cast<int>(s.targetAction)] -= 1.0;
            policyBackward(params, trace, dLogits * invN, *grads);
        }
    }
    return loss * invN;
}

inline void sgdStep(PolicyParams& p, const PolicyGrads& g, double lr) {
    p.stateEmbed -= lr * g.stateEmbed;
    p.condProj -= lr * g.condProj;
    p.historyMix -= lr * g.historyMix;
    p.outputHead -= lr * g.outputHead;
}

// minibatch SGD on the imitation objective
inline std::vector<double> imitationTrain(const ImitationCorpus& corpus, PolicyParams& params,
                                     int steps, int batchSize, double lr, uint64_t seed) {
    RngStream rng(seed, "imitation-train");
    std::vector<double> losses;
    const int64_t n = static_cast<int64_t>(corpus.samples.size());
    for (int s = 0; s < steps; ++s) {
        ImitationCorpus batch;
        for (int b = 0; b < batchSize; ++b)
            batch.samples.push_back(corpus.samples[rng.uniformInt(0, n - 1)]);
        PolicyGrads grads = PolicyGrads::zeroLike(params);
        losses.push_back(imitationLoss(batch, params, &grads));
        sgdStep(params, grads, lr);
    }
    return losses;
}

// ---- checkpoint adapters ----

inline void policyToStore(const PolicyParams& p, TensorStore& store) {
    auto putMat = [&](const std::string& name, const MatrixXd& m) {
        std::vector<double> v(m.size());
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                v[static_cast<size_t>(r) * m.cols() + c] = m(r, c);
        store.put(name, {m.rows(), m.cols()}, std::move(v));
    };
    putMat("policy.stateEmbed", p.stateEmbed);
    putMat("policy.condProj", p.condProj);
    putMat("policy.historyMix", p.historyMix);
    putMat("policy.outputHead", p.outputHead);
}

inline PolicyParams policyFromStore(const TensorStore& store) {
    PolicyParams p;
    p.stateEmbed = matFromStore(store, "policy.stateEmbed");
    p.condProj = matFromStore(store, "policy.condProj");
    p.historyMix = matFromStore(store, "policy.historyMix");
    p.outputHead = matFromStore(store, "policy.outputHead");
    return p;
}

}  // namespace geoplan
