#pragma once

// Cross-view alignment: residual MLP token aggregation into a shared
// embedding space, symmetric InfoNCE with analytic gradients, cosine
// retrieval, and rotational heading refinement.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geoplan/checkpoint.hpp"
#include "geoplan/common.hpp"

namespace geoplan {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct EmbeddingVector {
    VectorXd values;

    int dim() const { return static_cast<int>(values.size()); }

    void validateUnitNorm() const {
        if (std::abs(values.norm() - 1.0) > 1e-6)
            fail(GeoplanError::Kind::Parameter, "embedding not unit norm");
    }
};

inline double cosineSim(const VectorXd& a, const VectorXd& b) {
    double na = a.norm(), nb = b.norm();
    if (na <= 0 || nb <= 0)
        fail(GeoplanError::Kind::Degenerate, "cosine of zero vector");
    return a.dot(b) / (na * nb);
}

// Residual MLP aggregator: stage i applies X <- W2(relu(W1 X)) + X to the
// i-th token vector, then the stack is flattened and projected to dim D.
struct MixModuleParams {
    std::vector<MatrixXd> w1;  // per stage, hidden x n
    std::vector<MatrixXd> w2;  // per stage, n x hidden
    MatrixXd projection;       // D x (stages * n)

    int stages() const { return static_cast<int>(w1.size()); }
    int tokenLen() const { return w1.empty() ? 0 : static_cast<int>(w1[0].cols()); }
    int outputDim() const { return static_cast<int>(projection.rows()); }

    static MixModuleParams init(int stages, int tokenLen, int hidden, int outDim,
                                RngStream& rng, double scale = 0.1) {
        MixModuleParams p;
        auto randn = [&](int rows, int cols) {
            MatrixXd m(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) m(r, c) = rng.normal(0.0, scale);
            return m;
        };
        for (int i = 0; i < stages; ++i) {
            p.w1.push_back(randn(hidden, tokenLen));
            p.w2.push_back(randn(tokenLen, hidden));
        }
        p.projection = randn(outDim, stages * tokenLen);
        return p;
    }

    void validate(int tokenCount, int tokenLen) const {
        if (static_cast<int>(w1.size()) != tokenCount || w2.size() != w1.size())
            fail(GeoplanError::Kind::Dimension, "mix: stage count mismatch");
        for (size_t i = 0; i < w1.size(); ++i) {
            if (w1[i].cols() != tokenLen || w2[i].rows() != tokenLen ||
                w2[i].cols() != w1[i].rows())
                fail(GeoplanError::Kind::Dimension, "mix: stage shape mismatch");
        }
        if (projection.cols() != static_cast<Eigen::Index>(w1.size()) * tokenLen)
            fail(GeoplanError::Kind::Dimension, "mix: projection shape mismatch");
    }
};

// Intermediate activations kept for the backward pass.
struct MixForwardTrace {
    std::vector<VectorXd> inputs;       // X per stage
    std::vector<VectorXd> preact;       // W1 X per stage
    VectorXd flat;                      // concatenated residual outputs
    VectorXd preNorm;                   // projection * flat
    VectorXd output;                    // normalized embedding
};

inline EmbeddingVector mixForward(const std::vector<VectorXd>& tokens,
                                  const MixModuleParams& params,
                                  MixForwardTrace* trace = nullptr) {
    if (tokens.empty()) fail(GeoplanError::Kind::Dimension, "mix: empty token list");
    const int n = static_cast<int>(tokens[0].size());
    params.validate(static_cast<int>(tokens.size()), n);

    VectorXd flat(params.stages() * n);
    MixForwardTrace local;
    MixForwardTrace& tr = trace ? *trace : local;
    tr.inputs.clear();
    tr.preact.clear();
    for (int i = 0; i < params.stages(); ++i) {
        if (tokens[i].size() != n)
            fail(GeoplanError::Kind::Dimension, "mix: token length mismatch");
        VectorXd pre = params.w1[i] * tokens[i];
        VectorXd out = params.w2[i] * pre.cwiseMax(0.0) + tokens[i];
        flat.segment(static_cast<Eigen::Index>(i) * n, n) = out;
        tr.inputs.push_back(tokens[i]);
        tr.preact.push_back(std::move(pre));
    }
    VectorXd preNorm = params.projection * flat;
    double norm = preNorm.norm();
    if (norm <= 1e-12)
        fail(GeoplanError::Kind::Degenerate, "mix: zero pre-normalization embedding");
    tr.flat = std::move(flat);
    tr.preNorm = preNorm;
    tr.output = preNorm / norm;
    return {tr.output};
}

struct MixGrads {
    std::vector<MatrixXd> w1;
    std::vector<MatrixXd> w2;
    MatrixXd projection;

    static MixGrads zeroLike(const MixModuleParams& p) {
        MixGrads g;
        for (const auto& m : p.w1) g.w1.push_back(MatrixXd::Zero(m.rows(), m.cols()));
        for (const auto& m : p.w2) g.w2.push_back(MatrixXd::Zero(m.rows(), m.cols()));
        g.projection = MatrixXd::Zero(p.projection.rows(), p.projection.cols());
        return g;
    }
};

// Accumulates dLoss/dParams given dLoss/dEmbedding for one forward pass.
inline void mixBackward(const MixModuleParams& params, const MixForwardTrace& trace,
                        const VectorXd& dOutput, MixGrads& grads) {
    const double norm = trace.preNorm.norm();
    // through L2 normalization: d/dpre = (I - z z^T) / norm
    VectorXd dPre = (dOutput - trace.output * trace.output.dot(dOutput)) / norm;
    grads.projection += dPre * trace.flat.transpose();
    VectorXd dFlat = params.projection.transpose() * dPre;
    const int n = params.tokenLen();
    for (int i = 0; i < params.stages(); ++i) {
        VectorXd dOut = dFlat.segment(static_cast<Eigen::Index>(i) * n, n);
        VectorXd hidden = trace.preact[i].cwiseMax(0.0);
        grads.w2[i] += dOut * hidden.transpose();
        VectorXd dHidden = params.w2[i].transpose() * dOut;
        VectorXd dPreact =
            dHidden.cwiseProduct((trace.preact[i].array() > 0.0).cast<double>().matrix());
        grads.w1[i] += dPreact * trace.inputs[i].transpose();
    }
}

// ---- symmetric InfoNCE ----

struct AlignBatch {
    std::vector<VectorXd> ground;
    std::vector<VectorXd> satellite;
    double temperature{0.07};
    // Second-direction denominator: false = standard cross-modal sim(z_s, z_g),
    // true = normalize over satellite-satellite similarities instead.
    bool intraViewDenominator{false};

    int size() const { return static_cast<int>(ground.size()); }

    void validate() const {
        if (ground.empty() || ground.size() != satellite.size())
            fail(GeoplanError::Kind::Dimension, "align batch: size mismatch or empty");
        if (temperature <= 0)
            fail(GeoplanError::Kind::Parameter, "align batch: temperature must be > 0");
    }
};

struct InfoNceGradients {
    std::vector<VectorXd> dGround;
    std::vector<VectorXd> dSatellite;
};

namespace detail {

inline MatrixXd logitMatrix(const std::vector<VectorXd>& rows,
                            const std::vector<VectorXd>& cols, double tau) {
    const int n = static_cast<int>(rows.size());
    MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = rows[i].dot(cols[j]) / tau;
    return m;
}

inline MatrixXd softmaxRows(const MatrixXd& logits) {
    MatrixXd p = logits;
    for (int i = 0; i < p.rows(); ++i) {
        double mx = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - mx).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

}  // namespace detail

inline double infoNceLoss(const AlignBatch& batch) {
    batch.validate();
    const int n = batch.size();
    const double tau = batch.temperature;

    MatrixXd gs = detail::logitMatrix(batch.ground, batch.satellite, tau);
    MatrixXd p1 = detail::softmaxRows(gs);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) loss -= std::log(p1(i, i));

    if (!batch.intraViewDenominator) {
        MatrixXd sg = gs.transpose();
        MatrixXd p2 = detail::softmaxRows(sg);
        for (int i = 0; i < n; ++i) loss -= std::log(p2(i, i));
    } else {
        // numerator sim(z_s^i, z_g^i), denominator over sim(z_s^i, z_s^j)
        MatrixXd ss = detail::logitMatrix(batch.satellite, batch.satellite, tau);
        for (int i = 0; i < n; ++i) {
            double mx = ss.row(i).maxCoeff();
            double lse = mx + std::log((ss.row(i).array() - mx).exp().sum());
            loss -= gs.transpose()(i, i) - lse;
        }
    }
    return loss / (2.0 * n);
}

inline InfoNceGradients infoNceGrad(const AlignBatch& batch) {
    batch.validate();
    const int n = batch.size();
    const double tau = batch.temperature;
    const double scale = 1.0 / (2.0 * n);

    InfoNceGradients g;
    const int dim = static_cast<int>(batch.ground[0].size());
    g.dGround.assign(n, VectorXd::Zero(dim));
    g.dSatellite.assign(n, VectorXd::Zero(dim));

    MatrixXd gs = detail::logitMatrix(batch.ground, batch.satellite, tau);
    MatrixXd p1 = detail::softmaxRows(gs);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double d = scale * (p1(i, j) - (i == j ? 1.0 : 0.0)) / tau;
            g.dGround[i] += d * batch.satellite[j];
            g.dSatellite[j] += d * batch.ground[i];
        }

    if (!batch.intraViewDenominator) {
        MatrixXd p2 = detail::softmaxRows(gs.transpose());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double d = scale * (p2(i, j) - (i == j ? 1.0 : 0.0)) / tau;
                g.dSatellite[i] += d * batch.ground[j];
                g.dGround[j] += d * batch.satellite[i];
            }
    } else {
        MatrixXd ss = detail::logitMatrix(batch.satellite, batch.satellite, tau);
        MatrixXd q = detail::softmaxRows(ss);
        for (int i = 0; i < n; ++i) {
            // numerator term -sim(s_i, g_i)/tau
            g.dSatellite[i] -= scale * batch.ground[i] / tau;
            g.dGround[i] -= scale * batch.satellite[i] / tau;
            // denominator logsumexp over sim(s_i, s_j)/tau
            for (int j = 0; j < n; ++j) {
                double d = scale * q(i, j) / tau;
                g.dSatellite[i] += d * batch.satellite[j];
                g.dSatellite[j] += d * batch.satellite[i];
            }
        }
    }
    return g;
}

// ---- cosine retrieval ----

struct RetrievalEntry {
    int64_t tileId{0};
    EmbeddingVector embedding;
    Vec2 position;
};

struct RetrievalIndex {
    std::vector<RetrievalEntry> entries;

    void validate() const {
        std::vector<int64_t> ids;
        for (const auto& e : entries) {
            e.embedding.validateUnitNorm();
            ids.push_back(e.tileId);
        }
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            fail(GeoplanError::Kind::Parameter, "retrieval index: duplicate tileId");
    }
};

struct RetrievalResult {
    std::vector<int64_t> rankedIds;
    bool kClamped{false};
};

inline RetrievalResult retrieve(const EmbeddingVector& query, const RetrievalIndex& index,
                                int k) {
    if (k < 1) fail(GeoplanError::Kind::Parameter, "retrieve: k must be >= 1");
    if (index.entries.empty()) fail(GeoplanError::Kind::Parameter, "retrieve: empty index");

    RetrievalResult result;
    if (k > static_cast<int>(index.entries.size())) {
        k = static_cast<int>(index.entries.size());
        result.kClamped = true;
    }
    std::vector<std::pair<double, int64_t>> scored;
    scored.reserve(index.entries.size());
    for (const auto& e : index.entries)
        scored.emplace_back(query.values.dot(e.embedding.values), e.tileId);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;  // ties by ascending tileId
    });
    for (int i = 0; i < k; ++i) result.rankedIds.push_back(scored[i].second);
    return result;
}

// Heading from rotational cross-correlation of direction-bin embedding rings:
// theta = 2*pi*argmax_shift mean_r cos(ground[r], sat[(r+shift) mod R]) / R.
inline double refineHeading(const std::vector<VectorXd>& groundRing,
                            const std::vector<VectorXd>& satRing) {
    const int R = static_cast<int>(groundRing.size());
    if (R < 4 || satRing.size() != groundRing.size())
        fail(GeoplanError::Kind::Dimension, "refineHeading: rings must match, R >= 4");

    int bestShift = 0;
    double bestScore = -std::numeric_limits<double>::infinity();
    for (int shift = 0; shift < R; ++shift) {
        double score = 0.0;
        for (int r = 0; r < R; ++r)
            score += cosineSim(groundRing[r], satRing[(r + shift) % R]);
        if (score > bestScore) {  // ties keep the smallest shift
            bestScore = score;
            bestShift = shift;
        }
    }
    return 2.0 * M_PI * bestShift / R;
}

// ---- SGD training on paired token batches ----

struct AlignTrainConfig {
    int steps{500};
    int batchSize{32};
    double learningRate{0.05};
    double temperature{0.07};
    bool intraViewDenominator{false};
    uint64_t seed{0};
};

struct PairedTokenSet {
    // per sample: token stacks for both views
    std::vector<std::vector<VectorXd>> groundTokens;
    std::vector<std::vector<VectorXd>> satTokens;
};

inline void sgdStep(MixModuleParams& p, const MixGrads& g, double lr) {
    for (size_t i = 0; i < p.w1.size(); ++i) {
        p.w1[i] -= lr * g.w1[i];
        p.w2[i] -= lr * g.w2[i];
    }
    p.projection -= lr * g.projection;
}

// One full InfoNCE step over the given sample indices; returns the loss.
inline double alignTrainStep(const PairedTokenSet& data, const std::vector<int>& indices,
                             MixModuleParams& groundParams, MixModuleParams& satParams,
                             double lr, double tau, bool intraView = false) {
    AlignBatch batch;
    batch.temperature = tau;
    batch.intraViewDenominator = intraView;
    std::vector<MixForwardTrace> gTraces(indices.size()), sTraces(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) {
        batch.ground.push_back(
            mixForward(data.groundTokens[indices[i]], groundParams, &gTraces[i]).values);
        batch.satellite.push_back(
            mixForward(data.satTokens[indices[i]], satParams, &sTraces[i]).values);
    }
    double loss = infoNceLoss(batch);
    InfoNceGradients eg = infoNceGrad(batch);
    MixGrads gg = MixGrads::zeroLike(groundParams);
    MixGrads sg = MixGrads::zeroLike(satParams);
    for (size_t i = 0; i < indices.size(); ++i) {
        mixBackward(groundParams, gTraces[i], eg.dGround[i], gg);
        mixBackward(satParams, sTraces[i], eg.dSatellite[i], sg);
    }
    sgdStep(groundParams, gg, lr);
    sgdStep(satParams, sg, lr);
    return loss;
}

// ---- checkpoint adapters ----

inline void mixToStore(const MixModuleParams& p, const std::string& prefix,
                       TensorStore& store) {
    auto putMat = [&](const std::string& name, const MatrixXd& m) {
        std::vector<double> v(m.size());
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                v[static_cast<size_t>(r) * m.cols() + c] = m(r, c);
        store.put(name, {m.rows(), m.cols()}, std::move(v));
    };
    for (int i = 0; i < p.stages(); ++i) {
        putMat(prefix + ".w1." + std::to_string(i), p.w1[i]);
        putMat(prefix + ".w2." + std::to_string(i), p.w2[i]);
    }
    putMat(prefix + ".projection", p.projection);
}

inline MatrixXd matFromStore(const TensorStore& store, const std::string& name) {
    const auto& e = store.get(name);
    if (e.shape.size() != 2)
        fail(GeoplanError::Kind::Dimension, "tensor '" + name + "' is not a matrix");
    MatrixXd m(e.shape[0], e.shape[1]);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            m(r, c) = e.values[static_cast<size_t>(r) * m.cols() + c];
    return m;
}

inline MixModuleParams mixFromStore(const TensorStore& store, const std::string& prefix) {
    MixModuleParams p;
    for (int i = 0;; ++i) {
        std::string w1name = prefix + ".w1." + std::to_string(i);
        if (store.tensors.find(w1name) == store.tensors.end()) break;
        p.w1.push_back(matFromStore(store, w1name));
        p.w2.push_back(matFromStore(store, prefix + ".w2." + std::to_string(i)));
    }
    p.projection = matFromStore(store, prefix + ".projection");
    return p;
}

}  // namespace geoplan
