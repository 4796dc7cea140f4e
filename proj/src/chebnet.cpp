#include "phylo/chebnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "phylo/error.hpp"

namespace phylo {

using nlohmann::json;

ChebNetModel init_chebnet(int in_dim, int hidden, int n_classes, int degree, Rng& rng) {
    if (in_dim < 1 || hidden < 1 || n_classes < 1 || degree < 1)
        throw InvalidInputError("init_chebnet: dimensions must be positive");
    ChebNetModel model;
    model.degree = degree;
    model.in_dim = in_dim;
    model.hidden = hidden;
    model.n_classes = n_classes;
    auto glorot = [&rng](int rows, int cols) {
        const double s = std::sqrt(6.0 / (rows + cols));
        Eigen::MatrixXd w(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform(-s, s);
        return w;
    };
    for (int k = 0; k < degree; ++k) {
        model.w1.push_back(glorot(in_dim, hidden));
        model.w2.push_back(glorot(hidden, n_classes));
    }
    return model;
}

Eigen::MatrixXd build_train_adjacency(const GroundTruthTree& truth, const std::vector<int>& nodes,
                                      bool symmetric) {
    const int m = static_cast<int>(nodes.size());
    std::map<int, int> pos;
    for (int i = 0; i < m; ++i) pos[nodes[i]] = i;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (const auto& [p, c] : truth.immediate_edges) {
        if (!pos.count(p) || !pos.count(c))
            throw InvalidInputError("build_train_adjacency: edge references unknown node");
        A(pos[p], pos[c]) = 1.0;
        if (symmetric) A(pos[c], pos[p]) = 1.0;
    }
    return A;
}

Eigen::MatrixXd build_test_adjacency(const Eigen::MatrixXd& distances) {
    const int m = static_cast<int>(distances.rows());
    if (distances.cols() != m) throw InvalidInputError("build_test_adjacency: matrix not square");
    double mean = 0.0;
    int count = 0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i != j) {
                mean += distances(i, j);
                ++count;
            }
    if (count > 0) mean /= count;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i != j && distances(i, j) < mean) A(i, j) = 1.0;
    // Symmetrize in case the caller passed an asymmetric measure.
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            const double v = std::max(A(i, j), A(j, i));
            A(i, j) = A(j, i) = v;
        }
    return A;
}

std::vector<Eigen::MatrixXd> chebyshev_filterbank(const Eigen::MatrixXd& adjacency, int degree,
                                                  AdjacencyNorm norm) {
    const int m = static_cast<int>(adjacency.rows());
    if (adjacency.cols() != m) throw InvalidInputError("chebyshev_filterbank: matrix not square");
    if (degree < 1) throw InvalidInputError("chebyshev_filterbank: degree must be >= 1");

    Eigen::MatrixXd A = adjacency;
    for (int i = 0; i < m; ++i)
        if (A.row(i).sum() <= 0.0) A(i, i) = 1.0;  // degree floor via self-loop

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
    Eigen::MatrixXd L;
    if (norm == AdjacencyNorm::Symmetric) {
        Eigen::VectorXd dis = A.rowwise().sum().array().sqrt().inverse();
        L = I - Eigen::MatrixXd(dis.asDiagonal() * A * dis.asDiagonal());
        L = 0.5 * (L + L.transpose()).eval();
    } else {
        Eigen::VectorXd di = A.rowwise().sum().array().inverse();
        L = I - Eigen::MatrixXd(di.asDiagonal() * A);
    }
    // lambda_max bounded by 2 for the normalized Laplacian.
    const Eigen::MatrixXd Lt = L - I;

    std::vector<Eigen::MatrixXd> T;
    T.reserve(degree);
    T.push_back(I);
    if (degree >= 2) T.push_back(Lt);
    for (int k = 2; k < degree; ++k) T.push_back(2.0 * Lt * T[k - 1] - T[k - 2]);
    return T;
}

namespace {

struct SetActivations {
    std::vector<Eigen::MatrixXd> t;  // filterbank
    Eigen::MatrixXd pre1;            // M x H, pre-ReLU
    Eigen::MatrixXd hidden;          // M x H, post-ReLU (and dropout)
    Eigen::MatrixXd logits;          // M x C
    Eigen::MatrixXd mask;            // dropout mask incl. 1/(1-p); empty if unused
};

SetActivations forward_set(const ChebNetModel& model, const GraphSet& set, AdjacencyNorm norm,
                           const Eigen::MatrixXd* dropout_mask) {
    if (set.features.cols() != model.in_dim)
        throw InvalidInputError("forward: feature dimension mismatch");
    if (set.features.rows() != set.adjacency.rows())
        throw InvalidInputError("forward: feature/adjacency row mismatch");

    SetActivations act;
    act.t = chebyshev_filterbank(set.adjacency, model.degree, norm);

    const int m = static_cast<int>(set.features.rows());
    act.pre1 = Eigen::MatrixXd::Zero(m, model.hidden);
    for (int k = 0; k < model.degree; ++k)
        act.pre1.noalias() += act.t[k] * (set.features * model.w1[k]);
    act.hidden = act.pre1.cwiseMax(0.0);
    if (dropout_mask) {
        act.mask = *dropout_mask;
        act.hidden = act.hidden.cwiseProduct(act.mask);
    }
    act.logits = Eigen::MatrixXd::Zero(m, model.n_classes);
    for (int k = 0; k < model.degree; ++k)
        act.logits.noalias() += act.t[k] * (act.hidden * model.w2[k]);
    return act;
}

/// Returns summed CE over labeled rows and writes dLoss/dLogits rows
/// (before dividing by the labeled count) into `grad` when non-null.
double cross_entropy_rows(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                          int n_classes, Eigen::MatrixXd* grad, int* labeled) {
    double loss = 0.0;
    if (grad) *grad = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
    for (int i = 0; i < logits.rows(); ++i) {
        const int label = labels.empty() ? 0 : labels[i];
        if (label < 1) continue;
        if (label > n_classes)
            throw InvalidInputError("depth label " + std::to_string(label) +
                                    " exceeds n_classes=" + std::to_string(n_classes));
        const double mx = logits.row(i).maxCoeff();
        const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
        loss += lse - logits(i, label - 1);
        if (grad) {
            grad->row(i) = (logits.row(i).array() - lse).exp();
            (*grad)(i, label - 1) -= 1.0;
        }
        if (labeled) ++(*labeled);
    }
    return loss;
}

double weight_penalty(const ChebNetModel& model, double weight_decay) {
    double acc = 0.0;
    for (const auto& w : model.w1) acc += w.squaredNorm();
    for (const auto& w : model.w2) acc += w.squaredNorm();
    return 0.5 * weight_decay * acc;
}

struct LossGrad {
    double loss = 0.0;
    double accuracy = 0.0;
    ModelGradients grads;
};

LossGrad batch_pass(const ChebNetModel& model, const GraphBatch& batch, double weight_decay,
                    AdjacencyNorm norm, bool want_grads,
                    const std::vector<Eigen::MatrixXd>* masks) {
    LossGrad out;
    if (want_grads) {
        for (int k = 0; k < model.degree; ++k) {
            out.grads.w1.push_back(Eigen::MatrixXd::Zero(model.in_dim, model.hidden));
            out.grads.w2.push_back(Eigen::MatrixXd::Zero(model.hidden, model.n_classes));
        }
    }

    // First pass: count labeled nodes so per-row gradients can be scaled.
    int total_labeled = 0;
    for (const auto& set : batch)
        for (int l : set.labels)
            if (l >= 1) ++total_labeled;
    if (total_labeled == 0) throw InvalidInputError("batch has no labeled nodes");

    double loss_sum = 0.0;
    int correct = 0;
    for (size_t s = 0; s < batch.size(); ++s) {
        const GraphSet& set = batch[s];
        const Eigen::MatrixXd* mask = masks ? &(*masks)[s] : nullptr;
        SetActivations act = forward_set(model, set, norm, mask);

        Eigen::MatrixXd grad_rows;
        int dummy = 0;
        loss_sum += cross_entropy_rows(act.logits, set.labels, model.n_classes,
                                       want_grads ? &grad_rows : nullptr, &dummy);
        for (int i = 0; i < act.logits.rows(); ++i) {
            if (set.labels.empty() || set.labels[i] < 1) continue;
            int arg = 0;
            act.logits.row(i).maxCoeff(&arg);
            if (arg + 1 == set.labels[i]) ++correct;
        }

        if (want_grads) {
            grad_rows /= static_cast<double>(total_labeled);
            // dW2[k] = (T_k H)^T G ; dH = sum_k T_k^T G W2_k^T
            Eigen::MatrixXd d_hidden =
                Eigen::MatrixXd::Zero(act.hidden.rows(), act.hidden.cols());
            for (int k = 0; k < model.degree; ++k) {
                out.grads.w2[k].noalias() += (act.t[k] * act.hidden).transpose() * grad_rows;
                d_hidden.noalias() += act.t[k].transpose() * grad_rows * model.w2[k].transpose();
            }
            if (mask) d_hidden = d_hidden.cwiseProduct(*mask);
            const Eigen::MatrixXd d_pre1 =
                d_hidden.cwiseProduct((act.pre1.array() > 0.0).cast<double>().matrix());
            for (int k = 0; k < model.degree; ++k)
                out.grads.w1[k].noalias() += (act.t[k] * set.features).transpose() * d_pre1;
        }
    }

    out.loss = loss_sum / total_labeled + weight_penalty(model, weight_decay);
    out.accuracy = static_cast<double>(correct) / total_labeled;
    if (want_grads && weight_decay != 0.0) {
        for (int k = 0; k < model.degree; ++k) {
            out.grads.w1[k] += weight_decay * model.w1[k];
            out.grads.w2[k] += weight_decay * model.w2[k];
        }
    }
    return out;
}

}  // namespace

Eigen::MatrixXd forward(const ChebNetModel& model, const GraphBatch& batch, bool dropout_active,
                        Rng* rng, double dropout_rate, AdjacencyNorm norm) {
    int total = 0;
    for (const auto& set : batch) total += static_cast<int>(set.features.rows());
    Eigen::MatrixXd logits(total, model.n_classes);
    int row = 0;
    for (const auto& set : batch) {
        Eigen::MatrixXd mask;
        if (dropout_active) {
            if (!rng) throw InvalidInputError("forward: dropout requires an rng");
            mask.resize(set.features.rows(), model.hidden);
            const double keep = 1.0 - dropout_rate;
            for (int i = 0; i < mask.rows(); ++i)
                for (int j = 0; j < mask.cols(); ++j)
                    mask(i, j) = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
        }
        const SetActivations act =
            forward_set(model, set, norm, dropout_active ? &mask : nullptr);
        logits.middleRows(row, act.logits.rows()) = act.logits;
        row += static_cast<int>(act.logits.rows());
    }
    return logits;
}

double batch_loss(const ChebNetModel& model, const GraphBatch& batch, double weight_decay,
                  AdjacencyNorm norm) {
    return batch_pass(model, batch, weight_decay, norm, false, nullptr).loss;
}

std::pair<double, ModelGradients> loss_and_gradients(const ChebNetModel& model,
                                                     const GraphBatch& batch, double weight_decay,
                                                     AdjacencyNorm norm) {
    LossGrad lg = batch_pass(model, batch, weight_decay, norm, true, nullptr);
    return {lg.loss, std::move(lg.grads)};
}

namespace {

struct AdamState {
    std::vector<Eigen::MatrixXd> m1, v1, m2, v2;
    int t = 0;

    explicit AdamState(const ChebNetModel& model) {
        for (int k = 0; k < model.degree; ++k) {
            m1.push_back(Eigen::MatrixXd::Zero(model.in_dim, model.hidden));
            v1.push_back(Eigen::MatrixXd::Zero(model.in_dim, model.hidden));
            m2.push_back(Eigen::MatrixXd::Zero(model.hidden, model.n_classes));
            v2.push_back(Eigen::MatrixXd::Zero(model.hidden, model.n_classes));
        }
    }

    void step(ChebNetModel& model, const ModelGradients& g, double lr) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++t;
        const double corr1 = 1.0 - std::pow(b1, t);
        const double corr2 = 1.0 - std::pow(b2, t);
        auto update = [&](Eigen::MatrixXd& w, Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                          const Eigen::MatrixXd& grad) {
            m = b1 * m + (1.0 - b1) * grad;
            v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
            w -= lr * (m / corr1)
                     .cwiseQuotient((v / corr2).cwiseSqrt() +
                                    Eigen::MatrixXd::Constant(v.rows(), v.cols(), eps));
        };
        for (size_t k = 0; k < m1.size(); ++k) {
            update(model.w1[k], m1[k], v1[k], g.w1[k]);
            update(model.w2[k], m2[k], v2[k], g.w2[k]);
        }
    }
};

}  // namespace

TrainHistory train(ChebNetModel& model, const GraphBatch& train_batch,
                   const GraphBatch& val_batch, const TrainOptions& opts, Rng& rng) {
    if (train_batch.empty()) throw InvalidInputError("train: empty training batch");
    if (val_batch.empty()) throw InvalidInputError("train: empty validation batch");

    TrainHistory history;
    AdamState adam(model);
    ChebNetModel best = model;
    double best_val = std::numeric_limits<double>::infinity();
    int stall = 0;

    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::vector<Eigen::MatrixXd> masks;
        const bool use_dropout = opts.dropout > 0.0;
        if (use_dropout) {
            const double keep = 1.0 - opts.dropout;
            for (const auto& set : train_batch) {
                Eigen::MatrixXd mask(set.features.rows(), model.hidden);
                for (int i = 0; i < mask.rows(); ++i)
                    for (int j = 0; j < mask.cols(); ++j)
                        mask(i, j) = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
                masks.push_back(std::move(mask));
            }
        }

        LossGrad lg = batch_pass(model, train_batch, opts.weight_decay, opts.norm, true,
                                 use_dropout ? &masks : nullptr);
        adam.step(model, lg.grads, opts.learning_rate);

        LossGrad val = batch_pass(model, val_batch, opts.weight_decay, opts.norm, false, nullptr);
        history.train_loss.push_back(lg.loss);
        history.train_accuracy.push_back(lg.accuracy);
        history.val_loss.push_back(val.loss);
        history.val_accuracy.push_back(val.accuracy);

        if (val.loss < best_val) {
            best_val = val.loss;
            best = model;
            history.best_epoch = epoch;
            stall = 0;
        } else if (++stall >= opts.patience) {
            break;
        }
    }

    model = best;
    return history;
}

std::vector<int> predict_depths(const ChebNetModel& model, const Eigen::MatrixXd& features,
                                const Eigen::MatrixXd& adjacency, AdjacencyNorm norm) {
    GraphSet set;
    set.features = features;
    set.adjacency = adjacency;
    const SetActivations act = forward_set(model, set, norm, nullptr);
    std::vector<int> labels(act.logits.rows());
    for (int i = 0; i < act.logits.rows(); ++i) {
        int arg = 0;
        act.logits.row(i).maxCoeff(&arg);
        labels[i] = arg + 1;
    }
    return labels;
}

double depth_accuracy(const ChebNetModel& model, const GraphBatch& batch, AdjacencyNorm norm) {
    return batch_pass(model, batch, 0.0, norm, false, nullptr).accuracy;
}

DegreeSelection select_chebyshev_degree(int in_dim, int hidden, int n_classes,
                                        const std::vector<int>& degrees,
                                        const GraphBatch& train_batch, const GraphBatch& val_batch,
                                        const TrainOptions& opts, Rng& rng) {
    if (degrees.empty()) throw InvalidInputError("select_chebyshev_degree: no candidates");
    DegreeSelection best;
    double best_val = std::numeric_limits<double>::infinity();
    for (int k : degrees) {
        Rng local = rng.child(static_cast<std::uint64_t>(k));
        ChebNetModel model = init_chebnet(in_dim, hidden, n_classes, k, local);
        TrainHistory hist = train(model, train_batch, val_batch, opts, local);
        const double val = batch_pass(model, val_batch, opts.weight_decay, opts.norm, false,
                                      nullptr)
                               .loss;
        if (val < best_val) {
            best_val = val;
            best.degree = k;
            best.model = std::move(model);
            best.history = std::move(hist);
        }
    }
    return best;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
    return m;
}

}  // namespace

void save_model(const ChebNetModel& model, const std::string& path,
                const Provenance* provenance) {
    json doc;
    doc["version"] = 1;
    if (provenance)
        doc["meta"] = {{"tool_version", provenance->tool_version},
                       {"seed", provenance->seed},
                       {"config_hash", provenance->config_hash}};
    doc["degree"] = model.degree;
    doc["in_dim"] = model.in_dim;
    doc["hidden"] = model.hidden;
    doc["n_classes"] = model.n_classes;
    doc["w1"] = json::array();
    doc["w2"] = json::array();
    for (const auto& w : model.w1) doc["w1"].push_back(matrix_to_json(w));
    for (const auto& w : model.w2) doc["w2"].push_back(matrix_to_json(w));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("short write to " + path);
}

ChebNetModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    if (doc.at("version").get<int>() != 1)
        throw IoError(path + ": unsupported model file version");

    ChebNetModel model;
    model.degree = doc.at("degree").get<int>();
    model.in_dim = doc.at("in_dim").get<int>();
    model.hidden = doc.at("hidden").get<int>();
    model.n_classes = doc.at("n_classes").get<int>();
    for (const auto& w : doc.at("w1")) model.w1.push_back(matrix_from_json(w));
    for (const auto& w : doc.at("w2")) model.w2.push_back(matrix_from_json(w));
    if (static_cast<int>(model.w1.size()) != model.degree ||
        static_cast<int>(model.w2.size()) != model.degree)
        throw ValidationError(path + ": weight count disagrees with degree");
    return model;
}

}  // namespace phylo
