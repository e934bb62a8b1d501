#include "absa/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "absa/common.hpp"

namespace absa::models {

using nlohmann::json;

void MlpConfig::validate() const {
    if (layers.size() < 2) throw ConfigError("mlp needs at least an input and an output layer");
    for (auto n : layers) {
        if (n == 0) throw ConfigError("mlp layer sizes must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (head == OutputHead::Softmax && layers.back() < 2) throw ConfigError("softmax head needs two or more outputs");
}

Eigen::MatrixXd to_matrix(const std::vector<FeatureVector>& rows, std::size_t cols) {
    Eigen::MatrixXd M(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw Error("feature vector has dimension " + std::to_string(rows[i].size()) +
                                                ", expected " + std::to_string(cols));
        for (std::size_t j = 0; j < cols; ++j) M(i, j) = rows[i][j];
    }
    return M;
}

MlpModel MlpModel::init(const MlpConfig& config, std::uint64_t seed) {
    config.validate();
    MlpModel m;
    m.config = config;
    m.seed = seed;
    Rng rng(mix_seed(seed, 0));
    for (std::size_t l = 0; l + 1 < config.layers.size(); ++l) {
        auto in = config.layers[l], out = config.layers[l + 1];
        std::normal_distribution<double> g(0.0, std::sqrt(2.0 / static_cast<double>(in)));
        Eigen::MatrixXd W(out, in);
        for (Eigen::Index r = 0; r < W.rows(); ++r) {
            for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = g(rng);
        }
        m.W.push_back(std::move(W));
        m.b.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out)));
    }
    return m;
}

namespace {

struct Pass {
    std::vector<Eigen::MatrixXd> Z;  // pre-activations per layer
    std::vector<Eigen::MatrixXd> A;  // A[0] = X; A[l+1] = layer l output (masked for the final input)
    Eigen::MatrixXd logits;
};

Pass run_forward(const MlpModel& m, const Eigen::MatrixXd& X, const Eigen::MatrixXd* mask) {
    if (static_cast<std::size_t>(X.cols()) != m.input_dim()) throw Error("mlp: input dimension mismatch");
    Pass p;
    p.A.push_back(X);
    const std::size_t L = m.W.size();
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd in = p.A.back();
        if (l + 1 == L && mask) {
            in = in.cwiseProduct(*mask);
            p.A.back() = in;
        }
        Eigen::MatrixXd z = (in * m.W[l].transpose()).rowwise() + m.b[l].transpose();
        p.Z.push_back(z);
        if (l + 1 < L) p.A.push_back(z.cwiseMax(0.0));
        else p.logits = z;
    }
    return p;
}

Eigen::MatrixXd output_probs(OutputHead head, const Eigen::MatrixXd& z) {
    if (head == OutputHead::Sigmoid) {
        return z.unaryExpr([](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); });
    }
    Eigen::MatrixXd p(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        double mx = z.row(i).maxCoeff();
        Eigen::RowVectorXd e = (z.row(i).array() - mx).exp().matrix();
        p.row(i) = e / e.sum();
    }
    return p;
}

double batch_loss(OutputHead head, const Eigen::MatrixXd& z, const Eigen::MatrixXd& T) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        if (head == OutputHead::Sigmoid) {
            for (Eigen::Index c = 0; c < z.cols(); ++c) {
                double v = z(i, c);
                total += std::max(v, 0.0) - v * T(i, c) + std::log1p(std::exp(-std::abs(v)));
            }
        } else {
            double mx = z.row(i).maxCoeff();
            double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
            for (Eigen::Index c = 0; c < z.cols(); ++c) total -= T(i, c) * (z(i, c) - lse);
        }
    }
    return total / static_cast<double>(z.rows());
}

}  // namespace

Eigen::MatrixXd MlpModel::forward(const Eigen::MatrixXd& X) const {
    return output_probs(config.head, run_forward(*this, X, nullptr).logits);
}

std::vector<double> MlpModel::predict(const FeatureVector& x) const {
    Eigen::MatrixXd p = forward(to_matrix({x}, input_dim()));
    return {p.data(), p.data() + p.size()};
}

double MlpModel::loss(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T, const Eigen::MatrixXd* mask) const {
    return batch_loss(config.head, run_forward(*this, X, mask).logits, T);
}

MlpGradients MlpModel::loss_and_gradients(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T,
                                          const Eigen::MatrixXd* mask) const {
    if (T.rows() != X.rows() || static_cast<std::size_t>(T.cols()) != output_dim()) {
        throw Error("mlp: target shape mismatch");
    }
    auto p = run_forward(*this, X, mask);
    MlpGradients g;
    g.loss = batch_loss(config.head, p.logits, T);
    const std::size_t L = W.size();
    g.dW.resize(L);
    g.db.resize(L);
    // Both heads: d loss / d logits = (P - T) / batch.
    Eigen::MatrixXd dZ = (output_probs(config.head, p.logits) - T) / static_cast<double>(X.rows());
    for (std::size_t l = L; l-- > 0;) {
        g.dW[l] = dZ.transpose() * p.A[l];
        g.db[l] = dZ.colwise().sum().transpose();
        Eigen::MatrixXd dA = dZ * W[l];
        if (l + 1 == L && mask) dA = dA.cwiseProduct(*mask);
        if (l == 0) {
            g.dX = dA;
        } else {
            dZ = dA.cwiseProduct(p.Z[l - 1].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        }
    }
    return g;
}

namespace {

json matrix_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(M.cols()));
        for (Eigen::Index c = 0; c < M.cols(); ++c) row[static_cast<std::size_t>(c)] = M(r, c);
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, std::size_t rows, std::size_t cols) {
    if (j.size() != rows) throw ParseError("mlp: weight matrix has the wrong number of rows");
    Eigen::MatrixXd M(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        auto row = j[r].get<std::vector<double>>();
        if (row.size() != cols) throw ParseError("mlp: weight matrix has the wrong number of columns");
        for (std::size_t c = 0; c < cols; ++c) M(r, c) = row[c];
    }
    return M;
}

}  // namespace

json MlpModel::to_json() const {
    json layers = json::array();
    for (std::size_t l = 0; l < W.size(); ++l) {
        std::vector<double> bias(b[l].data(), b[l].data() + b[l].size());
        layers.push_back({{"W", matrix_json(W[l])}, {"b", bias}});
    }
    return {{"layers", config.layers},
            {"head", config.head == OutputHead::Sigmoid ? "sigmoid" : "softmax"},
            {"hidden_activation", "relu"},
            {"dropout", config.dropout},
            {"trained", trained},
            {"seed", seed},
            {"loss_history", loss_history},
            {"weights", layers}};
}

MlpModel MlpModel::from_json(const json& j) {
    MlpModel m;
    m.config.layers = j.at("layers").get<std::vector<std::size_t>>();
    auto head = j.at("head").get<std::string>();
    if (head != "sigmoid" && head != "softmax") throw ParseError("mlp: unknown head '" + head + "'");
    m.config.head = head == "sigmoid" ? OutputHead::Sigmoid : OutputHead::Softmax;
    m.config.dropout = j.at("dropout").get<double>();
    m.config.validate();
    m.trained = j.at("trained").get<bool>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.loss_history = j.value("loss_history", std::vector<double>{});
    const auto& ws = j.at("weights");
    if (ws.size() + 1 != m.config.layers.size()) throw ParseError("mlp: layer count does not match weights");
    for (std::size_t l = 0; l < ws.size(); ++l) {
        auto in = m.config.layers[l], out = m.config.layers[l + 1];
        m.W.push_back(matrix_from_json(ws[l].at("W"), out, in));
        auto bias = ws[l].at("b").get<std::vector<double>>();
        if (bias.size() != out) throw ParseError("mlp: bias has the wrong length");
        m.b.push_back(Eigen::Map<Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size())));
    }
    return m;
}

MlpModel mlp_train(const std::vector<FeatureVector>& X, const std::vector<std::vector<double>>& targets,
                   const MlpConfig& config, const MlpTrainParams& params) {
    config.validate();
    if (X.size() != targets.size()) throw Error("mlp: X and targets differ in length");
    if (X.empty()) throw Error("mlp: empty training set");
    if (params.batch == 0) throw ConfigError("mlp batch size must be positive");
    if (!(params.lr > 0.0)) throw ConfigError("mlp learning rate must be positive");

    auto model = MlpModel::init(config, params.seed);
    const Eigen::MatrixXd Xall = to_matrix(X, model.input_dim());
    const Eigen::MatrixXd Tall = to_matrix(targets, model.output_dim());
    const std::size_t L = model.W.size();
    const auto final_in = static_cast<Eigen::Index>(config.layers[L - 1]);

    std::vector<Eigen::MatrixXd> mW, vW;
    std::vector<Eigen::VectorXd> mb, vb;
    for (std::size_t l = 0; l < L; ++l) {
        mW.push_back(Eigen::MatrixXd::Zero(model.W[l].rows(), model.W[l].cols()));
        vW.push_back(mW.back());
        mb.push_back(Eigen::VectorXd::Zero(model.b[l].size()));
        vb.push_back(mb.back());
    }

    std::vector<std::size_t> order(X.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(params.seed, 1));
    Rng dropout_rng(mix_seed(params.seed, 2));
    std::bernoulli_distribution keep(1.0 - config.dropout);
    const double keep_scale = 1.0 / (1.0 - config.dropout);
    std::size_t step = 0, batch_index = 0;

    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < order.size(); start += params.batch, ++batch_index) {
            const std::size_t n = std::min(params.batch, order.size() - start);
            Eigen::MatrixXd xb(n, Xall.cols()), tb(n, Tall.cols());
            for (std::size_t r = 0; r < n; ++r) {
                xb.row(r) = Xall.row(order[start + r]);
                tb.row(r) = Tall.row(order[start + r]);
            }
            Eigen::MatrixXd mask;
            if (config.dropout > 0.0) {
                mask.resize(n, final_in);
                for (Eigen::Index r = 0; r < mask.rows(); ++r) {
                    for (Eigen::Index c = 0; c < mask.cols(); ++c) mask(r, c) = keep(dropout_rng) ? keep_scale : 0.0;
                }
            }
            auto g = model.loss_and_gradients(xb, tb, config.dropout > 0.0 ? &mask : nullptr);
            if (!std::isfinite(g.loss)) {
                std::ostringstream msg;
                msg << "mlp training diverged: loss is " << g.loss << " at epoch " << epoch + 1 << ", batch "
                    << batch_index << " (lr " << params.lr << ", batch size " << params.batch << ")";
                throw Error(msg.str());
            }
            ++step;
            const double c1 = 1.0 - std::pow(params.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(params.beta2, static_cast<double>(step));
            auto adam = [&](auto& param, auto& m, auto& v, const auto& grad) {
                m = params.beta1 * m + (1.0 - params.beta1) * grad;
                v = params.beta2 * v + (1.0 - params.beta2) * grad.cwiseProduct(grad);
                param.array() -= params.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + params.eps);
            };
            for (std::size_t l = 0; l < L; ++l) {
                adam(model.W[l], mW[l], vW[l], g.dW[l]);
                adam(model.b[l], mb[l], vb[l], g.db[l]);
            }
        }
        model.loss_history.push_back(model.loss(Xall, Tall));
    }
    model.trained = params.epochs > 0;
    return model;
}

}  // namespace absa::models
