#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "absa/backend.hpp"
#include "json.hpp"

namespace absa::models {

enum class OutputHead {
    Sigmoid,  // independent per-class sigmoid, BCE summed over classes
    Softmax,  // softmax over classes, cross-entropy
};

struct MlpConfig {
    /// Input, hidden..., output. Hidden layers use ReLU.
    std::vector<std::size_t> layers;
    OutputHead head = OutputHead::Sigmoid;
    /// Inverted dropout on the input of the final linear layer, training only.
    double dropout = 0.3;

    void validate() const;
};

struct MlpTrainParams {
    double lr = 0.005;
    std::size_t epochs = 10;
    std::size_t batch = 16;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct MlpGradients {
    double loss = 0.0;
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;
    /// d loss / d input, batch x input.
    Eigen::MatrixXd dX;
};

struct MlpModel {
    MlpConfig config;
    std::vector<Eigen::MatrixXd> W;  // layer l: out x in
    std::vector<Eigen::VectorXd> b;
    bool trained = false;
    std::uint64_t seed = 0;
    /// Mean training loss (no dropout) after each epoch.
    std::vector<double> loss_history;

    /// He-normal weights, zero biases.
    static MlpModel init(const MlpConfig& config, std::uint64_t seed);

    /// Rows are samples. Returns probabilities, batch x output.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X) const;
    std::vector<double> predict(const FeatureVector& x) const;

    /// Mean loss over the batch; `mask` (batch x final-layer input) multiplies
    /// the final layer's input when given.
    double loss(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T, const Eigen::MatrixXd* mask = nullptr) const;
    MlpGradients loss_and_gradients(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T,
                                    const Eigen::MatrixXd* mask = nullptr) const;

    std::size_t input_dim() const { return config.layers.front(); }
    std::size_t output_dim() const { return config.layers.back(); }

    nlohmann::json to_json() const;
    static MlpModel from_json(const nlohmann::json& j);
};

/// Mini-batch Adam over a seeded shuffle each epoch. Throws on a NaN loss,
/// naming the learning rate and batch index.
MlpModel mlp_train(const std::vector<FeatureVector>& X, const std::vector<std::vector<double>>& targets,
                   const MlpConfig& config, const MlpTrainParams& params);

Eigen::MatrixXd to_matrix(const std::vector<FeatureVector>& rows, std::size_t cols);

}  // namespace absa::models
