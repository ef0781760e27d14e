#pragma once

#include <variant>
#include <vector>

#include "ivccp/numkit/adam.hpp"
#include "ivccp/numkit/matrix.hpp"
#include "ivccp/numkit/rng.hpp"

namespace ivccp {

/// Feed-forward network: tanh on hidden layers, identity on the output.
/// weights[l] is (layer_sizes[l+1] x layer_sizes[l]).
struct MlpParams {
    std::vector<int> layer_sizes;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Vector> biases;

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    Eigen::Index parameter_count() const;

    bool operator==(const MlpParams&) const = default;
};

struct LogisticLoss {
    double label;  // 0 or 1; loss = log(1 + e^o) - label * o
};
struct SquaredLoss {
    double target;  // loss = (o - target)^2 / 2
};
using MlpLoss = std::variant<LogisticLoss, SquaredLoss>;

struct MlpTrainConfig {
    int epochs = 300;
    double lr = 1e-2;

    bool operator==(const MlpTrainConfig&) const = default;
};

/// Zero network of the given shape.
MlpParams mlp_zeros(const std::vector<int>& layer_sizes);

/// Glorot-uniform initialization, biases zero.
MlpParams mlp_init(const std::vector<int>& layer_sizes, RngStream& rng);

/// Scalar output (first output unit).
double mlp_forward(const MlpParams& params, const Vector& x);

/// Output for every row of X.
Vector mlp_forward_batch(const MlpParams& params, const Matrix& X);

/// Gradient of a per-example loss via backpropagation; same shape as params.
MlpParams mlp_gradient(const MlpParams& params, const Vector& x, const MlpLoss& loss);

/// Sum over rows of upstream(i) * d output(x_i) / d params.
MlpParams mlp_backward_batch(const MlpParams& params, const Matrix& X, const Vector& upstream);

/// Mean logistic-loss gradient over the batch (pos labelled 1, neg labelled 0).
MlpParams mlp_logistic_gradient(const MlpParams& params, const Matrix& pos, const Matrix& neg);

Vector mlp_flatten(const MlpParams& params);
MlpParams mlp_unflatten(const std::vector<int>& layer_sizes, const Vector& flat);

/// Full-batch logistic training of a pos (label 1) vs neg (label 0) classifier
/// with adam_minimize. layer_sizes excludes the input size, which is taken
/// from pos.cols(); the last entry must be 1.
MlpParams mlp_train(const Matrix& pos, const Matrix& neg, const std::vector<int>& hidden_and_output,
                    const MlpTrainConfig& cfg, RngStream& rng);

double sigmoid(double v);

}  // namespace ivccp
