#include "ivccp/nn.hpp"

#include <cmath>

#include "ivccp/error.hpp"

namespace ivccp {
namespace {

void check_shape(const std::vector<int>& sizes) {
    if (sizes.size() < 2) throw InputError("mlp: need at least input and output layers");
    for (int s : sizes)
        if (s < 1) throw InputError("mlp: layer sizes must be positive");
}

// Row-wise activations of every layer; acts[0] is the input batch.
std::vector<Eigen::MatrixXd> forward_all(const MlpParams& p, const Eigen::MatrixXd& X) {
    const std::size_t L = p.weights.size();
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(L + 1);
    acts.push_back(X);
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd z = acts.back() * p.weights[l].transpose();
        z.rowwise() += p.biases[l].transpose();
        if (l + 1 < L) z = z.array().tanh();
        acts.push_back(std::move(z));
    }
    return acts;
}

// Backpropagates output-error rows `delta` (n x out) and returns summed gradients.
MlpParams backward_all(const MlpParams& p, const std::vector<Eigen::MatrixXd>& acts, Eigen::MatrixXd delta) {
    MlpParams g = mlp_zeros(p.layer_sizes);
    for (std::size_t l = p.weights.size(); l-- > 0;) {
        g.weights[l] = delta.transpose() * acts[l];
        g.biases[l] = delta.colwise().sum().transpose();
        if (l == 0) break;
        Eigen::MatrixXd back = delta * p.weights[l];
        delta = back.array() * (1.0 - acts[l].array().square());
    }
    return g;
}

}  // namespace

double sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

Eigen::Index MlpParams::parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
        n += static_cast<Eigen::Index>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
    return n;
}

MlpParams mlp_zeros(const std::vector<int>& layer_sizes) {
    check_shape(layer_sizes);
    MlpParams p;
    p.layer_sizes = layer_sizes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        p.weights.push_back(Eigen::MatrixXd::Zero(layer_sizes[l + 1], layer_sizes[l]));
        p.biases.push_back(Vector::Zero(layer_sizes[l + 1]));
    }
    return p;
}

MlpParams mlp_init(const std::vector<int>& layer_sizes, RngStream& rng) {
    MlpParams p = mlp_zeros(layer_sizes);
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        const double a = std::sqrt(6.0 / (layer_sizes[l] + layer_sizes[l + 1]));
        for (Eigen::Index r = 0; r < p.weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < p.weights[l].cols(); ++c) p.weights[l](r, c) = rng.uniform(-a, a);
    }
    return p;
}

double mlp_forward(const MlpParams& params, const Vector& x) {
    if (x.size() != params.input_size()) throw InputError("mlp: input dimension mismatch");
    Vector a = x;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        Vector z = params.weights[l] * a + params.biases[l];
        a = l + 1 < params.weights.size() ? Vector(z.array().tanh()) : z;
    }
    return a(0);
}

Vector mlp_forward_batch(const MlpParams& params, const Matrix& X) {
    if (X.cols() != params.input_size()) throw InputError("mlp: input dimension mismatch");
    return forward_all(params, X).back().col(0);
}

MlpParams mlp_gradient(const MlpParams& params, const Vector& x, const MlpLoss& loss) {
    if (x.size() != params.input_size()) throw InputError("mlp: input dimension mismatch");
    const auto acts = forward_all(params, x.transpose());
    const double out = acts.back()(0, 0);
    const double dout = std::visit(
        [out](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, LogisticLoss>)
                return sigmoid(out) - l.label;
            else
                return out - l.target;
        },
        loss);
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(1, params.output_size());
    delta(0, 0) = dout;
    return backward_all(params, acts, delta);
}

MlpParams mlp_backward_batch(const MlpParams& params, const Matrix& X, const Vector& upstream) {
    if (X.cols() != params.input_size()) throw InputError("mlp: input dimension mismatch");
    if (upstream.size() != X.rows()) throw InputError("mlp: upstream length mismatch");
    const auto acts = forward_all(params, X);
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(X.rows(), params.output_size());
    delta.col(0) = upstream;
    return backward_all(params, acts, delta);
}

MlpParams mlp_logistic_gradient(const MlpParams& params, const Matrix& pos, const Matrix& neg) {
    const Eigen::Index n = pos.rows() + neg.rows();
    Eigen::MatrixXd X(n, params.input_size());
    X.topRows(pos.rows()) = pos;
    X.bottomRows(neg.rows()) = neg;
    const auto acts = forward_all(params, X);
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(n, params.output_size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double label = i < pos.rows() ? 1.0 : 0.0;
        delta(i, 0) = (sigmoid(acts.back()(i, 0)) - label) / static_cast<double>(n);
    }
    return backward_all(params, acts, delta);
}

Vector mlp_flatten(const MlpParams& params) {
    Vector flat(params.parameter_count());
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        const auto& W = params.weights[l];
        for (Eigen::Index r = 0; r < W.rows(); ++r)
            for (Eigen::Index c = 0; c < W.cols(); ++c) flat(k++) = W(r, c);
        flat.segment(k, params.biases[l].size()) = params.biases[l];
        k += params.biases[l].size();
    }
    return flat;
}

MlpParams mlp_unflatten(const std::vector<int>& layer_sizes, const Vector& flat) {
    MlpParams p = mlp_zeros(layer_sizes);
    if (flat.size() != p.parameter_count()) throw InputError("mlp: flat parameter length mismatch");
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        auto& W = p.weights[l];
        for (Eigen::Index r = 0; r < W.rows(); ++r)
            for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = flat(k++);
        p.biases[l] = flat.segment(k, p.biases[l].size());
        k += p.biases[l].size();
    }
    return p;
}

MlpParams mlp_train(const Matrix& pos, const Matrix& neg, const std::vector<int>& hidden_and_output,
                    const MlpTrainConfig& cfg, RngStream& rng) {
    if (pos.rows() == 0 || neg.rows() == 0) throw InputError("mlp_train: empty class");
    if (pos.cols() != neg.cols()) throw InputError("mlp_train: class column counts differ");
    if (hidden_and_output.empty() || hidden_and_output.back() != 1)
        throw InputError("mlp_train: network must end in a single output");
    std::vector<int> sizes{static_cast<int>(pos.cols())};
    sizes.insert(sizes.end(), hidden_and_output.begin(), hidden_and_output.end());

    const MlpParams init = mlp_init(sizes, rng);
    AdamConfig adam;
    adam.steps = cfg.epochs;
    adam.lr = cfg.lr;
    const Vector theta = adam_minimize(
        [&](const Vector& flat) { return mlp_flatten(mlp_logistic_gradient(mlp_unflatten(sizes, flat), pos, neg)); },
        mlp_flatten(init), adam);
    return mlp_unflatten(sizes, theta);
}

}  // namespace ivccp
