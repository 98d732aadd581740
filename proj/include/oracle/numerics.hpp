#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "oracle/types.hpp"

// Hand-derived forward/backward rules for every function the model and the
// losses consume. No taping: each operation returns its value together with
// the gradients (or enough state to form them), and callers chain them.
//
// Summation order is fixed (Eigen's, row-major storage) so a given seed and
// platform reproduce runs bitwise.

namespace oracle {

// ---------------------------------------------------------------------------
// Affine maps

template <typename DX, typename DW, typename DB>
Mat<typename DX::Scalar> affine_forward(const Eigen::MatrixBase<DX>& X,
                                        const Eigen::MatrixBase<DW>& W,
                                        const Eigen::MatrixBase<DB>& bias) {
    if (X.cols() != W.rows() || W.cols() != bias.size())
        throw DataError("affine_forward: shape mismatch " +
                        std::to_string(X.rows()) + "x" + std::to_string(X.cols()) + " * " +
                        std::to_string(W.rows()) + "x" + std::to_string(W.cols()) +
                        " + bias[" + std::to_string(bias.size()) + "]");
    Mat<typename DX::Scalar> Y = X * W;
    Y.rowwise() += bias.transpose();
    return Y;
}

template <typename Scalar>
struct AffineGrads {
    Mat<Scalar> dX, dW;
    Vec<Scalar> dbias;
};

template <typename Scalar>
AffineGrads<Scalar> affine_backward(const Mat<Scalar>& X, const Mat<Scalar>& W,
                                    const Mat<Scalar>& dY) {
    if (dY.rows() != X.rows() || dY.cols() != W.cols() || X.cols() != W.rows())
        throw DataError("affine_backward: shape mismatch");
    AffineGrads<Scalar> g;
    g.dX = dY * W.transpose();
    g.dW = X.transpose() * dY;
    g.dbias = dY.colwise().sum().transpose();
    return g;
}

// ---------------------------------------------------------------------------
// Activations

enum class Activation { Tanh, Relu, Identity };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::Identity: return "identity";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    if (s == "identity") return Activation::Identity;
    throw DataError("unknown activation \"" + s + "\"");
}

template <typename Scalar>
Mat<Scalar> activation_forward(Activation kind, const Mat<Scalar>& X) {
    switch (kind) {
        case Activation::Tanh: return X.array().tanh().matrix();
        case Activation::Relu: return X.array().max(Scalar(0)).matrix();
        case Activation::Identity: return X;
    }
    return X;
}

// dX = dY .* f'(X), with f' evaluated at the pre-activation X.
template <typename Scalar>
Mat<Scalar> activation_backward(Activation kind, const Mat<Scalar>& X, const Mat<Scalar>& dY) {
    require_same_shape(X, dY, "activation_backward");
    switch (kind) {
        case Activation::Tanh: {
            Mat<Scalar> t = X.array().tanh().matrix();
            return (dY.array() * (Scalar(1) - t.array().square())).matrix();
        }
        case Activation::Relu:
            return (dY.array() * (X.array() > Scalar(0)).template cast<Scalar>()).matrix();
        case Activation::Identity: return dY;
    }
    return dY;
}

// ---------------------------------------------------------------------------
// Cosine similarity (the pairwise similarity the objectives are built on)

inline constexpr double kNormFloor = 1e-12;

struct CosineSim {
    double value;
    Vector grad_a, grad_b;
};

// value = <a,b>/(|a||b|); grad_a = b/(|a||b|) - value * a/|a|^2.
// A near-zero norm is corrupt input, not similarity 0, hence the error.
inline CosineSim cosine_sim(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw DataError("cosine_sim: length mismatch " + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()));
    const double na = a.norm(), nb = b.norm();
    if (na <= kNormFloor || nb <= kNormFloor)
        throw DataError("cosine_sim: degenerate vector (norm <= 1e-12)");
    CosineSim out;
    const double inv = 1.0 / (na * nb);
    out.value = a.dot(b) * inv;
    out.grad_a = b * inv - (out.value / (na * na)) * a;
    out.grad_b = a * inv - (out.value / (nb * nb)) * b;
    return out;
}

inline double cosine_value(const Vector& a, const Vector& b) {
    const double na = a.norm(), nb = b.norm();
    if (na <= kNormFloor || nb <= kNormFloor)
        throw DataError("cosine_sim: degenerate vector (norm <= 1e-12)");
    return a.dot(b) / (na * nb);
}

// ---------------------------------------------------------------------------
// Mean squared error over all entries

struct MseResult {
    double value;
    Matrix dA;  // gradient w.r.t. A; gradient w.r.t. B is -dA
};

inline MseResult mse(const Matrix& A, const Matrix& B) {
    require_same_shape(A, B, "mse");
    MseResult out;
    const double cnt = static_cast<double>(A.size());
    Matrix diff = A - B;
    out.value = diff.squaredNorm() / cnt;
    out.dA = (2.0 / cnt) * diff;
    return out;
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy (max-subtracted for stability)

struct SoftmaxXent {
    double value;
    Matrix dlogits;   // (softmax - onehot)/N
    double accuracy;  // argmax == label fraction, ties to the lowest index
};

inline SoftmaxXent softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    const Index N = logits.rows(), L = logits.cols();
    if (static_cast<Index>(labels.size()) != N)
        throw DataError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                        " labels for " + std::to_string(N) + " rows");
    SoftmaxXent out;
    out.dlogits.resize(N, L);
    double loss = 0.0;
    Index hits = 0;
    for (Index i = 0; i < N; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= L)
            throw DataError("softmax_cross_entropy: label " + std::to_string(y) +
                            " out of range [0," + std::to_string(L) + ") at row " +
                            std::to_string(i));
        const double mx = logits.row(i).maxCoeff();
        Eigen::RowVectorXd z = logits.row(i).array() - mx;
        const double lse = std::log(z.array().exp().sum());
        loss += lse - z(y);
        out.dlogits.row(i) = (z.array() - lse).exp().matrix();
        out.dlogits(i, y) -= 1.0;
        Index arg = 0;
        logits.row(i).maxCoeff(&arg);
        if (arg == y) ++hits;
    }
    out.value = loss / static_cast<double>(N);
    out.dlogits /= static_cast<double>(N);
    out.accuracy = static_cast<double>(hits) / static_cast<double>(N);
    return out;
}

// ---------------------------------------------------------------------------
// Central-difference oracle

inline Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                         const Vector& x, double h) {
    if (!(h > 0.0)) throw DataError("finite_difference_gradient: h must be > 0");
    Vector g(x.size());
    Vector probe = x;
    for (Index i = 0; i < x.size(); ++i) {
        probe(i) = x(i) + h;
        const double fp = f(probe);
        probe(i) = x(i) - h;
        const double fm = f(probe);
        probe(i) = x(i);
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("finite_difference_gradient: non-finite f at coordinate " +
                               std::to_string(i));
        g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Relative error as used by every gradient check in the test suite.
inline double rel_error(const Vector& a, const Vector& b) {
    const double denom = std::max({a.norm(), b.norm(), 1e-12});
    return (a - b).norm() / denom;
}

}  // namespace oracle
