#pragma once

#include "lvqcf/program.hpp"

#include <Eigen/Dense>

#include <vector>

namespace lvqcf {

enum class RegularizerKind { weighted_manhattan, euclidean, generalized_l2 };

const char* to_string(RegularizerKind kind);

// Distance-from-original objective theta(x', x).
class Regularizer {
public:
    static Regularizer manhattan(VectorXd alpha);
    static Regularizer manhattan_unit(Index dim);
    static Regularizer euclidean();
    static Regularizer generalized_l2(MatrixXd lambda);

    RegularizerKind kind() const { return kind_; }
    const VectorXd& alpha() const { return alpha_; }
    const MatrixXd& lambda() const { return lambda_; }

    // weighted-manhattan: sum_j alpha_j |x_j - xcf_j|
    // euclidean:          ||x - xcf||^2
    // generalized-l2:     (x - xcf)^T Lambda (x - xcf)
    double evaluate(const VectorXd& xcf, const VectorXd& x) const;

    // Sum of the Manhattan weights; 1 per feature for the other kinds.
    double weight_sum(Index dim) const;

private:
    Regularizer() = default;

    RegularizerKind kind_ = RegularizerKind::euclidean;
    VectorXd alpha_;
    MatrixXd lambda_;
};

// Inverse median absolute deviation per feature (columns of `data`).
// A zero MAD falls back to weight 1; the indices of such features are
// appended to `zero_mad_features` when given.
VectorXd mad_weights(const MatrixXd& data, std::vector<Index>* zero_mad_features = nullptr);

// Median with the midpoint rule for even lengths.
double median(std::vector<double> values);

// Objective of the counterfactual program over the feature variables x'
// (columns [0, features)) and any auxiliary variables after them.
//
// weighted-manhattan: epigraph LP over (x', beta), minimize 1^T beta with
//   Upsilon x' - Upsilon x <= beta, -Upsilon x' + Upsilon x <= beta,
//   beta >= 0, Upsilon = diag(alpha).
// euclidean:      0.5 x'^T x' - x^T x'
// generalized-l2: 0.5 x'^T Lambda x' - (Lambda x)^T x'
//
// The quadratic forms drop the constant and a factor 2, so their optimal
// value differs from theta; use Regularizer::evaluate for reporting.
struct ObjectiveSpec {
    ProgramSpec program;
    Index features = 0;

    // Program objective minimized over the auxiliary variables for a
    // fixed x'.
    double value_at(const VectorXd& xcf) const;

    // Lifts a feature vector to a full program vector (beta at its
    // smallest feasible value).
    VectorXd lift(const VectorXd& xcf) const;

    // Widens the program by `extra` trailing variables (zero objective).
    void append_variables(Index extra);

    // Strips the auxiliary variables.
    VectorXd features_of(const VectorXd& z) const { return z.head(features); }

    VectorXd anchor;      // the original input x
    VectorXd upsilon;     // Manhattan weights, empty otherwise
};

ObjectiveSpec build_objective(const Regularizer& reg, const VectorXd& x);

}  // namespace lvqcf
