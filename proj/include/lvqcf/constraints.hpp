#pragma once

#include "lvqcf/lvq_model.hpp"
#include "lvqcf/program.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lvqcf {

// Margin convention: epsilon is measured in squared-distance units, i.e. a
// constraint for the pair (i, j) demands d(x', p_i) + epsilon <= d(x', p_j).
// The (Q, q, r) fields follow the halved expansion
//   d(x', p_i) - d(x', p_j) = 2 * (0.5 x'^T Q x' + x'^T q + r),
// so the program rows carry epsilon / 2.

// x'^T q + r + epsilon / 2 <= 0 for a shared metric Lambda, with
// q = Lambda (p_j - p_i) and r = 0.5 (p_i^T Lambda p_i - p_j^T Lambda p_j).
struct LinearConstraint {
    VectorXd q;
    double r = 0.0;
    std::size_t target = 0;  // i
    std::size_t other = 0;   // j, a prototype with a different label

    // q == 0 and r == 0: the two prototypes coincide and no point can be
    // strictly closer to one of them.
    bool degenerate() const;
    // d(x', p_i) - d(x', p_j)
    double gap(const VectorXd& xcf) const { return 2.0 * (xcf.dot(q) + r); }
    bool satisfied(const VectorXd& xcf, double epsilon, double tol = 0.0) const
    {
        return gap(xcf) + epsilon <= tol;
    }
    // The program row q^T x' <= -r - epsilon / 2.
    LinearRow row(double epsilon) const { return {q, -r - 0.5 * epsilon}; }
};

// Affine minorant rho^T x' + r_tilde of g(x') = 0.5 x'^T Lambda_j x' taken
// at a linearization point x_k.
struct AffineMinorant {
    VectorXd rho;
    double r_tilde = 0.0;
    double value(const VectorXd& x) const { return rho.dot(x) + r_tilde; }
};

// 0.5 x'^T Q x' + x'^T q + r + epsilon / 2 <= 0 for per-prototype metrics,
// with Q = Lambda_i - Lambda_j, q = Lambda_j p_j - Lambda_i p_i and
// r = 0.5 (p_i^T Lambda_i p_i - p_j^T Lambda_j p_j).
struct QuadraticConstraint {
    MatrixXd Q;
    VectorXd q;
    double r = 0.0;
    std::size_t target = 0;
    std::size_t other = 0;
    MatrixXd lambda_i;
    MatrixXd lambda_j;
    std::optional<AffineMinorant> convexified;

    bool degenerate() const;
    // Q positive semi-definite: the row is convex as it stands.
    bool convex() const;
    double gap(const VectorXd& xcf) const { return xcf.dot(Q * xcf) + 2.0 * (xcf.dot(q) + r); }
    bool satisfied(const VectorXd& xcf, double epsilon, double tol = 0.0) const
    {
        return gap(xcf) + epsilon <= tol;
    }

    // Difference-of-convex split f - g with
    //   f(x') = 0.5 x'^T Lambda_i x' + x'^T q + r + epsilon / 2,
    //   g(x') = 0.5 x'^T Lambda_j x'.
    double f(const VectorXd& xcf, double epsilon) const
    {
        return 0.5 * xcf.dot(lambda_i * xcf) + xcf.dot(q) + r + 0.5 * epsilon;
    }
    double g(const VectorXd& xcf) const { return 0.5 * xcf.dot(lambda_j * xcf); }
};

// Plausibility side constraints on the counterfactual.
struct UserConstraints {
    std::optional<VectorXd> lower;  // -inf entries mean "no bound"
    std::optional<VectorXd> upper;  // +inf entries mean "no bound"
    std::vector<Index> frozen;
    std::vector<LinearRow> linear;  // a^T x' <= b

    bool empty() const { return !lower && !upper && frozen.empty() && linear.empty(); }
    // Throws InputError on inconsistent dimensions, bad indices or
    // lower > upper.
    void validate(Index dim) const;
    // Whether x' satisfies every side constraint; frozen features are
    // compared against `original`.
    bool satisfied(const VectorXd& xcf, const VectorXd& original, double tol) const;
};

UserConstraints parse_user_constraints(const std::string& json_text);
UserConstraints load_user_constraints(const std::string& path);

// One row per prototype whose label differs from the target's. Throws
// ContractError on local-metric models.
std::vector<LinearConstraint> linear_constraints(const LvqModel& model, std::size_t target);

// One row per prototype whose label differs from the target's, for any
// metric kind (identity/global yield Q = 0).
std::vector<QuadraticConstraint> quadratic_constraints(const LvqModel& model, std::size_t target);

// First-order Taylor expansion of g = 0.5 x'^T Lambda_j x' at x_k:
// rho = Lambda_j x_k, r_tilde = -0.5 x_k^T Lambda_j x_k. Stores the result
// in c.convexified and returns it.
AffineMinorant linearize_concave_part(QuadraticConstraint& c, const MatrixXd& lambda_j, const VectorXd& x_k);

// Appends the side constraints to a program whose first `features`
// variables are x': frozen features become equality rows, boxes tighten
// the variable bounds and linear rows become inequality rows. An empty
// UserConstraints returns the program unchanged.
ProgramSpec apply_user_constraints(const ProgramSpec& spec, const UserConstraints& uc, const VectorXd& x,
                                   Index features);

}  // namespace lvqcf
