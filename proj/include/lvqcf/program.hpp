#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace lvqcf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// a^T z = b  or  a^T z <= b
struct LinearRow {
    VectorXd a;
    double b = 0.0;
};

// 0.5 z^T P z + q^T z + r <= 0, with P symmetric psd.
struct QuadraticRow {
    MatrixXd P;
    VectorXd q;
    double r = 0.0;

    double value(const VectorXd& z) const { return 0.5 * z.dot(P * z) + q.dot(z) + r; }
};

// Minimize 0.5 z^T P z + c^T z (P absent for linear programs) subject to
// linear equalities, linear and convex quadratic inequalities and optional
// per-variable bounds (+-infinity for "none").
struct ProgramSpec {
    Index n = 0;
    std::optional<MatrixXd> hessian;
    VectorXd c;
    std::vector<LinearRow> eq;
    std::vector<LinearRow> ineq;
    std::vector<QuadraticRow> qineq;
    std::optional<VectorXd> lower;
    std::optional<VectorXd> upper;
    std::optional<VectorXd> start;  // first iterate of the solver, zero if absent

    explicit ProgramSpec(Index num_vars = 0);

    bool is_quadratic_objective() const { return hessian.has_value(); }
    double objective(const VectorXd& z) const;

    // Throws InputError when dimensions disagree or a matrix is not
    // symmetric psd within 1e-8.
    void validate() const;

    // Maximum violation over all constraint rows and bounds (0 if feasible).
    double max_violation(const VectorXd& z) const;
};

enum class SolveStatus { optimal, infeasible, max_iterations, numerical_failure };

const char* to_string(SolveStatus status);

// Lagrange multipliers, one block per constraint family of ProgramSpec.
// Inequality multipliers are nonnegative; bound multipliers are zero for
// infinite bounds.
struct Duals {
    VectorXd eq;
    VectorXd ineq;
    VectorXd qineq;
    VectorXd lower;
    VectorXd upper;
};

struct SolveOutcome {
    SolveStatus status = SolveStatus::numerical_failure;
    VectorXd z;
    Duals duals;
    double objective_value = 0.0;
    int iterations = 0;
    double max_violation = 0.0;
    std::string message;

    bool optimal() const { return status == SolveStatus::optimal; }
};

struct SolverTolerances {
    double feas = 1e-8;
    double kkt = 1e-6;
    int max_iterations = 200;
};

// Primal-dual interior-point method with Mehrotra predictor-corrector.
// Quadratic inequality rows enter the Newton system through their
// Hessians, so LP, convex QP and convex QCQP share one code path. When the
// main iteration fails to converge, a phase-1 program decides between
// `infeasible` and `max_iterations`.
SolveOutcome solve(const ProgramSpec& spec, const SolverTolerances& tol = {});

struct KktReport {
    double stationarity = 0.0;     // ||grad L||_inf
    double complementarity = 0.0;  // max |multiplier * constraint|
    double primal_feasibility = 0.0;
    double dual_feasibility = 0.0;  // max negative part of inequality multipliers

    double max_residual() const;
};

KktReport verify_kkt(const ProgramSpec& spec, const VectorXd& z, const Duals& duals);

// Plain-text dump used for solver triage. Layout (one item per line):
//   program n=<n>
//   objective linear c=[...]            or
//   objective quadratic P=[[...],...] c=[...]
//   eq a=[...] b=<b>
//   ineq a=[...] b=<b>
//   qineq P=[[...],...] q=[...] r=<r>
//   lower [...] / upper [...]
std::string dump_program(const ProgramSpec& spec);

}  // namespace lvqcf
