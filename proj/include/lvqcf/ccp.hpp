#pragma once

#include "lvqcf/constraints.hpp"
#include "lvqcf/lvq_model.hpp"
#include "lvqcf/program.hpp"
#include "lvqcf/regularizer.hpp"

#include <vector>

namespace lvqcf {

struct CcpConfig {
    double tau0 = 1.0;
    double mu = 2.0;
    double tau_max = 1e6;
    int max_outer = 50;
    double slack_tol = 1e-6;
    double obj_tol = 1e-6;

    void validate() const;
};

// Counterfactual program for one target prototype of a local-metric
// model: a convex objective (plus any convex user rows already applied to
// objective.program) and one nearest-prototype row per competing
// prototype.
struct DcpProblem {
    ObjectiveSpec objective;
    std::vector<QuadraticConstraint> constraints;
    double epsilon = 1e-4;
};

DcpProblem make_dcp_problem(const LvqModel& model, std::size_t target, const Regularizer& reg, const VectorXd& x,
                            const UserConstraints& uc, double epsilon);

// One outer step of the penalty CCP.
struct CcpIteration {
    double tau = 0.0;
    // objective(x_k) + tau * sum_k max(0, f_k(x_k) - g_k(x_k)); +inf when
    // x_k violates a hard (convex) row
    double penalized_before = 0.0;
    // optimal value of the convexified subproblem at this tau
    double penalized_after = 0.0;
    double slack_sum = 0.0;        // true violation sum at the new iterate
    double objective = 0.0;        // objective at the new iterate
    double minorant_excess = 0.0;  // max over rows of ghat(x_{k+1}) - g(x_{k+1})
};

struct CcpTrace {
    std::vector<CcpIteration> iterations;

    // Largest increase of the penalized objective within one step (<= 0
    // when the majorization property holds).
    double max_penalized_increase() const;
    double max_minorant_excess() const;
};

struct CcpOutcome {
    SolveOutcome outcome;  // z holds the feature vector x' only
    CcpTrace trace;
};

// Suggest step: the target prototype itself.
VectorXd suggest(const LvqModel& model, std::size_t target);

// Improve step: penalty convex-concave procedure from x0. Rows with a
// positive semi-definite Q are kept as hard convex constraints; the others
// are split as f - g, g is linearized at the current iterate and the row
// gets a nonnegative slack penalized by tau.
CcpOutcome improve(const DcpProblem& problem, const VectorXd& x0, const CcpConfig& cfg = {},
                   const SolverTolerances& tol = {1e-10, 1e-6, 200});

}  // namespace lvqcf
