#pragma once

#include "lvqcf/ccp.hpp"
#include "lvqcf/constraints.hpp"
#include "lvqcf/lvq_model.hpp"
#include "lvqcf/program.hpp"
#include "lvqcf/regularizer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lvqcf {

struct CfRequest {
    VectorXd x;
    int y_target = 0;
    Regularizer regularizer = Regularizer::euclidean();
    double epsilon = 1e-4;
    UserConstraints user_constraints;
    bool parallel = false;

    CcpConfig ccp;
    SolverTolerances tolerances;
};

// Outcome for one prototype of the requested class.
struct TargetOutcome {
    std::size_t index = 0;
    // optimal | infeasible | max-iterations | numerical-failure |
    // degenerate | invalid (solver point fails the model re-check)
    std::string status;
    std::optional<double> distance;
    double wall_time_ms = 0.0;
    std::optional<VectorXd> x_cf;
    std::optional<CcpTrace> ccp_trace;
};

struct CfResult {
    bool success = false;
    VectorXd x_cf;
    double distance = 0.0;
    std::size_t target_prototype = 0;
    std::vector<TargetOutcome> per_target;
    double total_wall_time_ms = 0.0;
};

// For every prototype carrying the requested label, solve the
// counterfactual program with that prototype forced to be the nearest one
// and keep the solution with the smallest regularizer value (ties go to
// the lower prototype index). Identity and global metrics yield an LP or
// QP; local metrics go through the penalty CCP. If every target fails the
// result has success == false and lists the per-target statuses.
CfResult explain(const LvqModel& model, const CfRequest& req);

// Same result as explain; targets are tried in order of increasing
// distance d(x, p_i), which only changes the order of per_target.
CfResult explain_with_nearest_fallback(const LvqModel& model, const CfRequest& req);

// Counterfactual program for an identity/global-metric model and one
// target prototype, user constraints included. Returns nullopt when a
// nearest-prototype row is degenerate (coinciding prototypes).
std::optional<ObjectiveSpec> build_linear_program(const LvqModel& model, std::size_t target, const CfRequest& req);

std::string result_to_json(const CfResult& result, int indent = 2);

}  // namespace lvqcf
