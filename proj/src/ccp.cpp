#include "lvqcf/ccp.hpp"

#include "lvqcf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lvqcf {

void CcpConfig::validate() const
{
    if (!(tau0 > 0.0)) throw InputError("ccp: tau0 must be positive");
    if (!(mu > 1.0)) throw InputError("ccp: mu must exceed 1");
    if (!(tau_max >= tau0)) throw InputError("ccp: tau_max must be >= tau0");
    if (max_outer < 1) throw InputError("ccp: max_outer must be at least 1");
}

double CcpTrace::max_penalized_increase() const
{
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& it : iterations)
        if (std::isfinite(it.penalized_before))
            worst = std::max(worst, it.penalized_after - it.penalized_before);
    return worst;
}

double CcpTrace::max_minorant_excess() const
{
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& it : iterations)
        worst = std::max(worst, it.minorant_excess);
    return worst;
}

DcpProblem make_dcp_problem(const LvqModel& model, std::size_t target, const Regularizer& reg, const VectorXd& x,
                            const UserConstraints& uc, double epsilon)
{
    DcpProblem p;
    p.objective = build_objective(reg, x);
    p.objective.program = apply_user_constraints(p.objective.program, uc, x, x.size());
    p.constraints = quadratic_constraints(model, target);
    p.epsilon = epsilon;
    return p;
}

VectorXd suggest(const LvqModel& model, std::size_t target)
{
    if (target >= model.size())
        throw InputError("target prototype index " + std::to_string(target) + " out of range");
    return model.prototype(target).w;
}

namespace {

// A nearest-prototype row as seen by the CCP.
struct DcpRow {
    QuadraticConstraint c;
    bool convex = false;

    // convex rows: f = the whole row, g = 0
    double f(const VectorXd& x, double eps) const
    {
        return convex ? 0.5 * x.dot(c.Q * x) + x.dot(c.q) + c.r + 0.5 * eps : c.f(x, eps);
    }
    double g(const VectorXd& x) const { return convex ? 0.0 : c.g(x); }
};

}  // namespace

CcpOutcome improve(const DcpProblem& problem, const VectorXd& x0, const CcpConfig& cfg, const SolverTolerances& tol)
{
    cfg.validate();
    const Index d = problem.objective.features;
    if (x0.size() != d)
        throw InputError("improve: start point has length " + std::to_string(x0.size()) + ", expected " +
                         std::to_string(d));
    const double eps = problem.epsilon;

    std::vector<DcpRow> rows;
    rows.reserve(problem.constraints.size());
    for (const auto& c : problem.constraints)
        rows.push_back({c, c.convex()});
    std::vector<std::size_t> dc_rows;
    for (std::size_t k = 0; k < rows.size(); ++k)
        if (!rows[k].convex) dc_rows.push_back(k);
    const auto num_slack = static_cast<Index>(dc_rows.size());

    // Convex part shared by every subproblem: objective, user rows, the
    // convex nearest-prototype rows and the slack variables.
    ObjectiveSpec base = problem.objective;
    const Index n_base = base.program.n;
    base.append_variables(num_slack);
    ProgramSpec& bp = base.program;
    const Index n = bp.n;
    for (const auto& row : rows) {
        if (!row.convex) continue;
        if (row.c.Q.isZero(0.0)) {
            LinearRow lr{VectorXd::Zero(n), -row.c.r - 0.5 * eps};
            lr.a.head(d) = row.c.q;
            bp.ineq.push_back(std::move(lr));
        } else {
            QuadraticRow qr{MatrixXd::Zero(n, n), VectorXd::Zero(n), row.c.r + 0.5 * eps};
            qr.P.topLeftCorner(d, d) = row.c.Q;
            qr.q.head(d) = row.c.q;
            bp.qineq.push_back(std::move(qr));
        }
    }
    if (num_slack > 0) {
        if (!bp.lower) bp.lower = VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
        bp.lower->tail(num_slack).setZero();
    }
    const ProgramSpec hard = bp;  // for checking x_k against the hard rows

    auto objective_at = [&](const VectorXd& x) { return problem.objective.value_at(x); };
    auto violation_sum = [&](const VectorXd& x) {
        double sum = 0.0;
        for (std::size_t k : dc_rows)
            sum += std::max(0.0, rows[k].f(x, eps) - rows[k].g(x));
        return sum;
    };
    auto hard_feasible = [&](const VectorXd& x) {
        VectorXd z = VectorXd::Zero(n);
        z.head(n_base) = problem.objective.lift(x);
        for (Index s = 0; s < num_slack; ++s)
            z(n_base + s) = 0.0;
        return hard.max_violation(z) <= tol.feas;
    };

    CcpOutcome result;
    VectorXd xk = x0;
    double tau = cfg.tau0;
    double obj_k = objective_at(xk);

    for (int outer = 0; outer < cfg.max_outer; ++outer) {
        ProgramSpec sub = bp;
        sub.c.tail(num_slack).setConstant(tau);
        std::vector<AffineMinorant> minorants;
        for (Index s = 0; s < num_slack; ++s) {
            DcpRow& row = rows[dc_rows[static_cast<std::size_t>(s)]];
            const AffineMinorant m = linearize_concave_part(row.c, row.c.lambda_j, xk);
            minorants.push_back(m);
            // 0.5 x'^T Lambda_i x' + (q - rho)^T x' + r + eps/2 - r_tilde - s <= 0
            QuadraticRow qr{MatrixXd::Zero(n, n), VectorXd::Zero(n), row.c.r + 0.5 * eps - m.r_tilde};
            qr.P.topLeftCorner(d, d) = row.c.lambda_i;
            qr.q.head(d) = row.c.q - m.rho;
            qr.q(n_base + s) = -1.0;
            sub.qineq.push_back(std::move(qr));
        }

        // start from x_k with every slack strictly above its violation
        sub.start = VectorXd::Zero(n);
        sub.start->head(n_base) = problem.objective.lift(xk);
        for (Index s = 0; s < num_slack; ++s) {
            const DcpRow& row = rows[dc_rows[static_cast<std::size_t>(s)]];
            (*sub.start)(n_base + s) = std::max(0.0, row.f(xk, eps) - row.g(xk)) + 1.0;
        }

        const SolveOutcome so = solve(sub, tol);
        // A later subproblem can fail numerically at large tau; keep the
        // last iterate and let the final check decide.
        if (!so.optimal() && outer > 0 && so.status != SolveStatus::infeasible) break;
        if (!so.optimal()) {
            result.outcome.status =
                so.status == SolveStatus::infeasible ? SolveStatus::infeasible : SolveStatus::numerical_failure;
            result.outcome.message =
                "subproblem at outer iteration " + std::to_string(outer) + ": " + to_string(so.status);
            if (!so.message.empty()) result.outcome.message += " (" + so.message + ")";
            result.outcome.iterations = outer;
            result.outcome.z = xk;
            return result;
        }

        const VectorXd xnext = so.z.head(d);
        CcpIteration rec;
        rec.tau = tau;
        rec.penalized_before =
            hard_feasible(xk) ? obj_k + tau * violation_sum(xk) : std::numeric_limits<double>::infinity();
        rec.penalized_after = so.objective_value;
        rec.slack_sum = violation_sum(xnext);
        rec.objective = objective_at(xnext);
        rec.minorant_excess = -std::numeric_limits<double>::infinity();
        for (Index s = 0; s < num_slack; ++s) {
            const DcpRow& row = rows[dc_rows[static_cast<std::size_t>(s)]];
            rec.minorant_excess =
                std::max(rec.minorant_excess, minorants[static_cast<std::size_t>(s)].value(xnext) - row.g(xnext));
        }
        if (num_slack == 0) rec.minorant_excess = 0.0;
        result.trace.iterations.push_back(rec);

        const double improvement = std::abs(obj_k - rec.objective);
        xk = xnext;
        obj_k = rec.objective;
        result.outcome.iterations = outer + 1;

        // Without linearized rows the subproblem is the exact program.
        if (num_slack == 0) break;
        if (rec.slack_sum <= cfg.slack_tol && improvement <= cfg.obj_tol) break;
        tau = std::min(cfg.mu * tau, cfg.tau_max);
    }

    result.outcome.z = xk;
    result.outcome.objective_value = obj_k;
    double worst = 0.0;
    for (const auto& row : rows)
        worst = std::max(worst, row.c.gap(xk) * 0.5 + 0.5 * eps);
    result.outcome.max_violation = std::max(worst, 0.0);
    if (worst <= cfg.slack_tol && hard_feasible(xk)) {
        result.outcome.status = SolveStatus::optimal;
    } else {
        result.outcome.status = SolveStatus::max_iterations;
        result.outcome.message = "constraints violated by " + std::to_string(worst) + " after " +
                                 std::to_string(result.outcome.iterations) + " outer iterations";
    }
    return result;
}

}  // namespace lvqcf
