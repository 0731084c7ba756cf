#include "lvqcf/program.hpp"

#include "lvqcf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lvqcf {

namespace {

// Inequalities gathered as g(z) <= 0: user rows G z - h, then quadratic
// rows, then finite variable bounds. Bounds never enter the dense
// Jacobian; they only touch single coordinates.
struct Canonical {
    Index n = 0;
    MatrixXd P;  // objective hessian, zero for LPs
    VectorXd c;
    VectorXd start;
    MatrixXd A;
    VectorXd b;
    MatrixXd G;
    VectorXd h;
    std::vector<QuadraticRow> quad;
    // bound rows sign * (z_var - value) <= 0, lower bounds first
    std::vector<Index> bound_var;
    std::vector<double> bound_sign, bound_value;
    Index num_lower = 0;

    Index num_general() const { return G.rows() + static_cast<Index>(quad.size()); }
    Index num_ineq() const { return num_general() + static_cast<Index>(bound_var.size()); }
};

bool nonnegative_diagonal(const MatrixXd& P)
{
    return P.isDiagonal(0.0) && P.diagonal().minCoeff() >= 0.0;
}

MatrixXd floor_eigenvalues(const MatrixXd& P)
{
    if (nonnegative_diagonal(P))
        return P;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (P + P.transpose()));
    if (eig.eigenvalues().minCoeff() >= 0.0)
        return 0.5 * (P + P.transpose());
    const VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
}

Canonical canonicalize(const ProgramSpec& spec)
{
    Canonical cf;
    cf.n = spec.n;
    cf.P = spec.hessian ? floor_eigenvalues(*spec.hessian) : MatrixXd::Zero(spec.n, spec.n);
    cf.c = spec.c;
    cf.start = spec.start ? *spec.start : VectorXd::Zero(spec.n);

    cf.A.resize(static_cast<Index>(spec.eq.size()), spec.n);
    cf.b.resize(static_cast<Index>(spec.eq.size()));
    for (std::size_t k = 0; k < spec.eq.size(); ++k) {
        cf.A.row(static_cast<Index>(k)) = spec.eq[k].a.transpose();
        cf.b(static_cast<Index>(k)) = spec.eq[k].b;
    }

    const Index mu = static_cast<Index>(spec.ineq.size());
    cf.G.resize(mu, spec.n);
    cf.h.resize(mu);
    for (Index k = 0; k < mu; ++k) {
        cf.G.row(k) = spec.ineq[static_cast<std::size_t>(k)].a.transpose();
        cf.h(k) = spec.ineq[static_cast<std::size_t>(k)].b;
    }

    if (spec.lower)
        for (Index i = 0; i < spec.n; ++i)
            if (std::isfinite((*spec.lower)(i))) {
                cf.bound_var.push_back(i);
                cf.bound_sign.push_back(-1.0);
                cf.bound_value.push_back((*spec.lower)(i));
            }
    cf.num_lower = static_cast<Index>(cf.bound_var.size());
    if (spec.upper)
        for (Index i = 0; i < spec.n; ++i)
            if (std::isfinite((*spec.upper)(i))) {
                cf.bound_var.push_back(i);
                cf.bound_sign.push_back(1.0);
                cf.bound_value.push_back((*spec.upper)(i));
            }

    cf.quad.reserve(spec.qineq.size());
    for (const auto& q : spec.qineq)
        cf.quad.push_back({floor_eigenvalues(q.P), q.q, q.r});
    return cf;
}

enum class CoreExit { converged, diverged, stalled, iteration_limit, breakdown };

struct CoreResult {
    CoreExit exit = CoreExit::breakdown;
    VectorXd z, y, lambda;
    int iterations = 0;
};

// Largest step in (0, 1] keeping both s and lambda nonnegative.
double max_step(const VectorXd& s, const VectorXd& ds, const VectorXd& l, const VectorXd& dl)
{
    double alpha = 1.0;
    for (Index i = 0; i < s.size(); ++i) {
        if (ds(i) < 0.0) alpha = std::min(alpha, -s(i) / ds(i));
        if (dl(i) < 0.0) alpha = std::min(alpha, -l(i) / dl(i));
    }
    return alpha;
}

// In-place lower Cholesky factor; false unless L is positive definite.
// The problems solved here are small enough that plain loops beat the
// blocked library routines.
bool cholesky(MatrixXd& L)
{
    const Index n = L.rows();
    for (Index j = 0; j < n; ++j) {
        double d = L(j, j);
        for (Index k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
        if (!(d > 0.0)) return false;
        d = std::sqrt(d);
        L(j, j) = d;
        for (Index i = j + 1; i < n; ++i) {
            double v = L(i, j);
            for (Index k = 0; k < j; ++k) v -= L(i, k) * L(j, k);
            L(i, j) = v / d;
        }
    }
    return true;
}

void cholesky_solve(const MatrixXd& L, VectorXd& b)
{
    const Index n = L.rows();
    for (Index i = 0; i < n; ++i) {
        double v = b(i);
        for (Index k = 0; k < i; ++k) v -= L(i, k) * b(k);
        b(i) = v / L(i, i);
    }
    for (Index i = n - 1; i >= 0; --i) {
        double v = b(i);
        for (Index k = i + 1; k < n; ++k) v -= L(k, i) * b(k);
        b(i) = v / L(i, i);
    }
}

// Scratch storage reused by consecutive solves on the same thread.
struct Workspace {
    VectorXd g, s, pz, rhs, sol, r_d, r_e, r_i, r_c, w, tmp, dz, dy, dl, ds;
    MatrixXd J, K, chol, wj;
    Eigen::PartialPivLU<MatrixXd> lu;
};

Workspace& workspace()
{
    thread_local Workspace ws;
    return ws;
}

// Infeasible-start primal-dual iteration on
//   min 0.5 z'Pz + c'z  s.t.  Az = b,  g(z) + s = 0,  s >= 0
// with Mehrotra predictor-corrector centering. All work buffers are
// allocated up front.
CoreResult run_core(const Canonical& cf, const SolverTolerances& tol)
{
    const Index n = cf.n;
    const Index me = cf.A.rows();
    const Index nu = cf.G.rows();
    const Index mq = static_cast<Index>(cf.quad.size());
    const Index mg = nu + mq;
    const Index mb = static_cast<Index>(cf.bound_var.size());
    const Index m = mg + mb;

    CoreResult res;
    VectorXd z = cf.start;
    VectorXd y = VectorXd::Zero(me);
    VectorXd lambda = VectorXd::Ones(m);
    Workspace& ws = workspace();
    VectorXd& g = ws.g;
    VectorXd& s = ws.s;
    MatrixXd& J = ws.J;
    VectorXd& pz = ws.pz;
    g.resize(m);
    s.resize(m);
    J.resize(mg, n);
    pz.resize(n);
    if (nu) J.topRows(nu) = cf.G;

    // out += J^T v over all rows
    auto add_jt = [&](const VectorXd& v, auto&& out) {
        for (Index i = 0; i < n; ++i) {
            const double* col = J.col(i).data();
            double t = 0.0;
            for (Index k = 0; k < mg; ++k) t += col[k] * v(k);
            out(i) += t;
        }
        for (Index k = 0; k < mb; ++k)
            out(cf.bound_var[static_cast<std::size_t>(k)]) += cf.bound_sign[static_cast<std::size_t>(k)] * v(mg + k);
    };
    // out = J v over all rows
    auto set_j = [&](const VectorXd& v, VectorXd& out) {
        for (Index k = 0; k < mg; ++k) out(k) = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double* col = J.col(i).data();
            const double vi = v(i);
            for (Index k = 0; k < mg; ++k) out(k) += col[k] * vi;
        }
        for (Index k = 0; k < mb; ++k)
            out(mg + k) = cf.bound_sign[static_cast<std::size_t>(k)] * v(cf.bound_var[static_cast<std::size_t>(k)]);
    };

    auto eval_constraints = [&]() {
        if (nu) {
            g.head(nu).noalias() = cf.G.lazyProduct(z);
            g.head(nu) -= cf.h;
        }
        for (Index k = 0; k < mq; ++k) {
            const auto& row = cf.quad[static_cast<std::size_t>(k)];
            pz.noalias() = row.P.lazyProduct(z);
            g(nu + k) = 0.5 * z.dot(pz) + row.q.dot(z) + row.r;
            J.row(nu + k) = (pz + row.q).transpose();
        }
        for (Index k = 0; k < mb; ++k) {
            const auto u = static_cast<std::size_t>(k);
            g(mg + k) = cf.bound_sign[u] * (z(cf.bound_var[u]) - cf.bound_value[u]);
        }
    };

    eval_constraints();
    for (Index k = 0; k < m; ++k)
        s(k) = std::max(-g(k), 1.0);

    const double feas_tol = 0.1 * tol.feas;
    const double dual_tol = 1e-8 * (1.0 + cf.c.cwiseAbs().maxCoeff() + (cf.P.size() ? cf.P.cwiseAbs().maxCoeff() : 0.0));
    const double mu_tol = 1e-9;
    const double reg = 1e-11;

    MatrixXd& K = ws.K;
    K.setZero(n + me, n + me);
    if (me) {
        K.topRightCorner(n, me) = cf.A.transpose();
        K.bottomLeftCorner(me, n) = cf.A;
        K.bottomRightCorner(me, me).diagonal().setConstant(-reg);
    }
    Eigen::PartialPivLU<MatrixXd>& lu = ws.lu;
    MatrixXd& chol = ws.chol;
    chol.resize(n, n);
    bool use_chol = false;

    VectorXd &rhs = ws.rhs, &sol = ws.sol, &r_d = ws.r_d, &r_e = ws.r_e, &r_i = ws.r_i, &r_c = ws.r_c, &w = ws.w,
             &tmp = ws.tmp, &dz = ws.dz, &dy = ws.dy, &dl = ws.dl, &ds = ws.ds;
    MatrixXd& wj = ws.wj;
    rhs.resize(n + me);
    sol.resize(n + me);
    for (VectorXd* v : {&r_d, &dz}) v->resize(n);
    for (VectorXd* v : {&r_e, &dy}) v->resize(me);
    for (VectorXd* v : {&r_i, &r_c, &w, &tmp, &dl, &ds}) v->resize(m);
    wj.resize(mg, n);
    double best_primal = std::numeric_limits<double>::infinity();
    int best_iter = 0;

    auto newton = [&]() {
        rhs.head(n) = -r_d;
        if (m) {
            for (Index k = 0; k < m; ++k) tmp(k) = r_c(k) / s(k) - w(k) * r_i(k);
            add_jt(tmp, rhs.head(n));
        }
        if (me) rhs.tail(me) = -r_e;
        if (use_chol) {
            sol = rhs;
            cholesky_solve(chol, sol);
        } else {
            sol = lu.solve(rhs);
        }
        dz = sol.head(n);
        dy = sol.tail(me);
        if (m) {
            set_j(dz, tmp);
            for (Index k = 0; k < m; ++k) {
                dl(k) = w(k) * (tmp(k) + r_i(k)) - r_c(k) / s(k);
                ds(k) = -(r_c(k) + s(k) * dl(k)) / lambda(k);
            }
        }
    };

    for (int it = 0; it < tol.max_iterations; ++it) {
        res.iterations = it;

        r_d.noalias() = cf.P.lazyProduct(z);
        r_d += cf.c;
        if (me) r_d.noalias() += cf.A.transpose().lazyProduct(y);
        if (m) add_jt(lambda, r_d);
        if (me) {
            r_e.noalias() = cf.A.lazyProduct(z);
            r_e -= cf.b;
        }
        double mu = 0.0;
        double primal = me ? r_e.cwiseAbs().maxCoeff() : 0.0;
        double lambda_max = 0.0;
        for (Index k = 0; k < m; ++k) {
            r_i(k) = g(k) + s(k);
            mu += s(k) * lambda(k);
            primal = std::max(primal, std::abs(r_i(k)));
            lambda_max = std::max(lambda_max, lambda(k));
        }
        if (m) mu /= static_cast<double>(m);
        const double dual = r_d.cwiseAbs().maxCoeff();
        if (primal <= feas_tol && dual <= dual_tol && mu <= mu_tol) {
            res.exit = CoreExit::converged;
            break;
        }
        if (lambda_max > 1e13 || (me && y.cwiseAbs().maxCoeff() > 1e13) ||
            z.cwiseAbs().maxCoeff() > 1e13) {
            res.exit = CoreExit::diverged;
            break;
        }
        if (primal < 0.5 * best_primal) {
            best_primal = primal;
            best_iter = it;
        } else if (primal > feas_tol && it - best_iter > 40) {
            res.exit = CoreExit::stalled;
            break;
        }

        for (Index k = 0; k < m; ++k) w(k) = lambda(k) / s(k);
        auto top = K.topLeftCorner(n, n);
        top = cf.P;
        for (Index k = 0; k < mq; ++k)
            top += lambda(nu + k) * cf.quad[static_cast<std::size_t>(k)].P;
        for (Index j = 0; j < n; ++j) {
            const double* cj = J.col(j).data();
            double* wc = wj.col(j).data();
            for (Index k = 0; k < mg; ++k) wc[k] = w(k) * cj[k];
            for (Index i = 0; i <= j; ++i) {
                const double* ci = J.col(i).data();
                double t = 0.0;
                for (Index k = 0; k < mg; ++k) t += ci[k] * wc[k];
                top(i, j) += t;
                if (i != j) top(j, i) += t;
            }
        }
        for (Index k = 0; k < mb; ++k) {
            const Index i = cf.bound_var[static_cast<std::size_t>(k)];
            top(i, i) += w(mg + k);
        }
        top.diagonal().array() += reg;
        use_chol = false;
        if (me == 0) {
            chol = top;
            use_chol = cholesky(chol);
        }
        if (!use_chol) lu.compute(K);

        // predictor
        for (Index k = 0; k < m; ++k) r_c(k) = s(k) * lambda(k);
        newton();
        if (!sol.allFinite()) {
            res.exit = CoreExit::breakdown;
            break;
        }
        if (m) {
            const double a_aff = max_step(s, ds, lambda, dl);
            double mu_aff = 0.0;
            for (Index k = 0; k < m; ++k) mu_aff += (s(k) + a_aff * ds(k)) * (lambda(k) + a_aff * dl(k));
            mu_aff /= static_cast<double>(m);
            const double sigma = std::pow(std::clamp(mu_aff / std::max(mu, 1e-300), 0.0, 1.0), 3);
            // corrector
            for (Index k = 0; k < m; ++k) r_c(k) = s(k) * lambda(k) + ds(k) * dl(k) - sigma * mu;
            newton();
            if (!sol.allFinite()) {
                res.exit = CoreExit::breakdown;
                break;
            }
        }

        double alpha = 1.0;
        if (m) {
            const double eta = mq ? 0.99 : std::max(0.99, 1.0 - mu);
            alpha = std::min(1.0, eta * max_step(s, ds, lambda, dl));
        }
        z += alpha * dz;
        y += alpha * dy;
        for (Index k = 0; k < m; ++k) {
            s(k) = std::max(s(k) + alpha * ds(k), 1e-300);
            lambda(k) = std::max(lambda(k) + alpha * dl(k), 1e-300);
        }
        eval_constraints();
        res.exit = CoreExit::iteration_limit;
    }
    res.z = std::move(z);
    res.y = std::move(y);
    res.lambda = std::move(lambda);
    return res;
}

Duals scatter_duals(const ProgramSpec& spec, const Canonical& cf, const CoreResult& core)
{
    Duals d;
    d.eq = core.y;
    d.ineq = core.lambda.head(cf.G.rows());
    d.qineq = core.lambda.segment(cf.G.rows(), static_cast<Index>(cf.quad.size()));
    d.lower = VectorXd::Zero(spec.n);
    d.upper = VectorXd::Zero(spec.n);
    const Index mg = cf.num_general();
    for (std::size_t k = 0; k < cf.bound_var.size(); ++k) {
        const double v = core.lambda(mg + static_cast<Index>(k));
        if (static_cast<Index>(k) < cf.num_lower)
            d.lower(cf.bound_var[k]) = v;
        else
            d.upper(cf.bound_var[k]) = v;
    }
    return d;
}

// Minimize t subject to every inequality relaxed by t, t >= -1. A positive
// optimum certifies that no point satisfies all inequalities together
// with the equalities.
ProgramSpec phase_one(const Canonical& cf)
{
    const Index n = cf.n;
    ProgramSpec p1(n + 1);
    p1.c(n) = 1.0;
    for (Index k = 0; k < cf.A.rows(); ++k) {
        LinearRow row{VectorXd::Zero(n + 1), cf.b(k)};
        row.a.head(n) = cf.A.row(k).transpose();
        p1.eq.push_back(std::move(row));
    }
    for (Index k = 0; k < cf.G.rows(); ++k) {
        LinearRow row{VectorXd::Zero(n + 1), cf.h(k)};
        row.a.head(n) = cf.G.row(k).transpose();
        row.a(n) = -1.0;
        p1.ineq.push_back(std::move(row));
    }
    for (const auto& q : cf.quad) {
        QuadraticRow row{MatrixXd::Zero(n + 1, n + 1), VectorXd::Zero(n + 1), q.r};
        row.P.topLeftCorner(n, n) = q.P;
        row.q.head(n) = q.q;
        row.q(n) = -1.0;
        p1.qineq.push_back(std::move(row));
    }
    for (std::size_t k = 0; k < cf.bound_var.size(); ++k) {
        LinearRow row{VectorXd::Zero(n + 1), cf.bound_sign[k] * cf.bound_value[k]};
        row.a(cf.bound_var[k]) = cf.bound_sign[k];
        row.a(n) = -1.0;
        p1.ineq.push_back(std::move(row));
    }
    p1.lower = VectorXd::Constant(n + 1, -std::numeric_limits<double>::infinity());
    (*p1.lower)(n) = -1.0;
    return p1;
}

bool equalities_consistent(const Canonical& cf, double tol)
{
    if (cf.A.rows() == 0) return true;
    const VectorXd z = cf.A.completeOrthogonalDecomposition().solve(cf.b);
    return (cf.A * z - cf.b).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

SolveOutcome solve(const ProgramSpec& spec, const SolverTolerances& tol)
{
    spec.validate();
    const Canonical cf = canonicalize(spec);

    SolveOutcome out;
    CoreResult core;
    try {
        core = run_core(cf, tol);
    } catch (const std::exception& e) {
        out.status = SolveStatus::numerical_failure;
        out.message = e.what();
        return out;
    }
    out.iterations = core.iterations;
    out.z = core.z;
    out.duals = scatter_duals(spec, cf, core);
    out.objective_value = spec.objective(core.z);
    out.max_violation = spec.max_violation(core.z);

    if (core.exit == CoreExit::converged && out.max_violation <= tol.feas) {
        out.status = SolveStatus::optimal;
        return out;
    }

    // Not converged: decide whether the program is infeasible.
    if (!equalities_consistent(cf, tol.feas)) {
        out.status = SolveStatus::infeasible;
        out.message = "equality constraints are inconsistent";
        return out;
    }
    if (cf.num_ineq() > 0) {
        const ProgramSpec p1 = phase_one(cf);
        const Canonical cf1 = canonicalize(p1);
        const CoreResult core1 = run_core(cf1, tol);
        if (core1.exit == CoreExit::converged && core1.z(cf.n) > tol.feas) {
            out.status = SolveStatus::infeasible;
            out.message = "phase-1 optimum " + std::to_string(core1.z(cf.n)) + " > 0";
            return out;
        }
    }
    switch (core.exit) {
    case CoreExit::breakdown:
        out.status = SolveStatus::numerical_failure;
        out.message = "Newton system breakdown";
        break;
    case CoreExit::converged:
        out.status = SolveStatus::numerical_failure;
        out.message = "converged point violates constraints beyond tolerance";
        break;
    default:
        out.status = SolveStatus::max_iterations;
        out.message = core.exit == CoreExit::diverged ? "iterates diverged (unbounded program?)"
                                                      : "no convergence within iteration limit";
        break;
    }
    return out;
}

}  // namespace lvqcf
