#include "lvqcf/program.hpp"

#include "lvqcf/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace lvqcf {

ProgramSpec::ProgramSpec(Index num_vars) : n(num_vars), c(VectorXd::Zero(num_vars)) {}

double ProgramSpec::objective(const VectorXd& z) const
{
    double v = c.dot(z);
    if (hessian)
        v += 0.5 * z.dot(*hessian * z);
    return v;
}

namespace {

void check_psd(const MatrixXd& P, Index n, const std::string& what)
{
    if (P.rows() != n || P.cols() != n)
        throw InputError(what + ": expected " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
    if (!P.allFinite())
        throw InputError(what + ": non-finite entries");
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw InputError(what + ": not symmetric");
    if (P.isDiagonal(0.0) && P.diagonal().minCoeff() >= 0.0)
        return;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(P, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8 * scale)
        throw InputError(what + ": not positive semi-definite");
}

void check_rows(const std::vector<LinearRow>& rows, Index n, const char* family)
{
    for (std::size_t k = 0; k < rows.size(); ++k)
        if (rows[k].a.size() != n || !rows[k].a.allFinite() || !std::isfinite(rows[k].b))
            throw InputError(std::string(family) + "[" + std::to_string(k) + "]: bad dimension or non-finite entry");
}

}  // namespace

void ProgramSpec::validate() const
{
    if (n < 1)
        throw InputError("program has no variables");
    if (c.size() != n || !c.allFinite())
        throw InputError("objective: c has wrong length or non-finite entries");
    if (hessian)
        check_psd(*hessian, n, "objective hessian");
    if (start && (start->size() != n || !start->allFinite()))
        throw InputError("start: wrong length or non-finite entries");
    check_rows(eq, n, "eq");
    check_rows(ineq, n, "ineq");
    for (std::size_t k = 0; k < qineq.size(); ++k) {
        const std::string where = "qineq[" + std::to_string(k) + "]";
        check_psd(qineq[k].P, n, where + ".P");
        if (qineq[k].q.size() != n || !qineq[k].q.allFinite() || !std::isfinite(qineq[k].r))
            throw InputError(where + ": bad dimension or non-finite entry");
    }
    if (lower && lower->size() != n)
        throw InputError("lower bounds: wrong length");
    if (upper && upper->size() != n)
        throw InputError("upper bounds: wrong length");
    if (lower && upper)
        for (Index i = 0; i < n; ++i)
            if ((*lower)(i) > (*upper)(i))
                throw InputError("bounds: lower > upper for variable " + std::to_string(i));
}

double ProgramSpec::max_violation(const VectorXd& z) const
{
    double v = 0.0;
    for (const auto& row : eq)
        v = std::max(v, std::abs(row.a.dot(z) - row.b));
    for (const auto& row : ineq)
        v = std::max(v, row.a.dot(z) - row.b);
    for (const auto& row : qineq)
        v = std::max(v, row.value(z));
    if (lower)
        v = std::max(v, (*lower - z).maxCoeff());
    if (upper)
        v = std::max(v, (z - *upper).maxCoeff());
    return v;
}

const char* to_string(SolveStatus status)
{
    switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iterations: return "max-iterations";
    case SolveStatus::numerical_failure: return "numerical-failure";
    }
    return "?";
}

double KktReport::max_residual() const
{
    return std::max({stationarity, complementarity, primal_feasibility, dual_feasibility});
}

KktReport verify_kkt(const ProgramSpec& spec, const VectorXd& z, const Duals& duals)
{
    KktReport report;
    VectorXd grad = spec.c;
    if (spec.hessian)
        grad += *spec.hessian * z;

    auto multiplier = [](const VectorXd& v, std::size_t k) {
        return static_cast<Index>(k) < v.size() ? v(static_cast<Index>(k)) : 0.0;
    };
    auto dual_sign = [&](double lambda) { report.dual_feasibility = std::max(report.dual_feasibility, -lambda); };

    for (std::size_t k = 0; k < spec.eq.size(); ++k)
        grad += multiplier(duals.eq, k) * spec.eq[k].a;
    for (std::size_t k = 0; k < spec.ineq.size(); ++k) {
        const double lambda = multiplier(duals.ineq, k);
        grad += lambda * spec.ineq[k].a;
        dual_sign(lambda);
        report.complementarity =
            std::max(report.complementarity, std::abs(lambda * (spec.ineq[k].a.dot(z) - spec.ineq[k].b)));
    }
    for (std::size_t k = 0; k < spec.qineq.size(); ++k) {
        const auto& row = spec.qineq[k];
        const double lambda = multiplier(duals.qineq, k);
        grad += lambda * (row.P * z + row.q);
        dual_sign(lambda);
        report.complementarity = std::max(report.complementarity, std::abs(lambda * row.value(z)));
    }
    for (Index i = 0; i < spec.n; ++i) {
        if (spec.lower && std::isfinite((*spec.lower)(i))) {
            const double lambda = multiplier(duals.lower, static_cast<std::size_t>(i));
            grad(i) -= lambda;
            dual_sign(lambda);
            report.complementarity = std::max(report.complementarity, std::abs(lambda * ((*spec.lower)(i) - z(i))));
        }
        if (spec.upper && std::isfinite((*spec.upper)(i))) {
            const double lambda = multiplier(duals.upper, static_cast<std::size_t>(i));
            grad(i) += lambda;
            dual_sign(lambda);
            report.complementarity = std::max(report.complementarity, std::abs(lambda * (z(i) - (*spec.upper)(i))));
        }
    }
    report.stationarity = grad.cwiseAbs().maxCoeff();
    report.primal_feasibility = spec.max_violation(z);
    return report;
}

namespace {

void put_number(std::string& out, double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void put_vector(std::string& out, const VectorXd& v)
{
    out += '[';
    for (Index k = 0; k < v.size(); ++k) {
        if (k) out += ',';
        put_number(out, v(k));
    }
    out += ']';
}

void put_matrix(std::string& out, const MatrixXd& m)
{
    out += '[';
    for (Index r = 0; r < m.rows(); ++r) {
        if (r) out += ',';
        put_vector(out, m.row(r).transpose());
    }
    out += ']';
}

}  // namespace

std::string dump_program(const ProgramSpec& spec)
{
    std::string out = "program n=" + std::to_string(spec.n) + "\n";
    if (spec.hessian) {
        out += "objective quadratic P=";
        put_matrix(out, *spec.hessian);
        out += " c=";
    } else {
        out += "objective linear c=";
    }
    put_vector(out, spec.c);
    out += '\n';
    for (const auto& row : spec.eq) {
        out += "eq a=";
        put_vector(out, row.a);
        out += " b=";
        put_number(out, row.b);
        out += '\n';
    }
    for (const auto& row : spec.ineq) {
        out += "ineq a=";
        put_vector(out, row.a);
        out += " b=";
        put_number(out, row.b);
        out += '\n';
    }
    for (const auto& row : spec.qineq) {
        out += "qineq P=";
        put_matrix(out, row.P);
        out += " q=";
        put_vector(out, row.q);
        out += " r=";
        put_number(out, row.r);
        out += '\n';
    }
    if (spec.lower) {
        out += "lower ";
        put_vector(out, *spec.lower);
        out += '\n';
    }
    if (spec.upper) {
        out += "upper ";
        put_vector(out, *spec.upper);
        out += '\n';
    }
    return out;
}

}  // namespace lvqcf
