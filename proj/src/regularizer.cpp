#include "lvqcf/regularizer.hpp"

#include "lvqcf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lvqcf {

const char* to_string(RegularizerKind kind)
{
    switch (kind) {
    case RegularizerKind::weighted_manhattan: return "manhattan";
    case RegularizerKind::euclidean: return "euclidean";
    case RegularizerKind::generalized_l2: return "gl2";
    }
    return "?";
}

Regularizer Regularizer::manhattan(VectorXd alpha)
{
    if (alpha.size() == 0)
        throw InputError("manhattan regularizer: empty weight vector");
    for (Index j = 0; j < alpha.size(); ++j)
        if (!(alpha(j) > 0.0) || !std::isfinite(alpha(j)))
            throw InputError("manhattan regularizer: weight " + std::to_string(j) + " must be positive and finite");
    Regularizer r;
    r.kind_ = RegularizerKind::weighted_manhattan;
    r.alpha_ = std::move(alpha);
    return r;
}

Regularizer Regularizer::manhattan_unit(Index dim)
{
    return manhattan(VectorXd::Ones(dim));
}

Regularizer Regularizer::euclidean()
{
    Regularizer r;
    r.kind_ = RegularizerKind::euclidean;
    return r;
}

Regularizer Regularizer::generalized_l2(MatrixXd lambda)
{
    if (lambda.rows() != lambda.cols() || lambda.rows() == 0 || !lambda.allFinite())
        throw InputError("generalized-l2 regularizer: expected a finite square matrix");
    const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
    if ((lambda - lambda.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw InputError("generalized-l2 regularizer: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(lambda, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8 * scale)
        throw InputError("generalized-l2 regularizer: matrix is not positive semi-definite");
    Regularizer r;
    r.kind_ = RegularizerKind::generalized_l2;
    r.lambda_ = 0.5 * (lambda + lambda.transpose());
    return r;
}

double Regularizer::evaluate(const VectorXd& xcf, const VectorXd& x) const
{
    if (xcf.size() != x.size())
        throw InputError("regularizer: vectors have different lengths (" + std::to_string(xcf.size()) + " vs " +
                         std::to_string(x.size()) + ")");
    const VectorXd diff = x - xcf;
    switch (kind_) {
    case RegularizerKind::weighted_manhattan:
        if (alpha_.size() != x.size())
            throw InputError("manhattan regularizer: " + std::to_string(alpha_.size()) + " weights for dimension " +
                             std::to_string(x.size()));
        return alpha_.dot(diff.cwiseAbs());
    case RegularizerKind::euclidean:
        return diff.squaredNorm();
    case RegularizerKind::generalized_l2:
        if (lambda_.rows() != x.size())
            throw InputError("generalized-l2 regularizer: matrix does not match dimension " + std::to_string(x.size()));
        return std::max(0.0, diff.dot(lambda_ * diff));
    }
    return 0.0;
}

double Regularizer::weight_sum(Index dim) const
{
    return kind_ == RegularizerKind::weighted_manhattan ? alpha_.sum() : static_cast<double>(dim);
}

double median(std::vector<double> values)
{
    if (values.empty())
        throw InputError("median of empty sample");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1)
        return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

VectorXd mad_weights(const MatrixXd& data, std::vector<Index>* zero_mad_features)
{
    if (data.rows() < 1 || data.cols() < 1)
        throw InputError("mad_weights: empty data");
    VectorXd alpha(data.cols());
    std::vector<double> column(static_cast<std::size_t>(data.rows()));
    for (Index j = 0; j < data.cols(); ++j) {
        for (Index r = 0; r < data.rows(); ++r)
            column[static_cast<std::size_t>(r)] = data(r, j);
        const double med = median(column);
        for (auto& v : column)
            v = std::abs(v - med);
        const double mad = median(column);
        if (mad > 0.0) {
            alpha(j) = 1.0 / mad;
        } else {
            alpha(j) = 1.0;
            if (zero_mad_features)
                zero_mad_features->push_back(j);
        }
    }
    return alpha;
}

ObjectiveSpec build_objective(const Regularizer& reg, const VectorXd& x)
{
    const Index d = x.size();
    ObjectiveSpec obj;
    obj.features = d;
    obj.anchor = x;

    switch (reg.kind()) {
    case RegularizerKind::weighted_manhattan: {
        if (reg.alpha().size() != d)
            throw InputError("manhattan regularizer: " + std::to_string(reg.alpha().size()) +
                             " weights for dimension " + std::to_string(d));
        obj.upsilon = reg.alpha();
        ProgramSpec p(2 * d);
        p.c.tail(d).setOnes();
        for (Index j = 0; j < d; ++j) {
            const double a = reg.alpha()(j);
            LinearRow up{VectorXd::Zero(2 * d), a * x(j)};
            up.a(j) = a;
            up.a(d + j) = -1.0;
            LinearRow down{VectorXd::Zero(2 * d), -a * x(j)};
            down.a(j) = -a;
            down.a(d + j) = -1.0;
            p.ineq.push_back(std::move(up));
            p.ineq.push_back(std::move(down));
        }
        p.lower = VectorXd::Constant(2 * d, -std::numeric_limits<double>::infinity());
        p.lower->tail(d).setZero();
        obj.program = std::move(p);
        break;
    }
    case RegularizerKind::euclidean: {
        ProgramSpec p(d);
        p.hessian = MatrixXd::Identity(d, d);
        p.c = -x;
        obj.program = std::move(p);
        break;
    }
    case RegularizerKind::generalized_l2: {
        if (reg.lambda().rows() != d)
            throw InputError("generalized-l2 regularizer: matrix does not match dimension " + std::to_string(d));
        ProgramSpec p(d);
        p.hessian = reg.lambda();
        p.c = -(reg.lambda() * x);
        obj.program = std::move(p);
        break;
    }
    }
    return obj;
}

VectorXd ObjectiveSpec::lift(const VectorXd& xcf) const
{
    VectorXd z = VectorXd::Zero(program.n);
    z.head(features) = xcf;
    if (upsilon.size())
        z.segment(features, features) = upsilon.cwiseProduct((xcf - anchor).cwiseAbs());
    return z;
}

double ObjectiveSpec::value_at(const VectorXd& xcf) const
{
    return program.objective(lift(xcf));
}

void ObjectiveSpec::append_variables(Index extra)
{
    if (extra <= 0) return;
    ProgramSpec& p = program;
    const Index n = p.n + extra;
    auto widen = [&](VectorXd& v, double fill) {
        VectorXd w = VectorXd::Constant(n, fill);
        w.head(v.size()) = v;
        v = std::move(w);
    };
    widen(p.c, 0.0);
    if (p.hessian) {
        MatrixXd h = MatrixXd::Zero(n, n);
        h.topLeftCorner(p.n, p.n) = *p.hessian;
        p.hessian = std::move(h);
    }
    for (auto& row : p.eq) widen(row.a, 0.0);
    for (auto& row : p.ineq) widen(row.a, 0.0);
    for (auto& row : p.qineq) {
        MatrixXd P = MatrixXd::Zero(n, n);
        P.topLeftCorner(p.n, p.n) = row.P;
        row.P = std::move(P);
        widen(row.q, 0.0);
    }
    if (p.lower) widen(*p.lower, -std::numeric_limits<double>::infinity());
    if (p.upper) widen(*p.upper, std::numeric_limits<double>::infinity());
    p.n = n;
}

}  // namespace lvqcf
