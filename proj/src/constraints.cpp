#include "lvqcf/constraints.hpp"

#include "lvqcf/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace lvqcf {

bool LinearConstraint::degenerate() const
{
    return q.isZero(0.0) && r == 0.0;
}

bool QuadraticConstraint::degenerate() const
{
    return Q.isZero(0.0) && q.isZero(0.0) && r == 0.0;
}

bool QuadraticConstraint::convex() const
{
    if (Q.isZero(0.0)) return true;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Q, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff());
}

std::vector<LinearConstraint> linear_constraints(const LvqModel& model, std::size_t target)
{
    if (model.metric() == MetricKind::local)
        throw ContractError("linear_constraints: model uses local metrics, use quadratic_constraints");
    if (target >= model.size())
        throw InputError("target prototype index " + std::to_string(target) + " out of range");

    const int label = model.prototype(target).label;

    std::vector<LinearConstraint> out;
    for (std::size_t j = 0; j < model.size(); ++j) {
        if (model.prototype(j).label == label) continue;
        LinearConstraint c;
        c.q = model.lambda_w(j) - model.lambda_w(target);
        c.r = 0.5 * (model.self_norm(target) - model.self_norm(j));
        c.target = target;
        c.other = j;
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<QuadraticConstraint> quadratic_constraints(const LvqModel& model, std::size_t target)
{
    if (target >= model.size())
        throw InputError("target prototype index " + std::to_string(target) + " out of range");

    const MatrixXd& li = model.lambda(target);
    const VectorXd& pi = model.prototype(target).w;
    const int label = model.prototype(target).label;
    const VectorXd& li_pi = model.lambda_w(target);

    std::vector<QuadraticConstraint> out;
    for (std::size_t j = 0; j < model.size(); ++j) {
        const auto& pj = model.prototype(j);
        if (pj.label == label) continue;
        const MatrixXd& lj = model.lambda(j);
        const VectorXd& lj_pj = model.lambda_w(j);
        QuadraticConstraint c;
        c.Q = li - lj;
        c.Q = 0.5 * (c.Q + c.Q.transpose());
        c.q = lj_pj - li_pi;
        // second term uses Lambda_j, matching the expansion of d(x', p_j)
        c.r = 0.5 * (pi.dot(li_pi) - pj.w.dot(lj_pj));
        c.target = target;
        c.other = j;
        c.lambda_i = li;
        c.lambda_j = lj;
        out.push_back(std::move(c));
    }
    return out;
}

AffineMinorant linearize_concave_part(QuadraticConstraint& c, const MatrixXd& lambda_j, const VectorXd& x_k)
{
    if (x_k.size() != lambda_j.rows())
        throw InputError("linearization point has length " + std::to_string(x_k.size()) + ", expected " +
                         std::to_string(lambda_j.rows()));
    AffineMinorant m;
    m.rho = lambda_j * x_k;
    m.r_tilde = -0.5 * x_k.dot(m.rho);
    c.convexified = m;
    return m;
}

// ---------------------------------------------------------------------------

void UserConstraints::validate(Index dim) const
{
    if (lower && lower->size() != dim)
        throw InputError("constraints.box.lower: length " + std::to_string(lower->size()) + ", expected " +
                         std::to_string(dim));
    if (upper && upper->size() != dim)
        throw InputError("constraints.box.upper: length " + std::to_string(upper->size()) + ", expected " +
                         std::to_string(dim));
    if (lower && upper)
        for (Index j = 0; j < dim; ++j)
            if ((*lower)(j) > (*upper)(j))
                throw InputError("constraints.box: lower > upper for feature " + std::to_string(j));
    for (Index j : frozen)
        if (j < 0 || j >= dim)
            throw InputError("constraints.frozen: feature index " + std::to_string(j) + " out of range");
    for (std::size_t k = 0; k < linear.size(); ++k)
        if (linear[k].a.size() != dim || !linear[k].a.allFinite() || !std::isfinite(linear[k].b))
            throw InputError("constraints.linear[" + std::to_string(k) + "]: expected finite a of length " +
                             std::to_string(dim));
}

bool UserConstraints::satisfied(const VectorXd& xcf, const VectorXd& original, double tol) const
{
    if (lower && ((*lower - xcf).array() > tol).any()) return false;
    if (upper && ((xcf - *upper).array() > tol).any()) return false;
    for (Index j : frozen)
        if (xcf(j) != original(j)) return false;
    for (const auto& row : linear)
        if (row.a.dot(xcf) - row.b > tol) return false;
    return true;
}

namespace {

using nlohmann::json;

VectorXd bound_vector(const json& j, const std::string& field, double missing)
{
    if (!j.is_array())
        throw ParseError(field + ": expected an array");
    VectorXd v(static_cast<Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (j[k].is_null())
            v(static_cast<Index>(k)) = missing;
        else if (j[k].is_number())
            v(static_cast<Index>(k)) = j[k].get<double>();
        else
            throw ParseError(field + "[" + std::to_string(k) + "]: expected a number or null");
    }
    return v;
}

}  // namespace

UserConstraints parse_user_constraints(const std::string& json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("constraints: malformed JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ParseError("constraints: top level must be an object");

    constexpr double inf = std::numeric_limits<double>::infinity();
    UserConstraints uc;
    if (doc.contains("box")) {
        const json& box = doc["box"];
        if (!box.is_object())
            throw ParseError("box: expected an object");
        if (box.contains("lower")) uc.lower = bound_vector(box["lower"], "box.lower", -inf);
        if (box.contains("upper")) uc.upper = bound_vector(box["upper"], "box.upper", inf);
    }
    if (doc.contains("frozen")) {
        if (!doc["frozen"].is_array())
            throw ParseError("frozen: expected an array of feature indices");
        for (std::size_t k = 0; k < doc["frozen"].size(); ++k) {
            const json& v = doc["frozen"][k];
            if (!v.is_number_integer())
                throw ParseError("frozen[" + std::to_string(k) + "]: expected an integer");
            uc.frozen.push_back(v.get<Index>());
        }
    }
    if (doc.contains("linear")) {
        if (!doc["linear"].is_array())
            throw ParseError("linear: expected an array");
        for (std::size_t k = 0; k < doc["linear"].size(); ++k) {
            const json& row = doc["linear"][k];
            const std::string where = "linear[" + std::to_string(k) + "]";
            if (!row.is_object() || !row.contains("a") || !row.contains("b") || !row["b"].is_number())
                throw ParseError(where + ": expected {\"a\": [...], \"b\": number}");
            LinearRow lr;
            lr.a = bound_vector(row["a"], where + ".a", std::numeric_limits<double>::quiet_NaN());
            if (!lr.a.allFinite())
                throw ParseError(where + ".a: entries must be numbers");
            lr.b = row["b"].get<double>();
            uc.linear.push_back(std::move(lr));
        }
    }
    return uc;
}

UserConstraints load_user_constraints(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open constraints file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_user_constraints(buffer.str());
}

ProgramSpec apply_user_constraints(const ProgramSpec& spec, const UserConstraints& uc, const VectorXd& x,
                                   Index features)
{
    if (uc.empty())
        return spec;
    uc.validate(features);
    if (x.size() != features)
        throw InputError("apply_user_constraints: input has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(features));

    constexpr double inf = std::numeric_limits<double>::infinity();
    ProgramSpec out = spec;
    const Index n = out.n;

    for (Index j : uc.frozen) {
        LinearRow row{VectorXd::Zero(n), x(j)};
        row.a(j) = 1.0;
        out.eq.push_back(std::move(row));
    }
    if (uc.lower) {
        if (!out.lower) out.lower = VectorXd::Constant(n, -inf);
        out.lower->head(features) = out.lower->head(features).cwiseMax(*uc.lower);
    }
    if (uc.upper) {
        if (!out.upper) out.upper = VectorXd::Constant(n, inf);
        out.upper->head(features) = out.upper->head(features).cwiseMin(*uc.upper);
    }
    if (out.lower && out.upper)
        for (Index j = 0; j < n; ++j)
            if ((*out.lower)(j) > (*out.upper)(j))
                throw InputError("constraints.box: empty range for feature " + std::to_string(j));
    for (const auto& lr : uc.linear) {
        LinearRow row{VectorXd::Zero(n), lr.b};
        row.a.head(features) = lr.a;
        out.ineq.push_back(std::move(row));
    }
    return out;
}

}  // namespace lvqcf
