#include "lvqcf/lvq_model.hpp"

#include "lvqcf/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace lvqcf {

namespace {

std::string shape_of(const MatrixXd& m)
{
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_psd(const MatrixXd& lambda, const std::string& what)
{
    if (!lambda.allFinite())
        throw InputError(what + ": non-finite entries");
    const double scale = std::max(1.0, lambda.norm());
    if ((lambda - lambda.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw InputError(what + ": Lambda is not symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(lambda, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8 * scale)
        throw InputError(what + ": Lambda is not positive semi-definite");
}

}  // namespace

const char* to_string(MetricKind kind)
{
    switch (kind) {
    case MetricKind::identity: return "identity";
    case MetricKind::global: return "global";
    case MetricKind::local: return "local";
    }
    return "?";
}

MetricKind metric_kind_from_string(const std::string& name)
{
    if (name == "identity") return MetricKind::identity;
    if (name == "global") return MetricKind::global;
    if (name == "local") return MetricKind::local;
    throw InputError("unknown metric kind '" + name + "' (expected identity, global or local)");
}

MatrixXd lambda_from_omega(const MatrixXd& omega)
{
    MatrixXd lambda = omega.transpose() * omega;
    return 0.5 * (lambda + lambda.transpose());
}

LvqModel::LvqModel(std::vector<Prototype> prototypes, MetricKind kind,
                   std::optional<MatrixXd> global_omega)
    : prototypes_(std::move(prototypes)), kind_(kind), global_omega_(std::move(global_omega))
{
    if (prototypes_.size() < 2)
        throw InputError("model needs at least 2 prototypes, got " + std::to_string(prototypes_.size()));
    dim_ = prototypes_.front().w.size();
    if (dim_ < 1)
        throw InputError("prototypes[0].w: empty vector");

    std::set<int> labels;
    for (std::size_t i = 0; i < prototypes_.size(); ++i) {
        const auto& p = prototypes_[i];
        const std::string where = "prototypes[" + std::to_string(i) + "]";
        if (p.w.size() != dim_)
            throw InputError(where + ".w: length " + std::to_string(p.w.size()) + ", expected " +
                             std::to_string(dim_));
        if (!p.w.allFinite())
            throw InputError(where + ".w: non-finite entries");
        if (kind_ == MetricKind::local) {
            if (!p.omega)
                throw InputError(where + ".omega: required for local metric");
            if (p.omega->rows() != dim_ || p.omega->cols() != dim_)
                throw InputError(where + ".omega: shape " + shape_of(*p.omega) + ", expected " +
                                 std::to_string(dim_) + "x" + std::to_string(dim_));
            if (!p.omega->allFinite())
                throw InputError(where + ".omega: non-finite entries");
        } else if (p.omega) {
            throw InputError(where + ".omega: only allowed for local metric");
        }
        labels.insert(p.label);
    }
    if (labels.size() < 2)
        throw InputError("model needs at least 2 distinct labels");
    labels_.assign(labels.begin(), labels.end());

    for (std::size_t i = 0; i < prototypes_.size(); ++i)
        for (std::size_t j = i + 1; j < prototypes_.size(); ++j)
            if (prototypes_[i].label != prototypes_[j].label && prototypes_[i].w == prototypes_[j].w)
                throw InputError("prototypes[" + std::to_string(i) + "] and prototypes[" + std::to_string(j) +
                                 "] are identical but carry different labels");

    switch (kind_) {
    case MetricKind::identity:
        if (global_omega_)
            throw InputError("omega: only allowed for global metric");
        lambdas_.assign(1, MatrixXd::Identity(dim_, dim_));
        break;
    case MetricKind::global:
        if (!global_omega_)
            throw InputError("omega: required for global metric");
        if (global_omega_->rows() != dim_ || global_omega_->cols() != dim_)
            throw InputError("omega: shape " + shape_of(*global_omega_) + ", expected " + std::to_string(dim_) +
                             "x" + std::to_string(dim_));
        if (!global_omega_->allFinite())
            throw InputError("omega: non-finite entries");
        lambdas_.assign(1, lambda_from_omega(*global_omega_));
        check_psd(lambdas_.front(), "omega");
        break;
    case MetricKind::local:
        if (global_omega_)
            throw InputError("omega: only allowed for global metric");
        lambdas_.reserve(prototypes_.size());
        for (std::size_t i = 0; i < prototypes_.size(); ++i) {
            lambdas_.push_back(lambda_from_omega(*prototypes_[i].omega));
            check_psd(lambdas_.back(), "prototypes[" + std::to_string(i) + "].omega");
        }
        break;
    }
    for (std::size_t i = 0; i < prototypes_.size(); ++i) {
        lambda_w_.push_back(lambda(i) * prototypes_[i].w);
        self_norm_.push_back(prototypes_[i].w.dot(lambda_w_.back()));
    }
}

const MatrixXd& LvqModel::lambda(std::size_t i) const
{
    if (i >= prototypes_.size())
        throw InputError("prototype index " + std::to_string(i) + " out of range");
    return kind_ == MetricKind::local ? lambdas_[i] : lambdas_.front();
}

bool LvqModel::has_label(int label) const
{
    return std::binary_search(labels_.begin(), labels_.end(), label);
}

void LvqModel::check_input(const VectorXd& x) const
{
    if (x.size() != dim_)
        throw InputError("input has length " + std::to_string(x.size()) + ", model dimension is " +
                         std::to_string(dim_));
}

double LvqModel::distance(const VectorXd& x, std::size_t i) const
{
    check_input(x);
    const VectorXd& w = prototype(i).w;
    if (kind_ == MetricKind::identity)
        return (x - w).squaredNorm();
    const MatrixXd& lam = lambda(i);
    double sum = 0.0;
    for (Index c = 0; c < dim_; ++c) {
        const double dc = x(c) - w(c);
        double t = 0.0;
        for (Index r = 0; r < dim_; ++r)
            t += lam(r, c) * (x(r) - w(r));
        sum += dc * t;
    }
    return sum;
}

std::size_t LvqModel::nearest(const VectorXd& x) const
{
    check_input(x);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < prototypes_.size(); ++i) {
        const double d = distance(x, i);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

int LvqModel::predict(const VectorXd& x) const
{
    return prototypes_[nearest(x)].label;
}

// ---------------------------------------------------------------------------
// Model file

namespace {

using nlohmann::json;

VectorXd parse_vector(const json& j, const std::string& field)
{
    if (!j.is_array())
        throw ParseError(field + ": expected an array of numbers");
    VectorXd v(static_cast<Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!j[k].is_number())
            throw ParseError(field + "[" + std::to_string(k) + "]: expected a number");
        v(static_cast<Index>(k)) = j[k].get<double>();
        if (!std::isfinite(v(static_cast<Index>(k))))
            throw ParseError(field + "[" + std::to_string(k) + "]: non-finite value");
    }
    return v;
}

MatrixXd parse_matrix(const json& j, const std::string& field, Index dim)
{
    if (!j.is_array() || j.empty())
        throw ParseError(field + ": expected a non-empty array of rows");
    const auto rows = static_cast<Index>(j.size());
    MatrixXd m(rows, dim);
    for (Index r = 0; r < rows; ++r) {
        VectorXd row = parse_vector(j[static_cast<std::size_t>(r)], field + "[" + std::to_string(r) + "]");
        if (row.size() != dim)
            throw ParseError(field + ": wrong shape, row " + std::to_string(r) + " has length " +
                             std::to_string(row.size()) + ", expected " + std::to_string(dim));
        m.row(r) = row.transpose();
    }
    if (rows != dim)
        throw ParseError(field + ": wrong shape " + std::to_string(rows) + "x" + std::to_string(dim) +
                         ", expected " + std::to_string(dim) + "x" + std::to_string(dim));
    return m;
}

void append_number(std::string& out, double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void append_vector(std::string& out, const VectorXd& v)
{
    out += '[';
    for (Index k = 0; k < v.size(); ++k) {
        if (k) out += ", ";
        append_number(out, v(k));
    }
    out += ']';
}

void append_matrix(std::string& out, const MatrixXd& m, const std::string& indent)
{
    out += '[';
    for (Index r = 0; r < m.rows(); ++r) {
        out += r ? ",\n" + indent + " " : "";
        append_vector(out, m.row(r).transpose());
    }
    out += ']';
}

}  // namespace

LvqModel parse_model(const std::string& json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model: malformed JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ParseError("model: top level must be an object");
    if (!doc.contains("prototypes") || !doc["prototypes"].is_array())
        throw ParseError("prototypes: missing or not an array");
    if (!doc.contains("metric") || !doc["metric"].is_string())
        throw ParseError("metric: missing or not a string");

    MetricKind kind;
    try {
        kind = metric_kind_from_string(doc["metric"].get<std::string>());
    } catch (const InputError& e) {
        throw ParseError(std::string("metric: ") + e.what());
    }

    const json& protos = doc["prototypes"];
    if (protos.empty())
        throw ParseError("prototypes: empty");

    Index dim = -1;
    if (doc.contains("dim")) {
        if (!doc["dim"].is_number_integer() || doc["dim"].get<long long>() < 1)
            throw ParseError("dim: expected a positive integer");
        dim = doc["dim"].get<Index>();
    }

    std::vector<Prototype> prototypes;
    for (std::size_t i = 0; i < protos.size(); ++i) {
        const std::string where = "prototypes[" + std::to_string(i) + "]";
        const json& p = protos[i];
        if (!p.is_object())
            throw ParseError(where + ": expected an object");
        if (!p.contains("w"))
            throw ParseError(where + ".w: missing");
        if (!p.contains("label") || !p["label"].is_number_integer())
            throw ParseError(where + ".label: missing or not an integer");
        Prototype proto;
        proto.w = parse_vector(p["w"], where + ".w");
        if (dim < 0)
            dim = proto.w.size();
        if (proto.w.size() != dim)
            throw ParseError(where + ".w: dimension mismatch, length " + std::to_string(proto.w.size()) +
                             ", expected " + std::to_string(dim));
        proto.label = p["label"].get<int>();
        if (p.contains("omega")) {
            if (kind != MetricKind::local)
                throw ParseError(where + ".omega: only allowed with metric \"local\"");
            proto.omega = parse_matrix(p["omega"], where + ".omega", dim);
        } else if (kind == MetricKind::local) {
            throw ParseError(where + ".omega: missing (required with metric \"local\")");
        }
        prototypes.push_back(std::move(proto));
    }

    std::optional<MatrixXd> global_omega;
    if (doc.contains("omega")) {
        if (kind != MetricKind::global)
            throw ParseError("omega: only allowed with metric \"global\"");
        global_omega = parse_matrix(doc["omega"], "omega", dim);
    } else if (kind == MetricKind::global) {
        throw ParseError("omega: missing (required with metric \"global\")");
    }

    try {
        return LvqModel(std::move(prototypes), kind, std::move(global_omega));
    } catch (const InputError& e) {
        throw ParseError(e.what());
    }
}

LvqModel load_model(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open model file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_model(buffer.str());
}

std::string serialize_model(const LvqModel& model)
{
    std::string out = "{\n  \"dim\": " + std::to_string(model.dim()) + ",\n  \"metric\": \"" +
                      to_string(model.metric()) + "\",\n";
    if (model.global_omega()) {
        out += "  \"omega\": ";
        append_matrix(out, *model.global_omega(), "           ");
        out += ",\n";
    }
    out += "  \"prototypes\": [\n";
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto& p = model.prototype(i);
        out += "    {\"label\": " + std::to_string(p.label) + ", \"w\": ";
        append_vector(out, p.w);
        if (p.omega) {
            out += ",\n     \"omega\": ";
            append_matrix(out, *p.omega, "               ");
        }
        out += i + 1 < model.size() ? "},\n" : "}\n";
    }
    out += "  ]\n}\n";
    return out;
}

void save_model(const LvqModel& model, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write model file '" + path + "'");
    out << serialize_model(model);
    if (!out)
        throw InputError("failed writing model file '" + path + "'");
}

// ---------------------------------------------------------------------------
// Plumbing fitter

namespace {

MatrixXd kmeans(const MatrixXd& points, int k, std::mt19937_64& rng)
{
    const Index n = points.rows();
    MatrixXd centers(k, points.cols());

    // k-means++ seeding
    std::uniform_int_distribution<Index> first(0, n - 1);
    centers.row(0) = points.row(first(rng));
    VectorXd best_d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = best_d2.sum();
        Index pick = 0;
        if (total > 0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (pick = 0; pick < n - 1; ++pick) {
                target -= best_d2(pick);
                if (target <= 0) break;
            }
        } else {
            pick = first(rng);
        }
        centers.row(c) = points.row(pick);
        best_d2 = best_d2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (Index r = 0; r < n; ++r) {
            Index c;
            (centers.rowwise() - points.row(r)).rowwise().squaredNorm().minCoeff(&c);
            if (assign[static_cast<std::size_t>(r)] != static_cast<int>(c)) {
                assign[static_cast<std::size_t>(r)] = static_cast<int>(c);
                changed = true;
            }
        }
        if (!changed) break;
        MatrixXd sums = MatrixXd::Zero(k, points.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Index r = 0; r < n; ++r) {
            sums.row(assign[static_cast<std::size_t>(r)]) += points.row(r);
            ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(r)])];
        }
        for (int c = 0; c < k; ++c)
            if (counts[static_cast<std::size_t>(c)] > 0)
                centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
    }
    return centers;
}

}  // namespace

LvqModel fit_plumbing(const Dataset& data, int k, const MetricRequest& metric, std::uint64_t seed)
{
    if (k < 1)
        throw InputError("k must be at least 1, got " + std::to_string(k));
    if (static_cast<std::size_t>(data.size()) != data.y.size())
        throw InputError("dataset has " + std::to_string(data.size()) + " rows but " +
                         std::to_string(data.y.size()) + " labels");

    std::map<int, std::vector<Index>> by_class;
    for (Index r = 0; r < data.size(); ++r)
        by_class[data.y[static_cast<std::size_t>(r)]].push_back(r);

    std::mt19937_64 rng(seed);
    std::vector<Prototype> prototypes;
    for (const auto& [label, rows] : by_class) {
        if (rows.size() < static_cast<std::size_t>(k))
            throw InputError("class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                             " points, fewer than k=" + std::to_string(k));
        MatrixXd points(static_cast<Index>(rows.size()), data.dim());
        for (std::size_t r = 0; r < rows.size(); ++r)
            points.row(static_cast<Index>(r)) = data.x.row(rows[r]);
        const MatrixXd centers = kmeans(points, k, rng);
        for (int c = 0; c < k; ++c) {
            Prototype p;
            p.w = centers.row(c).transpose();
            p.label = label;
            if (metric.kind == MetricKind::local) {
                auto it = metric.class_omegas.find(label);
                p.omega = it != metric.class_omegas.end() ? it->second : MatrixXd::Identity(data.dim(), data.dim());
            }
            prototypes.push_back(std::move(p));
        }
    }

    std::optional<MatrixXd> global;
    if (metric.kind == MetricKind::global)
        global = metric.global_omega ? *metric.global_omega : MatrixXd::Identity(data.dim(), data.dim());
    return LvqModel(std::move(prototypes), metric.kind, std::move(global));
}

}  // namespace lvqcf
