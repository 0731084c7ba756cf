#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lvqcf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class MetricKind { identity, global, local };

const char* to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& name);

struct Prototype {
    VectorXd w;
    int label = 0;
    std::optional<MatrixXd> omega;  // local metrics only
};

// A labeled data set, one sample per row.
struct Dataset {
    MatrixXd x;
    std::vector<int> y;
    std::vector<std::string> feature_names;

    Index size() const { return x.rows(); }
    Index dim() const { return x.cols(); }
};

// Winner-takes-all prototype classifier with an optional learned metric.
//
// The metric is stored as its factor Omega; the distance matrix
// Lambda = Omega^T Omega is computed once at construction and cached per
// prototype. The model is immutable after construction and may be shared
// between threads.
class LvqModel {
public:
    // Validates every invariant and throws InputError on the first
    // violation. `global_omega` must be present iff kind == global, and
    // every prototype must carry an omega iff kind == local.
    LvqModel(std::vector<Prototype> prototypes, MetricKind kind,
             std::optional<MatrixXd> global_omega = std::nullopt);

    Index dim() const { return dim_; }
    std::size_t size() const { return prototypes_.size(); }
    MetricKind metric() const { return kind_; }
    const std::vector<Prototype>& prototypes() const { return prototypes_; }
    const Prototype& prototype(std::size_t i) const { return prototypes_.at(i); }
    const std::optional<MatrixXd>& global_omega() const { return global_omega_; }

    // Lambda used for prototype i (identity, the shared global matrix or
    // the prototype's own matrix).
    const MatrixXd& lambda(std::size_t i) const;
    // Lambda_i p_i and p_i^T Lambda_i p_i
    const VectorXd& lambda_w(std::size_t i) const { return lambda_w_.at(i); }
    double self_norm(std::size_t i) const { return self_norm_.at(i); }

    // Sorted distinct labels.
    const std::vector<int>& labels() const { return labels_; }
    bool has_label(int label) const;

    // (x - p_i)^T Lambda_i (x - p_i)
    double distance(const VectorXd& x, std::size_t i) const;

    // Index of the nearest prototype; ties go to the lowest index.
    std::size_t nearest(const VectorXd& x) const;
    int predict(const VectorXd& x) const;

private:
    void check_input(const VectorXd& x) const;

    std::vector<Prototype> prototypes_;
    MetricKind kind_;
    std::optional<MatrixXd> global_omega_;
    Index dim_ = 0;
    std::vector<MatrixXd> lambdas_;  // one per prototype, shared storage for identity/global
    std::vector<VectorXd> lambda_w_;
    std::vector<double> self_norm_;
    std::vector<int> labels_;
};

// Lambda = Omega^T Omega, symmetrized.
MatrixXd lambda_from_omega(const MatrixXd& omega);

// Model file IO. Numbers are written with 17 significant digits so that
// a save/load round trip is bit-exact.
LvqModel load_model(const std::string& path);
LvqModel parse_model(const std::string& json_text);
void save_model(const LvqModel& model, const std::string& path);
std::string serialize_model(const LvqModel& model);

// Metric matrices handed to the plumbing fitter. For local metrics the
// factor is looked up by class label, so all prototypes of one class share
// a matrix.
struct MetricRequest {
    MetricKind kind = MetricKind::identity;
    std::optional<MatrixXd> global_omega;
    std::map<int, MatrixXd> class_omegas;
};

// Class-conditional k-means (k-means++ seeding, at most 100 Lloyd
// iterations). Training of the metric is out of scope: the matrices in
// `metric` are used as given.
LvqModel fit_plumbing(const Dataset& data, int k, const MetricRequest& metric,
                      std::uint64_t seed = 0);

}  // namespace lvqcf
