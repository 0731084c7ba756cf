#pragma once

#include "lvqcf/baseline.hpp"
#include "lvqcf/engine.hpp"
#include "lvqcf/lvq_model.hpp"
#include "lvqcf/regularizer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lvqcf {

// ---------------------------------------------------------------------------
// Data

struct SyntheticSpec {
    int classes = 2;
    int dim = 2;
    int n = 200;
    double separation = 4.0;
    std::uint64_t seed = 0;
};

// Gaussian blobs with class centers spaced `separation` apart (on a circle
// in the first two coordinates) and per-class, per-feature noise scales in
// [0.5, 1.5]. Labels 0..classes-1, assigned round-robin.
Dataset make_synthetic(const SyntheticSpec& spec);

// Rectangular numeric CSV with a header row. The label column must hold
// integers; all other columns become features in file order.
Dataset ingest_csv(const std::string& path, const std::string& label_column);
Dataset parse_csv(const std::string& text, const std::string& label_column);
void write_csv(const Dataset& data, const std::string& path, const std::string& label_column = "label");
std::string to_csv(const Dataset& data, const std::string& label_column = "label");

// ---------------------------------------------------------------------------
// Fold preparation

struct Standardizer {
    VectorXd mean;
    VectorXd scale;  // standard deviation, 1 for constant features

    static Standardizer fit(const MatrixXd& x);
    MatrixXd apply(const MatrixXd& x) const;
};

// Stratified fold index sets: rows of each class are shuffled and dealt
// to the folds in turn.
std::vector<std::vector<Index>> make_folds(const std::vector<int>& labels, int folds, std::uint64_t seed);

struct FoldData {
    Standardizer standardizer;  // fitted on the training rows only
    Dataset train;              // standardized
    Dataset test;               // standardized with the training statistics
    VectorXd mad;               // MAD weights of the standardized training rows
    std::vector<Index> zero_mad_features;
};

FoldData prepare_fold(const Dataset& data, const std::vector<Index>& train_rows, const std::vector<Index>& test_rows);

// Metric handed to the plumbing fitter: the inverse pooled within-class
// covariance (global) or the inverse class covariance (local), ridge
// regularized and scaled to trace dim, factored as its symmetric square
// root.
MetricRequest estimate_metric(const Dataset& train, MetricKind kind);

// ---------------------------------------------------------------------------
// Benchmark

enum class Method { ours, baseline_ds };

const char* to_string(Method m);
Method method_from_string(const std::string& name);

// glvq / gmlvq / lgmlvq
const char* model_name(MetricKind kind);
MetricKind model_kind_from_name(const std::string& name);

struct CsvSource {
    std::string path;
    std::string label_column = "label";
};

struct BenchSpec {
    std::string name = "synthetic";
    std::variant<SyntheticSpec, CsvSource> dataset = SyntheticSpec{};
    std::vector<MetricKind> models = {MetricKind::identity, MetricKind::global, MetricKind::local};
    int prototypes_per_class = 3;
    int folds = 4;
    RegularizerKind regularizer = RegularizerKind::weighted_manhattan;
    double epsilon = 1e-4;
    std::vector<Method> methods = {Method::ours, Method::baseline_ds};
    std::uint64_t seed = 0;
    int max_cases_per_fold = 0;  // 0 means every test point
    bool parallel = false;
    BaselineConfig baseline;
};

std::vector<BenchSpec> parse_bench_specs(const std::string& json_text);

struct BenchCase {
    std::string model;
    std::string method;
    int fold = 0;
    Index row = 0;  // index into the full data set
    int y_target = 0;
    bool success = false;
    double distance = 0.0;
    double wall_time_ms = 0.0;
};

struct BenchRow {
    std::string dataset;
    std::string model;
    std::string method;
    std::size_t cases = 0;
    std::size_t failures = 0;
    double failure_rate = 0.0;
    double mean_distance = 0.0;         // over this method's successes
    double mean_distance_paired = 0.0;  // over cases every method solved
    double median_wall_ms = 0.0;
};

struct SpeedupRow {
    std::string dataset;
    std::string model;
    double ratio = 0.0;  // median baseline time / median ours time
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::vector<SpeedupRow> speedups;
    std::vector<BenchCase> cases;

    const BenchRow* find(const std::string& dataset, const std::string& model, const std::string& method) const;
    void merge(BenchReport other);
    std::string to_csv() const;
    std::string to_table() const;
};

// k-fold protocol: per fold, standardize and compute MAD weights on the
// training rows, fit a plumbing model, then request a counterfactual for
// every test point toward the label following its predicted label
// (cyclically) with each method.
BenchReport run_bench(const BenchSpec& spec);

// ---------------------------------------------------------------------------
// Oracles and scripted scenarios

struct GridOracleResult {
    VectorXd x;
    double distance = 0.0;
};

// Exhaustive scan of the grid lower + k * step inside [lower, upper] for
// the valid point (label y_target with margin epsilon) of smallest theta.
// Limited to dim <= 3.
std::optional<GridOracleResult> grid_oracle(const LvqModel& model, const VectorXd& x, int y_target,
                                            const Regularizer& reg, const VectorXd& lower, const VectorXd& upper,
                                            double step, double epsilon = 1e-4);

// Four-feature house-price style model (TotalBsmt, 1stFlr, 2ndFlr,
// GrLivA) with a query point whose cheapest counterfactual enlarges the
// second floor beyond the first. The side constraint 2ndFlr <= 1stFlr is
// the linear row a = (0, -1, 1, 0), b = 0.
struct HousingScenario {
    LvqModel model;
    VectorXd x;
    int y_target = 0;
    Regularizer regularizer;
    UserConstraints constraint;
    std::vector<std::string> feature_names;
};

HousingScenario housing_scenario();

}  // namespace lvqcf
