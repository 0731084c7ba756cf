#include "lvqcf/bench.hpp"
#include "lvqcf/error.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

using namespace lvqcf;
using namespace lvqcf::testing;

namespace {

VectorXd vec(std::initializer_list<double> v)
{
    return Eigen::Map<const VectorXd>(v.begin(), static_cast<Index>(v.size()));
}

Prototype proto(std::initializer_list<double> w, int label)
{
    Prototype p;
    p.w = vec(w);
    p.label = label;
    return p;
}

}  // namespace

TEST_CASE("csv ingestion keeps exact values")
{
    const Dataset d = parse_csv("a,label,b\n1.5,0,-2\n3,1,0.25\n1e-3,1,7\n", "label");
    REQUIRE(d.size() == 3);
    REQUIRE(d.dim() == 2);
    CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(d.x(0, 0) == 1.5);
    CHECK(d.x(0, 1) == -2.0);
    CHECK(d.x(2, 0) == 1e-3);
    CHECK(d.y == std::vector<int>{0, 1, 1});
}

TEST_CASE("csv errors name the row and column")
{
    CHECK_THROWS_WITH_AS(parse_csv("1stFlr,GrLivA,label\n1,2,0\n3,big,1\n", "label"),
                         doctest::Contains("row 2 (line 3), column \"GrLivA\""), ParseError);
    CHECK_THROWS_WITH_AS(parse_csv("a,label\nnan,0\n", "label"), doctest::Contains("column \"a\""), ParseError);
    CHECK_THROWS_AS(parse_csv("a,label\ninf,0\n", "label"), ParseError);
    CHECK_THROWS_WITH_AS(parse_csv("a,label\n1,0\n2\n", "label"), doctest::Contains("line 3"), ParseError);
    CHECK_THROWS_WITH_AS(parse_csv("a,b\n1,0\n", "label"), doctest::Contains("label"), ParseError);
    CHECK_THROWS_WITH_AS(parse_csv("a,label\n1,0.5\n", "label"), doctest::Contains("integer"), ParseError);
    CHECK_THROWS_AS(ingest_csv("/nonexistent/file.csv", "label"), ParseError);
}

TEST_CASE("synthetic data survives a csv round trip")
{
    const Dataset d = make_synthetic({3, 4, 30, 4.0, 5});
    const auto path = std::filesystem::temp_directory_path() / "lvqcf_roundtrip.csv";
    write_csv(d, path.string());
    const Dataset back = ingest_csv(path.string(), "label");
    std::filesystem::remove(path);
    CHECK(back.x == d.x);
    CHECK(back.y == d.y);
    CHECK(back.feature_names == d.feature_names);
}

TEST_CASE("synthetic generator is seeded")
{
    const Dataset a = make_synthetic({2, 3, 40, 4.0, 1});
    const Dataset b = make_synthetic({2, 3, 40, 4.0, 1});
    const Dataset c = make_synthetic({2, 3, 40, 4.0, 2});
    CHECK(a.x == b.x);
    CHECK(a.x != c.x);
    CHECK(std::set<int>(a.y.begin(), a.y.end()) == std::set<int>{0, 1});
    CHECK_THROWS_AS(make_synthetic({1, 2, 10, 4.0, 0}), InputError);
}

TEST_CASE("folds partition the rows and are stratified")
{
    std::vector<int> labels;
    for (int r = 0; r < 23; ++r) labels.push_back(r % 3);
    const auto folds = make_folds(labels, 4, 9);
    REQUIRE(folds.size() == 4);
    std::set<Index> seen;
    for (const auto& f : folds) {
        std::set<int> classes;
        for (Index r : f) {
            CHECK(seen.insert(r).second);
            classes.insert(labels[static_cast<std::size_t>(r)]);
        }
        CHECK(classes.size() == 3);
        CHECK(f.size() >= 5);
    }
    CHECK(seen.size() == 23);
    CHECK_THROWS_AS(make_folds(labels, 1, 0), InputError);
}

TEST_CASE("fold statistics come from training rows only")
{
    Dataset d = make_synthetic({2, 3, 40, 4.0, 3});
    const auto folds = make_folds(d.y, 4, 0);
    std::vector<Index> train;
    for (int g = 1; g < 4; ++g) train.insert(train.end(), folds[static_cast<std::size_t>(g)].begin(), folds[static_cast<std::size_t>(g)].end());
    const FoldData a = prepare_fold(d, train, folds[0]);

    // independent statistics over the training rows
    MatrixXd tx(static_cast<Index>(train.size()), 3);
    for (std::size_t r = 0; r < train.size(); ++r) tx.row(static_cast<Index>(r)) = d.x.row(train[r]);
    const VectorXd mean = tx.colwise().mean();
    CHECK((a.standardizer.mean - mean).norm() <= 1e-12);
    const MatrixXd z = (tx.rowwise() - mean.transpose()).array().rowwise() / a.standardizer.scale.transpose().array();
    CHECK((z.colwise().squaredNorm() / static_cast<double>(tx.rows()) - VectorXd::Ones(3).transpose()).norm() <= 1e-9);
    CHECK((a.mad - mad_weights(z)).norm() <= 1e-12);

    // wild test rows change nothing
    for (Index r : folds[0]) d.x.row(r) *= 1000.0;
    const FoldData b = prepare_fold(d, train, folds[0]);
    CHECK(a.standardizer.mean == b.standardizer.mean);
    CHECK(a.standardizer.scale == b.standardizer.scale);
    CHECK(a.mad == b.mad);
    CHECK(a.train.x == b.train.x);
}

TEST_CASE("metric estimates have trace equal to the dimension")
{
    const Dataset d = make_synthetic({3, 4, 90, 4.0, 3});
    const MetricRequest g = estimate_metric(d, MetricKind::global);
    REQUIRE(g.global_omega);
    CHECK(lambda_from_omega(*g.global_omega).trace() == doctest::Approx(4.0));
    const MetricRequest l = estimate_metric(d, MetricKind::local);
    CHECK(l.class_omegas.size() == 3);
    CHECK_FALSE(estimate_metric(d, MetricKind::identity).global_omega);
}

TEST_CASE("bench spec parsing")
{
    const auto specs = parse_bench_specs(R"([{"name": "s1", "dataset": {"type": "synthetic", "classes": 3, "dim": 5,
        "n": 120, "separation": 3.5, "seed": 4}, "models": ["gmlvq"], "methods": ["ours"], "folds": 3},
        {"name": "c", "dataset": {"type": "csv", "path": "x.csv", "label_column": "y"}}])");
    REQUIRE(specs.size() == 2);
    const auto& syn = std::get<SyntheticSpec>(specs[0].dataset);
    CHECK(syn.classes == 3);
    CHECK(syn.dim == 5);
    CHECK(syn.separation == 3.5);
    CHECK(specs[0].models == std::vector<MetricKind>{MetricKind::global});
    CHECK(specs[0].methods == std::vector<Method>{Method::ours});
    CHECK(specs[0].folds == 3);
    CHECK(std::get<CsvSource>(specs[1].dataset).label_column == "y");
    CHECK_THROWS_AS(parse_bench_specs(R"({"models": ["svm"]})"), ParseError);
    CHECK_THROWS_AS(parse_bench_specs("[1]"), ParseError);
}

TEST_CASE("bench runs are complete and reproducible")
{
    BenchSpec spec;
    spec.dataset = SyntheticSpec{2, 2, 40, 4.0, 7};
    spec.max_cases_per_fold = 4;
    const BenchReport a = run_bench(spec);
    const BenchReport b = run_bench(spec);
    CHECK(a.rows.size() == 6);
    CHECK(a.speedups.size() == 3);
    for (const auto& row : a.rows) {
        CHECK(row.cases == 16);
        CHECK(row.failure_rate >= 0.0);
        CHECK(row.failure_rate <= 1.0);
    }
    REQUIRE(a.cases.size() == b.cases.size());
    for (std::size_t k = 0; k < a.cases.size(); ++k) {
        CHECK(a.cases[k].success == b.cases[k].success);
        CHECK(a.cases[k].distance == b.cases[k].distance);
        CHECK(a.cases[k].y_target == b.cases[k].y_target);
    }
    const std::string csv = a.to_csv();
    CHECK(csv.rfind("dataset,model,method,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    CHECK(a.to_table().find("gmlvq") != std::string::npos);
    CHECK(a.find("synthetic", "lgmlvq", "ours") != nullptr);
}

TEST_CASE("smallest admissible bench spec")
{
    BenchSpec spec;
    spec.dataset = SyntheticSpec{2, 2, 8, 4.0, 1};
    spec.folds = 2;
    const BenchReport r = run_bench(spec);
    CHECK(r.rows.size() == 6);
    for (const auto& row : r.rows) CHECK(row.cases == 8);

    spec.dataset = SyntheticSpec{2, 2, 3, 4.0, 1};
    CHECK_THROWS_AS(run_bench(spec), InputError);
    spec.dataset = SyntheticSpec{2, 2, 40, 4.0, 1};
    spec.folds = 1;
    CHECK_THROWS_AS(run_bench(spec), InputError);
}

TEST_CASE("grid oracle on the two prototype example")
{
    const LvqModel m({proto({0, 0}, 0), proto({2, 0}, 1)}, MetricKind::identity);
    const Regularizer reg = Regularizer::manhattan_unit(2);
    const auto best = grid_oracle(m, vec({3, 0}), 0, reg, vec({-1, -1}), vec({5, 5}), 0.01);
    REQUIRE(best);
    CHECK(std::abs(best->distance - 2.0) <= 0.02 + 1e-9);
    CHECK(m.predict(best->x) == 0);

    const auto none = grid_oracle(m, vec({3, 0}), 0, reg, vec({2.9, -0.1}), vec({3.1, 0.1}), 0.01);
    CHECK_FALSE(none);

    const LvqModel m4({proto({0, 0, 0, 0}, 0), proto({2, 0, 0, 0}, 1)}, MetricKind::identity);
    CHECK_THROWS_AS(grid_oracle(m4, VectorXd::Zero(4), 0, Regularizer::euclidean(), VectorXd::Constant(4, -1),
                                VectorXd::Ones(4), 0.5),
                    InputError);
    CHECK_THROWS_AS(grid_oracle(m, vec({9, 0}), 0, reg, vec({-1, -1}), vec({5, 5}), 0.01), InputError);
}

TEST_CASE("housing scenario needs the side constraint")
{
    const HousingScenario s = housing_scenario();
    CHECK(s.model.predict(s.x) != s.y_target);
    CfRequest req;
    req.x = s.x;
    req.y_target = s.y_target;
    req.regularizer = s.regularizer;
    const CfResult free = explain(s.model, req);
    REQUIRE(free.success);
    const LinearRow& row = s.constraint.linear[0];
    CHECK(row.a.dot(free.x_cf) > row.b + 1e-3);

    req.user_constraints = s.constraint;
    const CfResult tied = explain(s.model, req);
    REQUIRE(tied.success);
    CHECK(row.a.dot(tied.x_cf) <= row.b + 1e-8);
    CHECK(s.model.predict(tied.x_cf) == s.y_target);
    CHECK(tied.distance >= free.distance - 1e-9);
}
