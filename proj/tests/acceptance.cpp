// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include "lvqcf/baseline.hpp"
#include "lvqcf/bench.hpp"
#include "lvqcf/ccp.hpp"
#include "lvqcf/constraints.hpp"
#include "lvqcf/engine.hpp"
#include "lvqcf/program.hpp"

#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

using namespace lvqcf;
using namespace lvqcf::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t)
{
    return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Verdict()>& run)
{
    const auto start = Clock::now();
    Verdict v;
    try {
        v = run();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("criterion %d: %s  %s (%s; %.1fs)\n", id, v.pass ? "PASS" : "FAIL", title.c_str(), v.detail.c_str(),
                seconds_since(start));
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

// min distance to prototypes with / without the given label
std::pair<double, double> own_other(const LvqModel& m, const VectorXd& x, int label)
{
    double own = std::numeric_limits<double>::infinity(), other = own;
    for (std::size_t i = 0; i < m.size(); ++i) {
        double& slot = m.prototype(i).label == label ? own : other;
        slot = std::min(slot, m.distance(x, i));
    }
    return {own, other};
}

// Traces of every local-metric target solve of criterion 1, reused by
// criterion 7.
std::vector<CcpTrace> local_traces;

Verdict validity()
{
    std::mt19937_64 rng(1001);
    const Index dims[] = {2, 5, 10};
    const double eps = 1e-4;
    int successes = 0, invalid = 0, local_solves = 0;
    double worst_margin = -std::numeric_limits<double>::infinity();
    const auto start = Clock::now();
    for (int t = 0; t < 500; ++t) {
        const auto kind = static_cast<MetricKind>(t % 3);
        const int classes = 2 + (t / 3) % 2;
        const Index d = dims[(t / 6) % 3];
        const LvqModel m = random_model(rng, kind, classes, d, 3);
        const VectorXd x = random_vector(rng, d, 3.0);
        CfRequest req;
        req.x = x;
        const int current = m.predict(x);
        req.y_target = m.labels()[static_cast<std::size_t>(current + 1 + t % (classes - 1)) % m.labels().size()];
        req.epsilon = eps;
        if (t % 2) {
            std::uniform_real_distribution<double> u(0.5, 2.0);
            VectorXd alpha(d);
            for (Index j = 0; j < d; ++j) alpha(j) = u(rng);
            req.regularizer = Regularizer::manhattan(alpha);
        }
        const CfResult res = explain(m, req);
        for (const auto& tgt : res.per_target)
            if (tgt.ccp_trace) {
                local_traces.push_back(*tgt.ccp_trace);
                ++local_solves;
            }
        if (!res.success) continue;
        ++successes;
        const auto [own, other] = own_other(m, res.x_cf, req.y_target);
        const double excess = own + eps - other;
        worst_margin = std::max(worst_margin, excess);
        if (m.predict(res.x_cf) != req.y_target || excess > 1e-6) ++invalid;
    }
    const double elapsed = seconds_since(start);
    Verdict v;
    v.pass = invalid == 0 && successes > 0 && elapsed < 120.0;
    v.detail = fmt("%.0f/500 successes, %.0f invalid, worst margin excess %.3g, %.0f local target solves", successes,
                   invalid, worst_margin, local_solves);
    return v;
}

Verdict oracle_optimality()
{
    std::mt19937_64 rng(2002);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    const double step = 0.01;
    const auto start = Clock::now();
    int worse = 0, missing = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < 50; ++t) {
        const LvqModel m = random_model(rng, MetricKind::identity, 2 + t % 2, 2, 3, 2.0);
        const VectorXd x = random_vector(rng, 2, 2.0);
        VectorXd alpha(2);
        alpha << u(rng), u(rng);
        const Regularizer reg = Regularizer::manhattan(alpha);
        const int y = m.labels()[static_cast<std::size_t>(m.predict(x) + 1) % m.labels().size()];

        VectorXd lower = x, upper = x;
        for (std::size_t i = 0; i < m.size(); ++i) {
            lower = lower.cwiseMin(m.prototype(i).w);
            upper = upper.cwiseMax(m.prototype(i).w);
        }
        lower.array() -= 1.0;
        upper.array() += 1.0;
        // align the grid so that x is a grid point
        for (Index j = 0; j < 2; ++j) lower(j) = x(j) - step * std::ceil((x(j) - lower(j)) / step);

        CfRequest req;
        req.x = x;
        req.y_target = y;
        req.regularizer = reg;
        const CfResult res = explain(m, req);
        const auto best = grid_oracle(m, x, y, reg, lower, upper, step, req.epsilon);
        if (!res.success || !best) {
            ++missing;
            continue;
        }
        const double slack = res.distance - (best->distance + step * alpha.sum());
        worst = std::max(worst, slack);
        if (slack > 0.0) ++worse;
    }
    const double elapsed = seconds_since(start);
    Verdict v;
    v.pass = worse == 0 && missing == 0 && elapsed < 120.0;
    v.detail = fmt("%.0f cases above the oracle bound, %.0f unsolved, max theta - (oracle + step*sum alpha) = %.3g",
                   worse, missing, worst);
    return v;
}

// Synthetic suite shared by criteria 3, 4 and 5.
BenchReport synthetic_report;

void run_synthetic_suite()
{
    const SyntheticSpec configs[] = {
        {2, 2, 200, 4.0, 11},
        {3, 5, 240, 4.0, 12},
        {2, 10, 160, 5.0, 13},
    };
    for (std::size_t k = 0; k < std::size(configs); ++k) {
        BenchSpec spec;
        spec.name = "syn-c" + std::to_string(configs[k].classes) + "-d" + std::to_string(configs[k].dim);
        spec.dataset = configs[k];
        spec.seed = 100 + k;
        spec.max_cases_per_fold = 25;
        synthetic_report.merge(run_bench(spec));
    }
}

Verdict table_direction()
{
    run_synthetic_suite();
    int checked = 0, violated = 0;
    std::string detail;
    for (const auto& row : synthetic_report.rows) {
        if (row.method != "ours") continue;
        const BenchRow* ds = synthetic_report.find(row.dataset, row.model, "baseline-ds");
        if (!ds) continue;
        ++checked;
        const bool ok = row.mean_distance_paired <= ds->mean_distance_paired;
        if (!ok) ++violated;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s%s/%s %.3f vs %.3f", detail.empty() ? "" : ", ", row.dataset.c_str(),
                      row.model.c_str(), row.mean_distance_paired, ds->mean_distance_paired);
        detail += buf;
    }
    return {checked == 9 && violated == 0, detail};
}

Verdict speedup()
{
    int checked = 0, slow = 0;
    std::string detail;
    for (const auto& s : synthetic_report.speedups) {
        if (s.model != "gmlvq") continue;
        ++checked;
        if (!(s.ratio >= 1.5)) ++slow;
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s%s %.1fx", detail.empty() ? "" : ", ", s.dataset.c_str(), s.ratio);
        detail += buf;
    }
    return {checked > 0 && slow == 0, "median DS time / median ours: " + detail};
}

Verdict lgmlvq_robustness()
{
    int checked = 0, engine_failures = 0;
    std::string detail;
    for (const auto& row : synthetic_report.rows) {
        if (row.model != "lgmlvq") continue;
        ++checked;
        if (row.method == "ours" && row.failures > 0) ++engine_failures;
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s%s/%s %.1f%%", detail.empty() ? "" : ", ", row.dataset.c_str(),
                      row.method.c_str(), 100.0 * row.failure_rate);
        detail += buf;
    }
    return {checked > 0 && engine_failures == 0, "failure rates " + detail};
}

Verdict constrained()
{
    const HousingScenario s = housing_scenario();
    CfRequest req;
    req.x = s.x;
    req.y_target = s.y_target;
    req.regularizer = s.regularizer;
    const CfResult free = explain(s.model, req);
    req.user_constraints = s.constraint;
    const CfResult tied = explain(s.model, req);
    if (!free.success || !tied.success) return {false, "no counterfactual"};
    const LinearRow& row = s.constraint.linear[0];
    const double free_gap = row.a.dot(free.x_cf) - row.b;
    const double tied_gap = row.a.dot(tied.x_cf) - row.b;
    const bool valid = s.model.predict(tied.x_cf) == s.y_target;
    return {free_gap > 0.0 && tied_gap <= 1e-8 && valid,
            fmt("2ndFlr - 1stFlr: unconstrained %.4f, constrained %.3g; distance %.4f -> %.4f", free_gap, tied_gap,
                free.distance, tied.distance)};
}

Verdict ccp_monotonicity()
{
    double increase = -std::numeric_limits<double>::infinity();
    double excess = -std::numeric_limits<double>::infinity();
    std::size_t outer = 0;
    for (const auto& tr : local_traces) {
        increase = std::max(increase, tr.max_penalized_increase());
        excess = std::max(excess, tr.max_minorant_excess());
        outer += tr.iterations.size();
    }
    return {!local_traces.empty() && increase <= 1e-9 && excess <= 1e-9,
            fmt("%.0f solves, %.0f outer iterations, max penalized increase %.3g, max minorant excess %.3g",
                static_cast<double>(local_traces.size()), static_cast<double>(outer), increase, excess)};
}

Verdict solver_kkt()
{
    std::mt19937_64 rng(8008);
    int not_optimal = 0, objective_off = 0, kkt_off = 0;
    double worst_obj = 0.0, worst_kkt = 0.0;
    for (int t = 0; t < 200; ++t) {
        const bool quadratic = t >= 100;
        const Index n = 2 + static_cast<Index>(t % 9);
        const int n_eq = t % 4 == 0 ? 1 : 0;
        const int n_active = quadratic ? static_cast<int>(t % static_cast<int>(n + 1))
                                       : static_cast<int>(n) - n_eq;
        const PlantedProgram pp = planted_program(rng, n, quadratic, n_eq, n_active, 2 + t % 5);
        const SolveOutcome out = solve(pp.spec);
        if (!out.optimal()) {
            ++not_optimal;
            continue;
        }
        const double err = std::abs(out.objective_value - pp.f_star);
        const double kkt = verify_kkt(pp.spec, out.z, out.duals).max_residual();
        worst_obj = std::max(worst_obj, err);
        worst_kkt = std::max(worst_kkt, kkt);
        if (err > 1e-6) ++objective_off;
        if (kkt > 1e-6) ++kkt_off;
    }
    return {not_optimal == 0 && objective_off == 0 && kkt_off == 0,
            fmt("100 LP + 100 QP: %.0f not optimal, worst objective error %.3g, worst KKT residual %.3g",
                not_optimal, worst_obj, worst_kkt)};
}

Verdict appendix_algebra()
{
    std::mt19937_64 rng(9009);
    const double eps = 1e-4;
    double worst = 0.0;
    int tuples = 0;
    while (tuples < 1000) {
        const auto kind = static_cast<MetricKind>(tuples % 3);
        const LvqModel m = random_model(rng, kind, 2 + tuples % 2, 2 + tuples % 4, 2);
        std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
        const std::size_t i = pick(rng);
        const VectorXd x = random_vector(rng, m.dim(), 3.0);
        const auto rows = quadratic_constraints(m, i);
        std::uniform_int_distribution<std::size_t> which(0, rows.size() - 1);
        const QuadraticConstraint& c = rows[which(rng)];
        // 1/2 x'Qx' + q'x' + r + eps/2, doubled to distance units
        const double via_fields = 2.0 * (0.5 * x.dot(c.Q * x) + c.q.dot(x) + c.r + 0.5 * eps);
        const double direct = m.distance(x, i) + eps - m.distance(x, c.other);
        worst = std::max(worst, std::abs(via_fields - direct));
        if (kind != MetricKind::local) {
            for (const auto& lc : linear_constraints(m, i))
                if (lc.other == c.other)
                    worst = std::max(worst, std::abs(2.0 * (lc.q.dot(x) + lc.r + 0.5 * eps) - direct));
        }
        ++tuples;
    }
    return {worst <= 1e-9, fmt("1000 tuples, max |fields - direct| = %.3g", worst)};
}

}  // namespace

int main()
{
    report(1, "engine validity and margin", validity);
    report(2, "grid oracle optimality", oracle_optimality);
    report(3, "mean distance ours <= baseline", table_direction);
    report(4, "GMLVQ speedup >= 1.5x", speedup);
    report(5, "LGMLVQ engine failure rate 0%", lgmlvq_robustness);
    report(6, "constrained housing counterfactual", constrained);
    report(7, "CCP monotonicity and minorant", ccp_monotonicity);
    report(8, "solver planted optima and KKT", solver_kkt);
    report(9, "constraint algebra cross-check", appendix_algebra);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
