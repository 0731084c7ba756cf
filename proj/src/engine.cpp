#include "lvqcf/engine.hpp"

#include "lvqcf/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <future>
#include <numeric>

namespace lvqcf {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void check_request(const LvqModel& model, const CfRequest& req)
{
    if (req.x.size() != model.dim())
        throw InputError("input has length " + std::to_string(req.x.size()) + ", model dimension is " +
                         std::to_string(model.dim()));
    if (!req.x.allFinite())
        throw InputError("input has non-finite entries");
    if (!model.has_label(req.y_target))
        throw InputError("requested label " + std::to_string(req.y_target) + " is not a prototype label");
    if (!(req.epsilon > 0.0))
        throw InputError("epsilon must be positive");
    req.user_constraints.validate(model.dim());
}

// x itself satisfies the program of target i: it is the optimum (theta = 0).
bool input_is_feasible(const LvqModel& model, std::size_t target, const CfRequest& req)
{
    if (!req.user_constraints.satisfied(req.x, req.x, 0.0))
        return false;
    const double di = model.distance(req.x, target);
    const int label = model.prototype(target).label;
    for (std::size_t j = 0; j < model.size(); ++j)
        if (model.prototype(j).label != label && di + req.epsilon > model.distance(req.x, j))
            return false;
    return true;
}

std::optional<ObjectiveSpec> with_target_rows(ObjectiveSpec obj, const LvqModel& model, std::size_t target,
                                              const CfRequest& req)
{
    const Index n = obj.program.n;
    const auto rows = linear_constraints(model, target);
    obj.program.ineq.reserve(obj.program.ineq.size() + rows.size());
    for (const auto& c : rows) {
        if (c.degenerate()) return std::nullopt;
        const LinearRow row = c.row(req.epsilon);
        LinearRow padded{VectorXd::Zero(n), row.b};
        padded.a.head(obj.features) = row.a;
        obj.program.ineq.push_back(std::move(padded));
    }
    if (!req.user_constraints.empty())
        obj.program = apply_user_constraints(obj.program, req.user_constraints, req.x, obj.features);
    return obj;
}

// `base` is the regularizer objective, shared by all targets of a request.
TargetOutcome solve_target(const LvqModel& model, const CfRequest& req, std::size_t target,
                           const ObjectiveSpec* base)
{
    const auto start = Clock::now();
    TargetOutcome out;
    out.index = target;

    auto finish = [&](VectorXd xcf) {
        for (Index j : req.user_constraints.frozen)
            xcf(j) = req.x(j);
        if (model.predict(xcf) != req.y_target) {
            out.status = "invalid";
        } else {
            out.status = "optimal";
            out.distance = req.regularizer.evaluate(xcf, req.x);
        }
        out.x_cf = std::move(xcf);
    };

    if (input_is_feasible(model, target, req)) {
        finish(req.x);
    } else if (model.metric() != MetricKind::local) {
        const auto program = with_target_rows(*base, model, target, req);
        if (!program) {
            out.status = "degenerate";
        } else {
            const SolveOutcome so = solve(program->program, req.tolerances);
            if (so.optimal())
                finish(program->features_of(so.z));
            else
                out.status = to_string(so.status);
        }
    } else {
        const DcpProblem problem =
            make_dcp_problem(model, target, req.regularizer, req.x, req.user_constraints, req.epsilon);
        const bool degenerate = std::any_of(problem.constraints.begin(), problem.constraints.end(),
                                            [](const QuadraticConstraint& c) { return c.degenerate(); });
        if (degenerate) {
            out.status = "degenerate";
        } else {
            CcpOutcome co = improve(problem, suggest(model, target), req.ccp);
            out.ccp_trace = std::move(co.trace);
            if (co.outcome.optimal())
                finish(co.outcome.z);
            else
                out.status = to_string(co.outcome.status);
        }
    }
    out.wall_time_ms = elapsed_ms(start);
    return out;
}

CfResult run(const LvqModel& model, const CfRequest& req, const std::vector<std::size_t>& order)
{
    const auto start = Clock::now();
    CfResult result;
    std::optional<ObjectiveSpec> base;
    if (model.metric() != MetricKind::local) base = build_objective(req.regularizer, req.x);
    const ObjectiveSpec* bp = base ? &*base : nullptr;
    result.per_target.reserve(order.size());
    if (req.parallel && order.size() > 1) {
        std::vector<std::future<TargetOutcome>> jobs;
        jobs.reserve(order.size());
        for (std::size_t i : order)
            jobs.push_back(std::async(std::launch::async, [&model, &req, i, bp] { return solve_target(model, req, i, bp); }));
        for (auto& job : jobs)
            result.per_target.push_back(job.get());
    } else {
        for (std::size_t i : order)
            result.per_target.push_back(solve_target(model, req, i, bp));
    }

    // argmin over (distance, prototype index)
    for (const auto& t : result.per_target) {
        if (!t.distance) continue;
        const double d = *t.distance;
        const bool better = !result.success || d < result.distance - 1e-12 ||
                            (std::abs(d - result.distance) <= 1e-12 && t.index < result.target_prototype);
        if (better) {
            result.success = true;
            result.distance = d;
            result.target_prototype = t.index;
            result.x_cf = *t.x_cf;
        }
    }
    result.total_wall_time_ms = elapsed_ms(start);
    return result;
}

std::vector<std::size_t> targets_of(const LvqModel& model, int label)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < model.size(); ++i)
        if (model.prototype(i).label == label) out.push_back(i);
    return out;
}

}  // namespace

std::optional<ObjectiveSpec> build_linear_program(const LvqModel& model, std::size_t target, const CfRequest& req)
{
    return with_target_rows(build_objective(req.regularizer, req.x), model, target, req);
}

CfResult explain(const LvqModel& model, const CfRequest& req)
{
    check_request(model, req);
    return run(model, req, targets_of(model, req.y_target));
}

CfResult explain_with_nearest_fallback(const LvqModel& model, const CfRequest& req)
{
    check_request(model, req);
    std::vector<std::size_t> order = targets_of(model, req.y_target);
    std::vector<double> dist(model.size(), 0.0);
    for (std::size_t i : order)
        dist[i] = model.distance(req.x, i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    return run(model, req, order);
}

std::string result_to_json(const CfResult& result, int indent)
{
    using nlohmann::json;
    json doc;
    doc["status"] = result.success ? "success" : "no-solution";
    if (result.success) {
        doc["x_cf"] = std::vector<double>(result.x_cf.data(), result.x_cf.data() + result.x_cf.size());
        doc["distance"] = result.distance;
        doc["target_prototype"] = result.target_prototype;
    } else {
        doc["x_cf"] = nullptr;
        doc["distance"] = nullptr;
        doc["target_prototype"] = nullptr;
    }
    json per = json::array();
    for (const auto& t : result.per_target) {
        json e;
        e["index"] = t.index;
        e["status"] = t.status;
        e["distance"] = t.distance ? json(*t.distance) : json(nullptr);
        e["wall_time_ms"] = t.wall_time_ms;
        per.push_back(std::move(e));
    }
    doc["per_target"] = std::move(per);
    doc["total_wall_time_ms"] = result.total_wall_time_ms;
    return doc.dump(indent);
}

}  // namespace lvqcf
