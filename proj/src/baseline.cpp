#include "lvqcf/baseline.hpp"

#include "lvqcf/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace lvqcf {

NelderMeadResult nelder_mead(const std::function<double(const VectorXd&)>& f, const VectorXd& x0,
                             const NelderMeadParams& params)
{
    const Index d = x0.size();
    const auto npts = static_cast<std::size_t>(d + 1);
    std::vector<VectorXd> simplex(npts, x0);
    std::vector<double> fv(npts);
    NelderMeadResult res;

    for (Index j = 0; j < d; ++j)
        simplex[static_cast<std::size_t>(j + 1)](j) += params.init_scale;
    for (std::size_t k = 0; k < npts; ++k)
        fv[k] = f(simplex[k]);
    res.evaluations = static_cast<int>(npts);

    std::vector<std::size_t> order(npts);
    VectorXd centroid(d);
    for (res.iterations = 0; res.iterations < params.max_iter; ++res.iterations) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[npts - 2];
        if (fv[worst] - fv[best] <= params.ftol) {
            res.converged = true;
            break;
        }

        centroid.setZero();
        for (std::size_t k = 0; k < npts; ++k)
            if (k != worst) centroid += simplex[k];
        centroid /= static_cast<double>(d);

        const VectorXd xr = centroid + params.reflection * (centroid - simplex[worst]);
        const double fr = f(xr);
        ++res.evaluations;
        if (fr < fv[best]) {
            const VectorXd xe = centroid + params.expansion * (xr - centroid);
            const double fe = f(xe);
            ++res.evaluations;
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            simplex[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        // contraction, outside if the reflected point improved on the worst
        const bool outside = fr < fv[worst];
        const VectorXd xc = outside ? VectorXd(centroid + params.contraction * (xr - centroid))
                                    : VectorXd(centroid + params.contraction * (simplex[worst] - centroid));
        const double fc = f(xc);
        ++res.evaluations;
        if (fc < (outside ? fr : fv[worst])) {
            simplex[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        for (std::size_t k = 0; k < npts; ++k) {
            if (k == best) continue;
            simplex[k] = simplex[best] + params.shrink * (simplex[k] - simplex[best]);
            fv[k] = f(simplex[k]);
            ++res.evaluations;
        }
    }

    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    res.x = simplex[best];
    res.value = fv[best];
    return res;
}

void BaselineConfig::validate() const
{
    if (!(C > 0.0)) throw InputError("baseline: C must be positive");
    if (restarts < 0) throw InputError("baseline: restarts must be nonnegative");
    if (!(epsilon > 0.0)) throw InputError("baseline: epsilon must be positive");
    const auto& s = simplex;
    if (!(s.reflection > 0.0) || !(s.expansion > 1.0) || !(s.contraction > 0.0 && s.contraction < 1.0) ||
        !(s.shrink > 0.0 && s.shrink < 1.0) || !(s.init_scale > 0.0))
        throw InputError("baseline: simplex coefficients out of range");
}

CfResult baseline_explain(const LvqModel& model, const VectorXd& x, int y_target, const Regularizer& reg,
                          const BaselineConfig& cfg)
{
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    cfg.validate();
    if (x.size() != model.dim())
        throw InputError("input has length " + std::to_string(x.size()) + ", model dimension is " +
                         std::to_string(model.dim()));
    if (!model.has_label(y_target))
        throw InputError("requested label " + std::to_string(y_target) + " is not a prototype label");

    std::vector<std::size_t> own, other;
    for (std::size_t i = 0; i < model.size(); ++i)
        (model.prototype(i).label == y_target ? own : other).push_back(i);

    NelderMeadParams nm = cfg.simplex;
    nm.max_iter = cfg.max_iter_per_dim * static_cast<int>(model.dim());

    CfResult result;
    double C = cfg.C;
    for (int attempt = 0; attempt <= cfg.restarts; ++attempt, C *= 10.0) {
        const auto attempt_start = Clock::now();
        auto objective = [&](const VectorXd& xp) {
            double d_own = std::numeric_limits<double>::infinity();
            double d_other = std::numeric_limits<double>::infinity();
            for (std::size_t i : own) d_own = std::min(d_own, model.distance(xp, i));
            for (std::size_t j : other) d_other = std::min(d_other, model.distance(xp, j));
            return C * std::max(0.0, d_own - d_other + cfg.epsilon) + reg.evaluate(xp, x);
        };
        const NelderMeadResult nmr = nelder_mead(objective, x, nm);

        TargetOutcome t;
        t.index = static_cast<std::size_t>(attempt);
        t.x_cf = nmr.x;
        const bool valid = nmr.x.allFinite() && model.predict(nmr.x) == y_target;
        t.status = valid ? "valid" : "invalid";
        if (valid) t.distance = reg.evaluate(nmr.x, x);
        t.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - attempt_start).count();
        result.per_target.push_back(t);
        if (valid) {
            result.success = true;
            result.x_cf = nmr.x;
            result.distance = *t.distance;
            result.target_prototype = model.nearest(nmr.x);
            break;
        }
    }
    result.total_wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return result;
}

}  // namespace lvqcf
