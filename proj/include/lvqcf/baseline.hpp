#pragma once

#include "lvqcf/engine.hpp"
#include "lvqcf/lvq_model.hpp"
#include "lvqcf/regularizer.hpp"

#include <functional>

namespace lvqcf {

struct NelderMeadParams {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    int max_iter = 200;
    double ftol = 1e-6;
    double init_scale = 0.1;
};

struct NelderMeadResult {
    VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

// Downhill simplex minimization from an axis-aligned simplex around x0.
// Stops when the spread of function values over the simplex drops below
// ftol or after max_iter iterations.
NelderMeadResult nelder_mead(const std::function<double(const VectorXd&)>& f, const VectorXd& x0,
                             const NelderMeadParams& params);

struct BaselineConfig {
    double C = 10.0;
    int restarts = 3;  // each restart multiplies C by 10
    NelderMeadParams simplex;
    int max_iter_per_dim = 200;
    double epsilon = 1e-4;

    void validate() const;
};

// Black-box comparison method. Minimizes
//   F(x') = C * max(0, d(x', nearest y^c prototype) - min_{j in P(y^c)} d(x', p_j) + eps) + theta(x', x)
// with Nelder-Mead, touching the model only through distance and
// prediction calls. Invalid results trigger a restart from x with a
// larger C; per_target lists one entry per attempt (index = attempt
// number, status "valid" or "invalid").
CfResult baseline_explain(const LvqModel& model, const VectorXd& x, int y_target, const Regularizer& reg,
                          const BaselineConfig& cfg = {});

}  // namespace lvqcf
