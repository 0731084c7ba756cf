#pragma once

#include "lvqcf/lvq_model.hpp"
#include "lvqcf/program.hpp"

#include <random>
#include <vector>

namespace lvqcf::testing {

inline MatrixXd random_matrix(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    MatrixXd m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = n(rng);
    return m;
}

inline VectorXd random_vector(std::mt19937_64& rng, Index n, double scale = 1.0)
{
    return random_matrix(rng, n, 1, scale).col(0);
}

// Omega close to the identity so that every Lambda is well conditioned.
inline MatrixXd random_omega(std::mt19937_64& rng, Index d)
{
    return MatrixXd::Identity(d, d) + random_matrix(rng, d, d, 0.35);
}

// `per_class` prototypes for each of `classes` labels, drawn around class
// centers spread `spread` apart.
inline LvqModel random_model(std::mt19937_64& rng, MetricKind kind, int classes, Index d, int per_class,
                             double spread = 3.0)
{
    std::vector<Prototype> protos;
    const MatrixXd centers = random_matrix(rng, classes, d, spread);
    for (int c = 0; c < classes; ++c)
        for (int k = 0; k < per_class; ++k) {
            Prototype p;
            p.w = centers.row(c).transpose() + random_vector(rng, d, 1.0);
            p.label = c;
            if (kind == MetricKind::local) p.omega = random_omega(rng, d);
            protos.push_back(std::move(p));
        }
    std::optional<MatrixXd> global;
    if (kind == MetricKind::global) global = random_omega(rng, d);
    return LvqModel(std::move(protos), kind, global);
}

// Program with a known optimum z*: `active` inequality rows pass through
// z* with strictly positive multipliers, the remaining rows are slack.
// c is chosen so that the KKT conditions hold at z*.
struct PlantedProgram {
    ProgramSpec spec;
    VectorXd z_star;
    double f_star = 0.0;
};

inline PlantedProgram planted_program(std::mt19937_64& rng, Index n, bool quadratic, int n_eq, int n_active,
                                      int n_slack)
{
    std::uniform_real_distribution<double> pos(0.5, 2.0);
    PlantedProgram pp;
    pp.spec = ProgramSpec(n);
    pp.z_star = random_vector(rng, n);
    VectorXd grad = VectorXd::Zero(n);  // -(grad f) at the optimum
    for (int k = 0; k < n_eq; ++k) {
        const VectorXd a = random_vector(rng, n);
        pp.spec.eq.push_back({a, a.dot(pp.z_star)});
        grad += std::normal_distribution<double>(0.0, 1.0)(rng) * a;
    }
    for (int k = 0; k < n_active; ++k) {
        const VectorXd a = random_vector(rng, n);
        pp.spec.ineq.push_back({a, a.dot(pp.z_star)});
        grad += pos(rng) * a;
    }
    for (int k = 0; k < n_slack; ++k) {
        const VectorXd a = random_vector(rng, n);
        pp.spec.ineq.push_back({a, a.dot(pp.z_star) + pos(rng)});
    }
    // c + P z* + sum(y a_eq) + sum(lambda a_act) = 0
    if (quadratic) {
        const MatrixXd m = random_matrix(rng, n, n);
        const MatrixXd p = m * m.transpose() + 0.5 * MatrixXd::Identity(n, n);
        pp.spec.hessian = 0.5 * (p + p.transpose());
        pp.spec.c = -(*pp.spec.hessian) * pp.z_star - grad;
    } else {
        pp.spec.c = -grad;
    }
    pp.f_star = pp.spec.objective(pp.z_star);
    return pp;
}

}  // namespace lvqcf::testing
