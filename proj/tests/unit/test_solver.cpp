#include "lvqcf/error.hpp"
#include "lvqcf/program.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace lvqcf;
using namespace lvqcf::testing;

namespace {

VectorXd vec(std::initializer_list<double> v)
{
    return Eigen::Map<const VectorXd>(v.begin(), static_cast<Index>(v.size()));
}

}  // namespace

TEST_CASE("small LP with a known vertex")
{
    // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  -> (1.6, 1.2)
    ProgramSpec p(2);
    p.c = vec({-1, -1});
    p.ineq.push_back({vec({1, 2}), 4});
    p.ineq.push_back({vec({3, 1}), 6});
    p.lower = VectorXd::Zero(2);
    const SolveOutcome out = solve(p);
    REQUIRE(out.optimal());
    CHECK(out.z(0) == doctest::Approx(1.6).epsilon(1e-7));
    CHECK(out.z(1) == doctest::Approx(1.2).epsilon(1e-7));
    CHECK(out.objective_value == doctest::Approx(-2.8).epsilon(1e-7));
    CHECK(verify_kkt(p, out.z, out.duals).max_residual() <= 1e-6);
}

TEST_CASE("equality constrained QP has the projection as solution")
{
    // min 0.5 |z|^2 s.t. z0 + z1 + z2 = 3 -> (1, 1, 1)
    ProgramSpec p(3);
    p.hessian = MatrixXd::Identity(3, 3);
    p.c = VectorXd::Zero(3);
    p.eq.push_back({VectorXd::Ones(3), 3});
    const SolveOutcome out = solve(p);
    REQUIRE(out.optimal());
    CHECK((out.z - VectorXd::Ones(3)).norm() < 1e-7);
    CHECK(out.duals.eq(0) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("convex quadratic inequality row")
{
    // min z0 + z1 s.t. |z|^2 <= 2 -> (-1, -1)
    ProgramSpec p(2);
    p.c = vec({1, 1});
    p.qineq.push_back({2.0 * MatrixXd::Identity(2, 2), VectorXd::Zero(2), -2.0});
    const SolveOutcome out = solve(p);
    REQUIRE(out.optimal());
    CHECK(out.z(0) == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(out.z(1) == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(verify_kkt(p, out.z, out.duals).max_residual() <= 1e-6);
}

TEST_CASE("infeasible programs are reported as such")
{
    ProgramSpec p(1);
    p.c = vec({1});
    p.ineq.push_back({vec({1}), -1});
    p.ineq.push_back({vec({-1}), -1});
    CHECK(solve(p).status == SolveStatus::infeasible);

    ProgramSpec q(2);
    q.hessian = MatrixXd::Identity(2, 2);
    q.c = VectorXd::Zero(2);
    q.eq.push_back({vec({1, 1}), 1});
    q.eq.push_back({vec({2, 2}), 3});
    CHECK(solve(q).status == SolveStatus::infeasible);

    ProgramSpec b(1);
    b.c = vec({1});
    b.lower = vec({1});
    b.ineq.push_back({vec({1}), 0});
    CHECK(solve(b).status == SolveStatus::infeasible);
}

TEST_CASE("reference examples")
{
    ProgramSpec lp(1);
    lp.c = vec({1});
    lp.lower = vec({1});
    SolveOutcome out = solve(lp);
    REQUIRE(out.optimal());
    CHECK(out.z(0) == doctest::Approx(1.0).epsilon(1e-8));

    ProgramSpec qp(2);
    qp.hessian = MatrixXd::Identity(2, 2);
    qp.c = vec({-3, 0});
    qp.ineq.push_back({vec({1, 0}), 1});
    out = solve(qp);
    REQUIRE(out.optimal());
    CHECK((out.z - vec({1, 0})).norm() < 1e-7);
    CHECK(out.objective_value == doctest::Approx(-2.5).epsilon(1e-8));
    CHECK(verify_kkt(qp, out.z, out.duals).max_residual() <= 1e-6);
    const KktReport perturbed = verify_kkt(qp, out.z + vec({0.1, 0}), out.duals);
    CHECK(perturbed.primal_feasibility >= 0.09);

    ProgramSpec disc(2);
    disc.hessian = MatrixXd::Identity(2, 2);
    disc.c = vec({-3, 0});
    disc.qineq.push_back({MatrixXd::Identity(2, 2), VectorXd::Zero(2), -0.5});
    out = solve(disc);
    REQUIRE(out.optimal());
    CHECK((out.z - vec({1, 0})).norm() < 1e-6);
    CHECK(verify_kkt(disc, out.z, out.duals).max_residual() <= 1e-6);

    ProgramSpec free_qp(2);
    MatrixXd h(2, 2);
    h << 2, 1, 1, 3;
    free_qp.hessian = h;
    free_qp.c = vec({1, -1});
    const VectorXd stationary = h.ldlt().solve(-free_qp.c);
    CHECK(verify_kkt(free_qp, stationary, Duals{}).stationarity <= 1e-10);
}

TEST_CASE("objective is invariant under row permutation")
{
    std::mt19937_64 rng(4);
    PlantedProgram pp = planted_program(rng, 4, true, 1, 2, 4);
    const SolveOutcome a = solve(pp.spec);
    std::reverse(pp.spec.ineq.begin(), pp.spec.ineq.end());
    const SolveOutcome b = solve(pp.spec);
    REQUIRE(a.optimal());
    REQUIRE(b.optimal());
    CHECK(std::abs(a.objective_value - b.objective_value) <= 1e-8);
}

TEST_CASE("bounds with lower above upper are rejected")
{
    ProgramSpec b(2);
    b.c = VectorXd::Zero(2);
    b.lower = vec({1, 0});
    b.upper = vec({0, 1});
    CHECK_THROWS_AS(b.validate(), InputError);
}

TEST_CASE("unbounded LP does not claim optimality")
{
    ProgramSpec p(1);
    p.c = vec({-1});
    p.lower = VectorXd::Zero(1);
    const SolveOutcome out = solve(p);
    CHECK_FALSE(out.optimal());
}

TEST_CASE("validate rejects malformed programs")
{
    ProgramSpec p(2);
    p.c = VectorXd::Zero(3);
    CHECK_THROWS_AS(p.validate(), InputError);
    ProgramSpec q(2);
    q.c = VectorXd::Zero(2);
    MatrixXd h(2, 2);
    h << 1, 0, 0, -1;
    q.hessian = h;
    CHECK_THROWS_AS(q.validate(), InputError);
}

TEST_CASE("planted LP and QP optima are recovered")
{
    std::mt19937_64 rng(21);
    for (int t = 0; t < 20; ++t) {
        const Index n = 2 + static_cast<Index>(t % 5);
        const bool quadratic = t % 2 == 1;
        const int n_eq = t % 3 == 0 ? 1 : 0;
        const int n_active = quadratic ? static_cast<int>(n) / 2 : static_cast<int>(n) - n_eq;
        const PlantedProgram pp = planted_program(rng, n, quadratic, n_eq, n_active, 3);
        const SolveOutcome out = solve(pp.spec);
        REQUIRE(out.optimal());
        CHECK(std::abs(out.objective_value - pp.f_star) <= 1e-6 * (1.0 + std::abs(pp.f_star)));
        CHECK((out.z - pp.z_star).norm() <= 1e-5);
        CHECK(verify_kkt(pp.spec, out.z, out.duals).max_residual() <= 1e-6);
    }
}

TEST_CASE("dump format lists every row")
{
    ProgramSpec p(2);
    p.c = vec({1, 0});
    p.eq.push_back({vec({1, 1}), 1});
    p.ineq.push_back({vec({1, -1}), 0.5});
    p.lower = vec({0, -std::numeric_limits<double>::infinity()});
    const std::string text = dump_program(p);
    CHECK(text.find("program n=2") != std::string::npos);
    CHECK(text.find("objective linear") != std::string::npos);
    CHECK(text.find("eq a=") != std::string::npos);
    CHECK(text.find("ineq a=") != std::string::npos);
    CHECK(text.find("lower") != std::string::npos);
}
