#include <doctest.h>

#include "gaitcont/homotopy.hpp"

#include <cmath>

using namespace gaitcont;

namespace {

std::shared_ptr<const CompassGait> passive() { return std::make_shared<CompassGait>(); }

// The index-th passive gait along the long-duration branch (1-based).
GaitPoint passive_gait(std::shared_ptr<const CompassGait> model, int index) {
    GaitPoint eq{RobotState(Vec::Zero(2), Vec::Zero(2)), 0.5, Vec()};
    FamilyOptions fo;
    fo.curve.count = index;
    fo.seed_index = 1;
    fo.both_signs = false;
    return build_family(model, eq, 0.1, 1.0, 100, fo).branches.at(0).gaits.at(index - 1).gait;
}

QueryConstraint slope_eq(std::shared_ptr<const CompassGait> m, double target) {
    return {ConstraintKind::Equality, "slope", quantity_evaluator(m, "slope"), target};
}

}  // namespace

TEST_CASE("slack QP: inequality via a nonnegative slack") {
    // x - 2 - s = 0 with s >= 0, plus a pull x = target
    auto sys = [](double target) {
        return [target](const Vec& z) {
            MapEvaluation e;
            e.residual.resize(2);
            e.residual << z(0) - 2 - z(1), z(0) - target;
            e.jacobian.resize(2, 2);
            e.jacobian << 1, -1, 1, 0;
            return e;
        };
    };
    BoxBounds b{Vec::Zero(2), Vec::Constant(2, 1e300)};
    b.lower(0) = -1e300;
    const NewtonResult ok = projected_newton(sys(3.0), Vec::Zero(2), b);
    CHECK(ok.converged());
    CHECK(ok.point(0) == doctest::Approx(3.0));
    CHECK(ok.point(1) == doctest::Approx(1.0));
    // x = 1 would need s = -1: the slack stays on its bound
    const NewtonResult stuck = projected_newton(sys(1.0), Vec::Constant(2, 0.5), b);
    CHECK(stuck.status == NewtonStatus::Stationary);
    CHECK(stuck.point(1) == 0.0);
}

TEST_CASE("integral penalty agrees with dense sampling") {
    auto model = passive();
    const GaitPoint c = passive_gait(model, 30);
    const Trajectory traj = flow_trajectory(*model, c);
    // a height offset that makes the path function change sign inside the step
    const double offset = 0.02;
    PathFunction d = [&](const GaitPoint&, double, const RobotState& x) {
        return model->swing_foot_height(x, model->slope(c)) - offset;
    };
    const double val = integral_penalty(*model, c, d);
    const int N = 40000;
    double ref = 0;
    for (int i = 0; i <= N; ++i) {
        const double t = c.tau * i / N;
        const double w = (i == 0 || i == N) ? 0.5 : 1.0;
        ref += w * std::min(0.0, d(c, t, RobotState::from_stacked(traj.at(t))));
    }
    ref *= c.tau / N;
    CHECK(val < 0);
    CHECK(std::abs(val - ref) < 1e-6);

    PathFunction positive = [](const GaitPoint&, double, const RobotState&) { return 1.0; };
    CHECK(integral_penalty(*model, c, positive) == 0.0);
}

TEST_CASE("GHM from a nearby reference converges quickly with decreasing merit") {
    auto model = passive();
    const GaitPoint a = passive_gait(model, 20);
    const double target = model->slope(a) * (1 - 1e-4);
    const GhmResult r = ghm_solve(model, {slope_eq(model, target)}, a);
    CHECK(r.converged);
    CHECK(r.path.size() - 1 <= 3);
    CHECK(std::abs(model->slope(r.root) - target) < 1e-8);
    CHECK(periodicity(*model, r.root).residual.norm() < 1e-8);
    for (std::size_t i = 1; i < r.path.size(); ++i) CHECK(r.path[i].merit < r.path[i - 1].merit);
}

TEST_CASE("GHM moves along the passive branch to a prescribed slope") {
    auto model = passive();
    const GaitPoint a = passive_gait(model, 20);
    const double target = 0.5 * model->slope(a);
    const GhmResult r = ghm_solve(model, {slope_eq(model, target)}, a);
    REQUIRE(r.converged);
    CHECK(std::abs(r.path.back().p) < 1e-8);
    CHECK(std::abs(model->slope(r.root) - target) < 1e-8);
    for (std::size_t i = 1; i < r.path.size(); ++i) CHECK(r.path[i].merit < r.path[i - 1].merit);
    for (const GhmIterate& it : r.path) CHECK(it.manifold_residual < 1e-8);
}

TEST_CASE("reference that already satisfies the query is returned unchanged") {
    auto model = passive();
    const GaitPoint a = passive_gait(model, 10);
    const GhmResult r = ghm_solve(model, {slope_eq(model, model->slope(a))}, a);
    CHECK(r.converged);
    CHECK(r.reference_satisfied);
    CHECK(r.root.to_vector() == a.to_vector());
}

TEST_CASE("slack inequality constraint") {
    auto model = passive();
    const GaitPoint a = passive_gait(model, 20);
    const double s0 = model->slope(a);
    QueryConstraint q{ConstraintKind::SlackInequality, "slope", quantity_evaluator(model, "slope"), s0 + 0.01};
    const GhmResult r = ghm_solve(model, {q}, a);
    REQUIRE(r.converged);
    CHECK(model->slope(r.root) >= s0 + 0.01 - 1e-8);
    REQUIRE(r.slacks.size() == 1);
    CHECK(r.slacks(0) >= 0);
    // already satisfied inequality
    QueryConstraint easy{ConstraintKind::SlackInequality, "slope", quantity_evaluator(model, "slope"), s0 - 0.01};
    CHECK(ghm_solve(model, {easy}, a).reference_satisfied);
}

TEST_CASE("GHM rejects bad Armijo parameters") {
    auto model = passive();
    const GaitPoint a = passive_gait(model, 5);
    GhmOptions o;
    o.alpha = 0.7;
    CHECK_THROWS_AS(ghm_solve(model, {slope_eq(model, 0.0)}, a, o), InputError);
}

TEST_CASE("query files") {
    auto model = std::make_shared<CompassGait>(CompassGaitParams{}, CompassControl::SinusoidalHip);
    const QuerySpec q = load_query_json(model, R"({"constraints":[{"quantity":"slope","op":"=","target":0}],
        "alpha":1e-4,"beta":0.5,"reference":{"branch":2,"gait":118}})");
    CHECK(q.constraints.size() == 1);
    CHECK(q.branch == 2);
    CHECK(q.gait == 118);
    CHECK_THROWS_AS(load_query_json(model, R"({"constraints":[{"quantity":"slope","op":"<","target":0}]})"),
                    InputError);
    CHECK_THROWS_AS(load_query_json(model, R"({"constraints":[{"quantity":"slope","op":"integral>=0"}]})"),
                    InputError);
    CHECK_THROWS_AS(load_query_json(model, R"({"constraints":[{"quantity":"nope","op":"=","target":0}]})"),
                    InputError);
    CHECK_THROWS_AS(load_query_json(model, "not json"), InputError);
    CHECK_THROWS_AS(load_query_json(model, R"({"constraints":[]})"), InputError);
}

TEST_CASE("quantity evaluators") {
    auto model = std::make_shared<CompassGait>(CompassGaitParams{}, CompassControl::SinusoidalHip);
    GaitPoint c{RobotState(Eigen::Vector2d(0.1, -0.1), Eigen::Vector2d(-0.5, -0.7)), 0.7, Vec::Constant(1, 2.0)};
    CHECK(quantity_evaluator(model, "slope")(c) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(quantity_evaluator(model, "duration")(c) == 0.7);
    CHECK(quantity_evaluator(model, "amplitude")(c) == 2.0);
    CHECK(quantity_evaluator(model, "step_length")(c) == doctest::Approx(2 * std::sin(0.1)));
    CHECK(quantity_evaluator(model, "average_velocity")(c) == doctest::Approx(2 * std::sin(0.1) / 0.7));
    CHECK(quantity_evaluator(model, "peak_input")(c) > 0);
}
