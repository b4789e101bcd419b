#include "gaitcont/hybrid.hpp"

#include <algorithm>
#include <cmath>

namespace gaitcont {

Vec state_derivative(const HybridModel& model, const RobotState& x, double t, const StepContext& ctx) {
    const DynamicsEvaluation ev = constrained_accel(model, x, t, ctx);
    Vec dx(2 * x.n());
    dx << x.qdot, ev.qddot;
    return dx;
}

OdeRhs flow_rhs(const HybridModel& model, StepContext ctx) {
    const int n = model.dims().n;
    return [&model, ctx = std::move(ctx), n](double t, const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> dx) {
        RobotState s(x.head(n), x.tail(n));
        const DynamicsEvaluation ev = constrained_accel(model, s, t, ctx);
        dx.head(n) = s.qdot;
        dx.tail(n) = ev.qddot;
    };
}

RobotState flip(const HybridModel& model, const RobotState& x) {
    return RobotState::from_stacked(model.flip_matrix() * x.stacked());
}

namespace {

struct Start {
    RobotState post;
    StepContext ctx;
};

Start start_of_step(const HybridModel& model, const GaitPoint& c) {
    validate_gait_point(c, model.dims());
    Start s;
    s.post = RobotState(c.x0.q, impact(model, c.x0).qdot_plus);
    s.ctx = model.step_context(c, s.post);
    return s;
}

}  // namespace

FlowResult flow_detailed(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts) {
    Start s = start_of_step(model, c);
    const OdeRhs rhs = flow_rhs(model, s.ctx);
    AdaptiveRun run = integrate_adaptive(rhs, s.post.stacked(), 0.0, c.tau, opts.ode);
    FlowResult out;
    out.post_impact = std::move(s.post);
    out.end_state = RobotState::from_stacked(run.final_state);
    out.context = std::move(s.ctx);
    out.mesh = std::move(run.mesh);
    return out;
}

RobotState flow(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts) {
    return flow_detailed(model, c, opts).end_state;
}

RobotState flow_on_mesh(const HybridModel& model, const GaitPoint& c, const std::vector<double>& mesh) {
    Start s = start_of_step(model, c);
    const OdeRhs rhs = flow_rhs(model, s.ctx);
    return RobotState::from_stacked(integrate_on_mesh(rhs, s.post.stacked(), mesh));
}

Trajectory flow_trajectory(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts) {
    Start s = start_of_step(model, c);
    OdeRhs rhs = flow_rhs(model, s.ctx);
    AdaptiveRun run = integrate_adaptive(rhs, s.post.stacked(), 0.0, c.tau, opts.ode, true);
    return Trajectory(std::move(rhs), std::move(run.mesh), std::move(run.nodes));
}

PeriodicityResult periodicity(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts) {
    PeriodicityResult r;
    r.end_state = flow(model, c, opts);
    r.residual = r.end_state.stacked() - model.flip_matrix() * c.x0.stacked();
    return r;
}

JacobianResult jacobian(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts) {
    const Dims d = model.dims();
    const int n = d.n;
    const int ns = 2 * n;
    const Mat F = model.flip_matrix();

    const FlowResult nominal = flow_detailed(model, c, opts);
    JacobianResult out;
    out.end_state = nominal.end_state;
    out.residual = nominal.end_state.stacked() - F * c.x0.stacked();
    out.J = Mat::Zero(ns, d.space());

    const Vec cv = c.to_vector();
    const int tau_index = ns;
    const bool fd_tau = model.controls_depend_on_duration();

    for (int j = 0; j < d.space(); ++j) {
        if (j == tau_index && !fd_tau) {
            out.J.col(j) = state_derivative(model, nominal.end_state, c.tau, nominal.context);
            continue;
        }
        const double delta = opts.fd_step * std::max(1.0, std::abs(cv(j)));
        Vec cp = cv, cm = cv;
        cp(j) += delta;
        cm(j) -= delta;
        const GaitPoint gp = GaitPoint::from_vector(cp, n);
        const GaitPoint gm = GaitPoint::from_vector(cm, n);
        // The perturbation itself is O(delta); resolve it to rel_tol.
        FlowOptions fd_opts = opts;
        fd_opts.ode.abs_tol = std::max(1e-16, std::min(opts.ode.abs_tol, opts.ode.rel_tol * delta));
        const FlowResult plus = flow_detailed(model, gp, fd_opts);
        std::vector<double> mesh = plus.mesh;
        if (j == tau_index) {
            const double scale = gm.tau / gp.tau;
            for (double& t : mesh) t *= scale;
            mesh.back() = gm.tau;
        }
        const RobotState minus = flow_on_mesh(model, gm, mesh);
        Vec col = (plus.end_state.stacked() - minus.stacked()) / (2 * delta);
        if (j < ns) col -= F.col(j);
        out.J.col(j) = col;
    }
    return out;
}

}  // namespace gaitcont
