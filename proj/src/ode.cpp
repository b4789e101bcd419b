#include "gaitcont/ode.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>

namespace gaitcont {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;
using Stepper = odeint::runge_kutta_fehlberg78<State>;

struct System {
    const OdeRhs* rhs;
    void operator()(const State& x, State& dx, double t) const {
        const auto n = static_cast<Eigen::Index>(x.size());
        Eigen::Map<const Vec> xm(x.data(), n);
        Eigen::Map<Vec> dm(dx.data(), n);
        (*rhs)(t, xm, dm);
    }
};

State to_state(const Vec& v) { return State(v.data(), v.data() + v.size()); }
Vec to_vec(const State& s) { return Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size())); }

bool finite(const State& s) {
    return std::all_of(s.begin(), s.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

AdaptiveRun integrate_adaptive(const OdeRhs& rhs, const Vec& x0, double t0, double t1,
                               const OdeTolerances& tol, bool keep_nodes) {
    AdaptiveRun run;
    State x = to_state(x0);
    run.mesh.push_back(t0);
    if (keep_nodes) run.nodes.push_back(x0);
    if (t1 == t0) {
        run.final_state = x0;
        return run;
    }
    auto stepper = odeint::make_controlled(tol.abs_tol, tol.rel_tol, Stepper());
    System sys{&rhs};
    double t = t0;
    double dt = (t1 - t0) / 16.0;
    int steps = 0;
    while ((t1 - t) * (t1 - t0) > 0) {
        if (++steps > tol.max_steps) throw IntegrationError("integrator exceeded maximum step count");
        // Land exactly on t1.
        if (std::abs(dt) >= std::abs(t1 - t)) dt = t1 - t;
        const double t_prev = t;
        int fails = 0;
        while (stepper.try_step(sys, x, t, dt) == odeint::fail) {
            if (++fails > 200 || std::abs(dt) < 1e-15 * std::max(1.0, std::abs(t)))
                throw IntegrationError("integrator step size underflow at t=" + std::to_string(t));
        }
        if (!finite(x)) throw IntegrationError("non-finite state at t=" + std::to_string(t));
        if (std::abs(t1 - t) < 1e-14 * std::max(1.0, std::abs(t1))) t = t1;
        if (t == t_prev) throw IntegrationError("integrator made no progress");
        run.mesh.push_back(t);
        if (keep_nodes) run.nodes.push_back(to_vec(x));
    }
    run.mesh.back() = t1;
    run.final_state = to_vec(x);
    return run;
}

Vec integrate_on_mesh(const OdeRhs& rhs, const Vec& x0, const std::vector<double>& mesh) {
    State x = to_state(x0);
    Stepper stepper;
    System sys{&rhs};
    for (std::size_t i = 1; i < mesh.size(); ++i) {
        stepper.do_step(sys, x, mesh[i - 1], mesh[i] - mesh[i - 1]);
        if (!finite(x)) throw IntegrationError("non-finite state at t=" + std::to_string(mesh[i]));
    }
    return to_vec(x);
}

Trajectory::Trajectory(OdeRhs rhs, std::vector<double> mesh, std::vector<Vec> nodes)
    : rhs_(std::move(rhs)), mesh_(std::move(mesh)), nodes_(std::move(nodes)) {
    if (mesh_.empty() || mesh_.size() != nodes_.size())
        throw InputError("trajectory needs one node per mesh point");
}

Vec Trajectory::at(double t) const {
    if (t <= mesh_.front()) return nodes_.front();
    if (t >= mesh_.back()) return nodes_.back();
    auto it = std::upper_bound(mesh_.begin(), mesh_.end(), t);
    const auto i = static_cast<std::size_t>(std::distance(mesh_.begin(), it)) - 1;
    if (t == mesh_[i]) return nodes_[i];
    return integrate_on_mesh(rhs_, nodes_[i], {mesh_[i], t});
}

}  // namespace gaitcont
