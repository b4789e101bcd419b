#pragma once

#include "gaitcont/dynamics.hpp"
#include "gaitcont/ode.hpp"

#include <memory>
#include <optional>

namespace gaitcont {

struct FlowOptions {
    OdeTolerances ode;
    // Relative finite-difference step: delta_i = fd_step * max(1, |c_i|).
    double fd_step = 1e-6;
};

struct FlowResult {
    RobotState post_impact;
    RobotState end_state;
    StepContext context;
    std::vector<double> mesh;
};

struct PeriodicityResult {
    Vec residual;
    RobotState end_state;
};

struct JacobianResult {
    Mat J;  // 2n x (2n + 1 + k)
    Vec residual;
    RobotState end_state;
};

// Right-hand side [qdot; qddot] of the continuous phase for a fixed context.
// The returned function refers to model; it must not outlive it.
OdeRhs flow_rhs(const HybridModel& model, StepContext ctx);
Vec state_derivative(const HybridModel& model, const RobotState& x, double t, const StepContext& ctx);

RobotState flip(const HybridModel& model, const RobotState& x);

// Impact at t = 0, then integrate the continuous phase up to tau.
FlowResult flow_detailed(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts = {});
RobotState flow(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts = {});
// Flow on a prescribed mesh over [0, tau] (used for finite differences).
RobotState flow_on_mesh(const HybridModel& model, const GaitPoint& c, const std::vector<double>& mesh);
// Dense trajectory of the continuous phase, for quadrature and animation.
Trajectory flow_trajectory(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts = {});

PeriodicityResult periodicity(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts = {});

// Central finite differences column by column. Each +delta run is adaptive
// and the matching -delta run replays its mesh.
JacobianResult jacobian(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts = {});

}  // namespace gaitcont
