#pragma once

#include "gaitcont/core.hpp"

#include <map>
#include <string>
#include <vector>

namespace gaitcont {

struct BezierValue {
    double value = 0;
    double d1 = 0;  // d/dtheta
    double d2 = 0;  // d^2/dtheta^2
};

// Virtual holonomic constraint q[joint_index] - b(theta; a) = 0 with the
// phase theta = t / tau, enforced by the PD law
// v = (1/eps) K_D hdot + (1/eps^2) K_P h.
struct VhcSpec {
    int joint_index = 0;
    int degree = 1;
    Vec coefficients;
    Mat kp = Mat::Identity(1, 1);
    Mat kd = Mat::Identity(1, 1);
    double epsilon = 0.1;
};

void validate_vhc(const VhcSpec& spec);
BezierValue bezier_eval(const VhcSpec& spec, double theta);

// Per-step control data: built once from the gait point and the
// post-impact state, then held fixed along the flow.
struct StepContext {
    double tau = 1.0;
    Vec mu;
    std::vector<VhcSpec> vhcs;
};

struct DynamicsEvaluation {
    Vec qddot;
    Vec lambda;
    Vec u;
};

// Coordinates in which the impact is resolved. Minimal-coordinate models
// lift the pre-impact velocity into a larger frame where the new contact is
// free, then reduce the post-impact velocity back.
struct ImpactFrame {
    Mat mass;
    Mat jacobian;  // J_iota, n_iota x n_e
    Vec velocity;  // pre-impact velocity in frame coordinates
};

struct ImpactEvaluation {
    Vec qdot_plus;
    Vec impulse;
    ImpactFrame frame;
    Vec velocity_plus;  // post-impact velocity in frame coordinates
};

class HybridModel {
public:
    virtual ~HybridModel() = default;

    virtual std::string name() const = 0;
    virtual Dims dims() const = 0;
    virtual std::map<std::string, double> parameters() const { return {}; }

    virtual Mat mass_matrix(const Vec& q) const = 0;
    virtual Vec bias_forces(const Vec& q, const Vec& qdot) const = 0;
    virtual Mat input_matrix(const Vec& q) const;

    // Physical holonomic constraints. Models in minimal coordinates set
    // phcs_eliminated() and report the contact forces through phc_forces().
    virtual bool phcs_eliminated() const { return false; }
    virtual Mat phc_jacobian(const Vec& q) const;
    virtual Vec phc_drift(const Vec& q, const Vec& qdot) const;
    virtual Vec phc_forces(const RobotState& x, const Vec& qddot, const Vec& u) const;
    // Optional Baumgarte stabilization of the PHCs (off when both are zero).
    virtual double baumgarte_alpha() const { return 0.0; }
    virtual double baumgarte_beta() const { return 0.0; }
    virtual Vec phc_position_error(const Vec& q) const;

    virtual StepContext step_context(const GaitPoint& c, const RobotState& post_impact) const;
    // Prescribed input; used only when the model has no VHCs.
    virtual Vec open_loop_input(double t, const StepContext& ctx) const;
    // True when the controls depend on tau, so dP/dtau is no longer just f.
    virtual bool controls_depend_on_duration() const { return false; }

    virtual ImpactFrame impact_frame(const RobotState& pre) const = 0;
    virtual Vec reduce_velocity(const Vec& q, const Vec& frame_velocity) const;

    // Signed permutation on the stacked state (q, qdot).
    virtual Mat flip_matrix() const = 0;
    virtual std::vector<RobotState> equilibria() const { return {}; }
    virtual double potential_energy(const Vec& q) const;
};

Mat checked_mass_matrix(const HybridModel& model, const Vec& q);
Vec checked_bias_forces(const HybridModel& model, const RobotState& x);

DynamicsEvaluation constrained_accel(const HybridModel& model, const RobotState& x, double t,
                                     const StepContext& ctx);
// Convenience overload with a default context (tau = 1, mu = 0).
DynamicsEvaluation constrained_accel(const HybridModel& model, const RobotState& x, double t = 0.0);

// Residual of the stacked linear system at a given solution.
Vec dynamics_residual(const HybridModel& model, const RobotState& x, double t, const StepContext& ctx,
                      const DynamicsEvaluation& ev);

ImpactEvaluation impact(const HybridModel& model, const RobotState& x);

double kinetic_energy(const HybridModel& model, const RobotState& x);
double total_energy(const HybridModel& model, const RobotState& x);

StepContext default_context(const HybridModel& model);

}  // namespace gaitcont
