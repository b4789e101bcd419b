#pragma once

#include "gaitcont/hybrid.hpp"

#include <memory>
#include <string>

namespace gaitcont {

// Walking-specific geometry on top of the hybrid interface.
class GaitModel : public HybridModel {
public:
    // Implicit walking-surface angle of a gait.
    virtual double slope(const GaitPoint& c) const = 0;
    // Signed height of the swing foot above a surface of the given slope
    // through the stance foot (flow labeling).
    virtual double swing_foot_height(const RobotState& x, double surface_slope) const = 0;
    virtual double step_length(const GaitPoint& c) const = 0;
    // Contact force on the stance foot, world frame.
    virtual Vec contact_force(const RobotState& x, double t, const StepContext& ctx) const = 0;
    // Index of the actuation amplitude inside mu, or -1.
    virtual int amplitude_index() const { return -1; }
    // Peak |u| over a step, for reporting.
    virtual double peak_input(const GaitPoint&) const { return 0.0; }
};

struct CompassGaitParams {
    double m = 1.0;    // leg point mass
    double m_H = 2.0;  // hip mass
    double a = 0.5;    // foot to leg mass
    double b = 0.5;    // leg mass to hip
    double g = 9.81;

    double leg_length() const { return a + b; }
    void validate() const;
};

enum class CompassControl {
    Passive,
    // u(t) = mu0 * torque_scale * sin(omega t), acting +u on q2 and -u on q1.
    SinusoidalHip,
    // Swing leg tracks a degree-4 Bezier in t / tau; mu0 is the middle coefficient.
    SwingVhc,
};

struct ActuationSpec {
    int amplitude_index = 0;
    double omega = 2.0 * 3.14159265358979323846;
    // Torque per unit mu0; defaults to m b^2 when not positive.
    double torque_scale = -1.0;
};

struct VhcGains {
    double kp = 1.0;
    double kd = 2.0;
    double epsilon = 0.05;
};

// Two-angle compass gait: q = (q1, q2) absolute leg angles from the upward
// vertical, counter-clockwise positive. During the flow the leg with index
// stance_index is pinned at the origin; the impact at t = 0 makes that leg
// the new stance leg.
class CompassGait : public GaitModel {
public:
    CompassGait(CompassGaitParams p = {}, CompassControl control = CompassControl::Passive,
                ActuationSpec act = {}, VhcGains gains = {}, int stance_index = 1);

    std::string name() const override;
    Dims dims() const override;
    std::map<std::string, double> parameters() const override;

    Mat mass_matrix(const Vec& q) const override;
    Vec bias_forces(const Vec& q, const Vec& qdot) const override;
    Mat input_matrix(const Vec& q) const override;
    bool phcs_eliminated() const override { return true; }
    Vec phc_forces(const RobotState& x, const Vec& qddot, const Vec& u) const override;

    StepContext step_context(const GaitPoint& c, const RobotState& post_impact) const override;
    Vec open_loop_input(double t, const StepContext& ctx) const override;
    bool controls_depend_on_duration() const override { return control_ == CompassControl::SwingVhc; }

    ImpactFrame impact_frame(const RobotState& pre) const override;
    Vec reduce_velocity(const Vec& q, const Vec& frame_velocity) const override;
    Mat flip_matrix() const override;
    std::vector<RobotState> equilibria() const override;
    double potential_energy(const Vec& q) const override;

    double slope(const GaitPoint& c) const override;
    double swing_foot_height(const RobotState& x, double surface_slope) const override;
    double step_length(const GaitPoint& c) const override;
    Vec contact_force(const RobotState& x, double t, const StepContext& ctx) const override;
    int amplitude_index() const override;
    double peak_input(const GaitPoint& c) const override;

    const CompassGaitParams& params() const { return p_; }
    CompassControl control() const { return control_; }
    int stance_index() const { return s_; }
    int swing_index() const { return 1 - s_; }
    double torque_scale() const;
    const ActuationSpec& actuation() const { return act_; }
    const VhcGains& vhc_gains() const { return gains_; }

    // World positions with the stance foot at the origin.
    Eigen::Vector2d hip_position(const Vec& q) const;
    Eigen::Vector2d swing_foot_position(const Vec& q) const;

private:
    CompassGaitParams p_;
    CompassControl control_;
    ActuationSpec act_;
    VhcGains gains_;
    int s_;
};

// The same walker in hip-base coordinates (x_H, y_H, q1, q2) with the stance
// foot held by two explicit holonomic constraints. Used to cross-check the
// minimal-coordinate model; its flip does not remove the hip translation, so
// it is not meant for periodicity.
class CompassGaitPinned : public HybridModel {
public:
    explicit CompassGaitPinned(CompassGaitParams p = {}, int stance_index = 1, double baumgarte_alpha = 0.0,
                               double baumgarte_beta = 0.0);

    std::string name() const override { return "compass_gait_pinned"; }
    Dims dims() const override { return {4, 2, 0, 0, 0}; }
    Mat mass_matrix(const Vec& q) const override;
    Vec bias_forces(const Vec& q, const Vec& qdot) const override;
    Mat phc_jacobian(const Vec& q) const override;
    Vec phc_drift(const Vec& q, const Vec& qdot) const override;
    Vec phc_position_error(const Vec& q) const override;
    double baumgarte_alpha() const override { return alpha_; }
    double baumgarte_beta() const override { return beta_; }
    ImpactFrame impact_frame(const RobotState& pre) const override;
    Mat flip_matrix() const override;
    double potential_energy(const Vec& q) const override;

    // Lift a minimal-coordinate state (stance foot at the origin).
    RobotState lift(const RobotState& minimal) const;

private:
    Mat point_jacobian(const Vec& q, int leg, double dist) const;
    CompassGaitParams p_;
    int s_;
    double alpha_;
    double beta_;
};

// Loads a model from a JSON configuration file or string.
std::shared_ptr<const GaitModel> load_model_file(const std::string& path);
std::shared_ptr<const GaitModel> load_model_json(const std::string& text);
std::string describe_model_json(const GaitModel& model);

double slope(const GaitModel& model, const GaitPoint& c);
double swing_foot_height(const GaitModel& model, const RobotState& x, double surface_slope);
double swing_foot_height(const GaitModel& model, const RobotState& x);
bool push_pull(const GaitModel& model, const GaitPoint& c, const FlowOptions& opts = {}, int samples = 64);

}  // namespace gaitcont
