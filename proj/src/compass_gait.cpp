#include "gaitcont/models.hpp"

#include <algorithm>
#include <cmath>

namespace gaitcont {

namespace {
constexpr double kPi = 3.14159265358979323846;

Eigen::Vector2d up(double q) { return {-std::sin(q), std::cos(q)}; }
Eigen::Vector2d up_d(double q) { return {-std::cos(q), -std::sin(q)}; }
Eigen::Vector2d up_dd(double q) { return {std::sin(q), -std::cos(q)}; }
}  // namespace

void CompassGaitParams::validate() const {
    if (!(m > 0 && m_H > 0 && a > 0 && b > 0 && g > 0))
        throw InputError("compass gait parameters must all be positive");
}

CompassGait::CompassGait(CompassGaitParams p, CompassControl control, ActuationSpec act, VhcGains gains,
                         int stance_index)
    : p_(p), control_(control), act_(act), gains_(gains), s_(stance_index) {
    p_.validate();
    if (s_ != 0 && s_ != 1) throw InputError("stance index must be 0 or 1");
    if (control_ != CompassControl::Passive && act_.amplitude_index != 0)
        throw InputError("compass gait has a single control parameter at index 0");
    if (!(gains_.kp > 0 && gains_.kd > 0 && gains_.epsilon > 0)) throw InputError("VHC gains must be positive");
}

std::string CompassGait::name() const {
    switch (control_) {
        case CompassControl::Passive: return "compass_gait";
        case CompassControl::SinusoidalHip: return "compass_gait_actuated";
        case CompassControl::SwingVhc: return "compass_gait_vhc";
    }
    return "compass_gait";
}

Dims CompassGait::dims() const {
    switch (control_) {
        case CompassControl::Passive: return {2, 2, 0, 0, 0};
        case CompassControl::SinusoidalHip: return {2, 2, 0, 1, 1};
        case CompassControl::SwingVhc: return {2, 2, 1, 1, 1};
    }
    return {2, 2, 0, 0, 0};
}

std::map<std::string, double> CompassGait::parameters() const {
    std::map<std::string, double> out{{"m", p_.m}, {"m_H", p_.m_H}, {"a", p_.a},
                                      {"b", p_.b}, {"g", p_.g},     {"stance_index", s_}};
    if (control_ == CompassControl::SinusoidalHip) {
        out["omega"] = act_.omega;
        out["torque_scale"] = torque_scale();
    }
    if (control_ == CompassControl::SwingVhc) {
        out["kp"] = gains_.kp;
        out["kd"] = gains_.kd;
        out["epsilon"] = gains_.epsilon;
    }
    return out;
}

double CompassGait::torque_scale() const { return act_.torque_scale > 0 ? act_.torque_scale : p_.m * p_.b * p_.b; }

Mat CompassGait::mass_matrix(const Vec& q) const {
    const int s = s_, w = 1 - s_;
    const double l = p_.leg_length();
    Mat M(2, 2);
    M(s, s) = p_.m * p_.a * p_.a + (p_.m_H + p_.m) * l * l;
    M(w, w) = p_.m * p_.b * p_.b;
    M(s, w) = M(w, s) = -p_.m * l * p_.b * std::cos(q(s) - q(w));
    return M;
}

Vec CompassGait::bias_forces(const Vec& q, const Vec& qd) const {
    const int s = s_, w = 1 - s_;
    const double l = p_.leg_length();
    const double mlb = p_.m * l * p_.b;
    const double sd = std::sin(q(s) - q(w));
    Vec b(2);
    b(s) = -mlb * sd * qd(w) * qd(w) - p_.g * (p_.m * p_.a + (p_.m_H + p_.m) * l) * std::sin(q(s));
    b(w) = mlb * sd * qd(s) * qd(s) + p_.g * p_.m * p_.b * std::sin(q(w));
    return b;
}

Mat CompassGait::input_matrix(const Vec&) const {
    if (control_ == CompassControl::Passive) return Mat::Zero(2, 0);
    Mat B(2, 1);
    B << -1.0, 1.0;
    return B;
}

double CompassGait::potential_energy(const Vec& q) const {
    const double l = p_.leg_length();
    return p_.g * ((p_.m * p_.a + (p_.m_H + p_.m) * l) * std::cos(q(s_)) - p_.m * p_.b * std::cos(q(1 - s_)));
}

Vec CompassGait::phc_forces(const RobotState& x, const Vec& qdd, const Vec&) const {
    // Newton's law on the whole walker: contact force balances the total
    // momentum rate plus weight.
    const int s = s_, w = 1 - s_;
    const double l = p_.leg_length();
    const Eigen::Vector2d a_stance_dir = up_d(x.q(s)) * qdd(s) + up_dd(x.q(s)) * x.qdot(s) * x.qdot(s);
    const Eigen::Vector2d acc_leg = p_.a * a_stance_dir;
    const Eigen::Vector2d acc_hip = l * a_stance_dir;
    // Swing mass sits at hip - b * up(q_w).
    const Eigen::Vector2d acc_swing =
        acc_hip - p_.b * (up_d(x.q(w)) * qdd(w) + up_dd(x.q(w)) * x.qdot(w) * x.qdot(w));
    const Eigen::Vector2d gvec(0.0, p_.g);
    const Eigen::Vector2d R = p_.m * (acc_leg + gvec) + p_.m_H * (acc_hip + gvec) + p_.m * (acc_swing + gvec);
    return Vec(R);
}

Vec CompassGait::contact_force(const RobotState& x, double t, const StepContext& ctx) const {
    return constrained_accel(*this, x, t, ctx).lambda;
}

StepContext CompassGait::step_context(const GaitPoint& c, const RobotState& post) const {
    StepContext ctx;
    ctx.tau = c.tau;
    ctx.mu = c.mu;
    if (control_ == CompassControl::SwingVhc) {
        const int w = 1 - s_;
        const Vec end = flip_matrix() * c.x0.stacked();
        VhcSpec v;
        v.joint_index = w;
        v.degree = 4;
        v.coefficients.resize(5);
        const double d = v.degree;
        v.coefficients(0) = post.q(w);
        v.coefficients(1) = post.q(w) + c.tau * post.qdot(w) / d;
        v.coefficients(2) = c.mu(0);
        v.coefficients(4) = end(w);
        v.coefficients(3) = end(w) - c.tau * end(2 + w) / d;
        v.kp = Mat::Constant(1, 1, gains_.kp);
        v.kd = Mat::Constant(1, 1, gains_.kd);
        v.epsilon = gains_.epsilon;
        ctx.vhcs.push_back(v);
    }
    return ctx;
}

Vec CompassGait::open_loop_input(double t, const StepContext& ctx) const {
    if (control_ != CompassControl::SinusoidalHip) return Vec::Zero(dims().n_u);
    Vec u(1);
    u(0) = ctx.mu(act_.amplitude_index) * torque_scale() * std::sin(act_.omega * t);
    return u;
}

ImpactFrame CompassGait::impact_frame(const RobotState& pre) const {
    // Hip-base frame (x_H, y_H, q1, q2). Before impact the old stance foot is
    // pinned, which fixes the hip velocity.
    const int s = s_, o = 1 - s_;
    const double l = p_.leg_length();
    const Vec& q = pre.q;
    const Eigen::Vector2d vh = l * pre.qdot(o) * up_d(q(o));

    auto point = [&](int leg, double dist) {
        Mat J = Mat::Zero(2, 4);
        J.leftCols(2).setIdentity();
        J(0, 2 + leg) = dist * std::cos(q(leg));
        J(1, 2 + leg) = dist * std::sin(q(leg));
        return J;
    };
    Mat Jh = Mat::Zero(2, 4);
    Jh.leftCols(2).setIdentity();
    const Mat J0 = point(0, p_.b), J1 = point(1, p_.b);

    ImpactFrame f;
    f.mass = p_.m_H * Jh.transpose() * Jh + p_.m * J0.transpose() * J0 + p_.m * J1.transpose() * J1;
    f.jacobian = point(s, l);
    f.velocity.resize(4);
    f.velocity << vh(0), vh(1), pre.qdot(0), pre.qdot(1);
    return f;
}

Vec CompassGait::reduce_velocity(const Vec&, const Vec& v) const { return v.tail(2); }

Mat CompassGait::flip_matrix() const {
    Mat F = Mat::Zero(4, 4);
    F(0, 1) = F(1, 0) = F(2, 3) = F(3, 2) = 1.0;
    return F;
}

std::vector<RobotState> CompassGait::equilibria() const {
    return {RobotState(Vec::Zero(2), Vec::Zero(2)), RobotState(Vec::Constant(2, kPi), Vec::Zero(2))};
}

double CompassGait::slope(const GaitPoint& c) const { return 0.5 * (c.x0.q(0) + c.x0.q(1)); }

Eigen::Vector2d CompassGait::hip_position(const Vec& q) const { return p_.leg_length() * up(q(s_)); }

Eigen::Vector2d CompassGait::swing_foot_position(const Vec& q) const {
    return hip_position(q) - p_.leg_length() * up(q(1 - s_));
}

double CompassGait::swing_foot_height(const RobotState& x, double sigma) const {
    const Eigen::Vector2d normal(-std::sin(sigma), std::cos(sigma));
    return swing_foot_position(x.q).dot(normal);
}

double CompassGait::step_length(const GaitPoint& c) const {
    return 2.0 * p_.leg_length() * std::abs(std::sin(0.5 * (c.x0.q(0) - c.x0.q(1))));
}

int CompassGait::amplitude_index() const { return control_ == CompassControl::Passive ? -1 : act_.amplitude_index; }

double CompassGait::peak_input(const GaitPoint& c) const {
    if (control_ == CompassControl::Passive) return 0.0;
    if (control_ == CompassControl::SinusoidalHip) {
        const double phase = act_.omega * c.tau;
        const double peak = phase >= kPi / 2 ? 1.0 : std::sin(phase);
        return std::abs(c.mu(act_.amplitude_index)) * torque_scale() * peak;
    }
    const Trajectory traj = flow_trajectory(*this, c);
    const RobotState post(c.x0.q, impact(*this, c.x0).qdot_plus);
    const StepContext ctx = step_context(c, post);
    double peak = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double t = c.tau * i / 200.0;
        const DynamicsEvaluation ev = constrained_accel(*this, RobotState::from_stacked(traj.at(t)), t, ctx);
        peak = std::max(peak, ev.u.cwiseAbs().maxCoeff());
    }
    return peak;
}

double slope(const GaitModel& model, const GaitPoint& c) { return model.slope(c); }

double swing_foot_height(const GaitModel& model, const RobotState& x, double sigma) {
    return model.swing_foot_height(x, sigma);
}

double swing_foot_height(const GaitModel& model, const RobotState& x) {
    GaitPoint c;
    c.x0 = x;
    return model.swing_foot_height(x, model.slope(c));
}

bool push_pull(const GaitModel& model, const GaitPoint& c, const FlowOptions& opts, int samples) {
    const Trajectory traj = flow_trajectory(model, c, opts);
    const RobotState post(c.x0.q, impact(model, c.x0).qdot_plus);
    const StepContext ctx = model.step_context(c, post);
    const double sigma = model.slope(c);
    const Eigen::Vector2d normal(-std::sin(sigma), std::cos(sigma));
    for (int i = 0; i <= samples; ++i) {
        const double t = c.tau * i / samples;
        const Vec R = model.contact_force(RobotState::from_stacked(traj.at(t)), t, ctx);
        if (R.size() >= 2 && R.head<2>().dot(normal) < 0) return true;
    }
    return false;
}

// Hip-base model with explicit stance-foot constraints.

CompassGaitPinned::CompassGaitPinned(CompassGaitParams p, int stance_index, double alpha, double beta)
    : p_(p), s_(stance_index), alpha_(alpha), beta_(beta) {
    p_.validate();
    if (s_ != 0 && s_ != 1) throw InputError("stance index must be 0 or 1");
}

Mat CompassGaitPinned::point_jacobian(const Vec& q, int leg, double dist) const {
    Mat J = Mat::Zero(2, 4);
    J.leftCols(2).setIdentity();
    J(0, 2 + leg) = dist * std::cos(q(2 + leg));
    J(1, 2 + leg) = dist * std::sin(q(2 + leg));
    return J;
}

Mat CompassGaitPinned::mass_matrix(const Vec& q) const {
    Mat Jh = Mat::Zero(2, 4);
    Jh.leftCols(2).setIdentity();
    const Mat J0 = point_jacobian(q, 0, p_.b), J1 = point_jacobian(q, 1, p_.b);
    return p_.m_H * Jh.transpose() * Jh + p_.m * (J0.transpose() * J0 + J1.transpose() * J1);
}

Vec CompassGaitPinned::bias_forces(const Vec& q, const Vec& qd) const {
    Vec b = Vec::Zero(4);
    b(1) = (p_.m_H + 2 * p_.m) * p_.g;
    for (int leg = 0; leg < 2; ++leg) {
        const Mat J = point_jacobian(q, leg, p_.b);
        const double th = q(2 + leg), w = qd(2 + leg);
        const Eigen::Vector2d drift(-p_.b * std::sin(th) * w * w, p_.b * std::cos(th) * w * w);
        b += p_.m * J.transpose() * drift;
        b(2 + leg) += p_.m * p_.g * p_.b * std::sin(th);
    }
    return b;
}

Mat CompassGaitPinned::phc_jacobian(const Vec& q) const { return point_jacobian(q, s_, p_.leg_length()); }

Vec CompassGaitPinned::phc_drift(const Vec& q, const Vec& qd) const {
    const double l = p_.leg_length(), th = q(2 + s_), w = qd(2 + s_);
    Vec d(2);
    d << -l * std::sin(th) * w * w, l * std::cos(th) * w * w;
    return d;
}

Vec CompassGaitPinned::phc_position_error(const Vec& q) const {
    const double l = p_.leg_length(), th = q(2 + s_);
    Vec e(2);
    e << q(0) + l * std::sin(th), q(1) - l * std::cos(th);
    return e;
}

ImpactFrame CompassGaitPinned::impact_frame(const RobotState& pre) const {
    ImpactFrame f;
    f.mass = mass_matrix(pre.q);
    f.jacobian = phc_jacobian(pre.q);
    f.velocity = pre.qdot;
    return f;
}

Mat CompassGaitPinned::flip_matrix() const {
    Mat F = Mat::Zero(8, 8);
    F(0, 0) = F(1, 1) = F(4, 4) = F(5, 5) = 1.0;
    F(2, 3) = F(3, 2) = F(6, 7) = F(7, 6) = 1.0;
    return F;
}

double CompassGaitPinned::potential_energy(const Vec& q) const {
    return p_.g * (p_.m_H * q(1) + p_.m * (q(1) - p_.b * std::cos(q(2))) + p_.m * (q(1) - p_.b * std::cos(q(3))));
}

RobotState CompassGaitPinned::lift(const RobotState& x) const {
    const double l = p_.leg_length();
    const double th = x.q(s_), w = x.qdot(s_);
    Vec q(4), qd(4);
    q << -l * std::sin(th), l * std::cos(th), x.q(0), x.q(1);
    qd << -l * std::cos(th) * w, -l * std::sin(th) * w, x.qdot(0), x.qdot(1);
    return RobotState(q, qd);
}

}  // namespace gaitcont
