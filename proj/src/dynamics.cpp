#include "gaitcont/dynamics.hpp"

#include "gaitcont/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace gaitcont {

void validate_vhc(const VhcSpec& spec) {
    if (spec.degree < 1) throw InputError("Bezier degree must be at least 1");
    if (spec.coefficients.size() != spec.degree + 1)
        throw InputError("Bezier coefficient count must be degree + 1");
    if (!(spec.epsilon > 0)) throw InputError("VHC epsilon must be positive");
    if (spec.kp.rows() != 1 || spec.kp.cols() != 1 || spec.kd.rows() != 1 || spec.kd.cols() != 1)
        throw InputError("per-joint VHC gains must be 1x1");
    if (!(spec.kp(0, 0) > 0) || !(spec.kd(0, 0) > 0)) throw InputError("VHC gains must be positive");
}

BezierValue bezier_eval(const VhcSpec& spec, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw InputError("Bezier phase outside [0,1]");
    const int d = spec.degree;
    const Vec& a = spec.coefficients;
    if (a.size() != d + 1) throw InputError("Bezier coefficient count must be degree + 1");

    // de Casteljau; the last two and three levels give the derivatives.
    Vec w = a;
    BezierValue out;
    for (int level = d; level >= 1; --level) {
        if (level == 2) out.d2 = d * (d - 1) * (w(2) - 2 * w(1) + w(0));
        if (level == 1) out.d1 = d * (w(1) - w(0));
        for (int i = 0; i < level; ++i) w(i) = (1 - theta) * w(i) + theta * w(i + 1);
    }
    out.value = w(0);
    return out;
}

Mat HybridModel::input_matrix(const Vec&) const { return Mat::Zero(dims().n, dims().n_u); }

Mat HybridModel::phc_jacobian(const Vec&) const { return Mat::Zero(0, dims().n); }

Vec HybridModel::phc_drift(const Vec&, const Vec&) const { return Vec::Zero(0); }

Vec HybridModel::phc_position_error(const Vec&) const { return Vec::Zero(phc_jacobian(Vec::Zero(dims().n)).rows()); }

Vec HybridModel::phc_forces(const RobotState&, const Vec&, const Vec&) const {
    return Vec::Zero(dims().n_p);
}

StepContext HybridModel::step_context(const GaitPoint& c, const RobotState&) const {
    StepContext ctx;
    ctx.tau = c.tau;
    ctx.mu = c.mu;
    return ctx;
}

Vec HybridModel::open_loop_input(double, const StepContext&) const { return Vec::Zero(dims().n_u); }

Vec HybridModel::reduce_velocity(const Vec&, const Vec& v) const { return v; }

double HybridModel::potential_energy(const Vec&) const { return 0.0; }

Mat checked_mass_matrix(const HybridModel& model, const Vec& q) {
    if (q.size() != model.dims().n) throw InputError("configuration has wrong dimension");
    if (!q.allFinite()) throw InputError("non-finite configuration");
    return model.mass_matrix(q);
}

Vec checked_bias_forces(const HybridModel& model, const RobotState& x) {
    const int n = model.dims().n;
    if (x.q.size() != n || x.qdot.size() != n) throw InputError("state has wrong dimension");
    if (!x.finite()) throw InputError("non-finite state");
    return model.bias_forces(x.q, x.qdot);
}

StepContext default_context(const HybridModel& model) {
    GaitPoint c;
    c.x0 = RobotState(Vec::Zero(model.dims().n), Vec::Zero(model.dims().n));
    c.tau = 1.0;
    c.mu = Vec::Zero(model.dims().k);
    return model.step_context(c, c.x0);
}

namespace {

struct StackedSystem {
    Mat A;
    Vec rhs;
    Vec u_prescribed;  // set when inputs are open loop
    int n_p_rows = 0;
    bool solve_u = false;
};

StackedSystem assemble(const HybridModel& model, const RobotState& x, double t, const StepContext& ctx) {
    const Dims d = model.dims();
    const int n = d.n;
    const Mat M = checked_mass_matrix(model, x.q);
    const Vec b = checked_bias_forces(model, x);

    Mat Jp = Mat::Zero(0, n);
    Vec rhs_p = Vec::Zero(0);
    if (!model.phcs_eliminated()) {
        Jp = model.phc_jacobian(x.q);
        rhs_p = -model.phc_drift(x.q, x.qdot);
        const double alpha = model.baumgarte_alpha();
        const double beta = model.baumgarte_beta();
        if (alpha != 0.0 || beta != 0.0)
            rhs_p -= 2 * alpha * (Jp * x.qdot) + beta * beta * model.phc_position_error(x.q);
    }
    const int np = static_cast<int>(Jp.rows());
    const int nv = static_cast<int>(ctx.vhcs.size());
    if (nv != d.n_v) throw InputError("step context VHC count does not match model");

    StackedSystem s;
    s.n_p_rows = np;
    if (nv == 0) {
        s.A = Mat::Zero(n + np, n + np);
        s.A.topLeftCorner(n, n) = M;
        s.A.block(0, n, n, np) = -Jp.transpose();
        s.A.block(n, 0, np, n) = Jp;
        s.rhs.resize(n + np);
        Vec f = -b;
        if (d.n_u > 0) {
            s.u_prescribed = model.open_loop_input(t, ctx);
            f += model.input_matrix(x.q) * s.u_prescribed;
        }
        s.rhs << f, rhs_p;
        return s;
    }

    s.solve_u = true;
    const int nu = d.n_u;
    const Mat B = model.input_matrix(x.q);
    s.A = Mat::Zero(n + np + nv, n + np + nu);
    s.A.topLeftCorner(n, n) = M;
    s.A.block(0, n, n, np) = -Jp.transpose();
    s.A.block(0, n + np, n, nu) = -B;
    s.A.block(n, 0, np, n) = Jp;
    Vec rhs_v(nv);
    const double theta = std::clamp(t / ctx.tau, 0.0, 1.0);
    for (int j = 0; j < nv; ++j) {
        const VhcSpec& v = ctx.vhcs[j];
        const int i = v.joint_index;
        if (i < 0 || i >= n) throw InputError("VHC joint index out of range");
        const BezierValue bz = bezier_eval(v, theta);
        const double h = x.q(i) - bz.value;
        const double hdot = x.qdot(i) - bz.d1 / ctx.tau;
        const double eps = v.epsilon;
        s.A(n + np + j, i) = 1.0;
        rhs_v(j) = bz.d2 / (ctx.tau * ctx.tau) - (v.kd(0, 0) * hdot / eps + v.kp(0, 0) * h / (eps * eps));
    }
    s.rhs.resize(n + np + nv);
    s.rhs << -b, rhs_p, rhs_v;
    return s;
}

}  // namespace

DynamicsEvaluation constrained_accel(const HybridModel& model, const RobotState& x, double t,
                                     const StepContext& ctx) {
    const Dims d = model.dims();
    const int n = d.n;
    StackedSystem s = assemble(model, x, t, ctx);
    const int rows = static_cast<int>(s.A.rows());

    Vec sol;
    if (!s.solve_u && s.n_p_rows == 0) {
        // Plain M qddot = f; Cholesky doubles as the rank check.
        Eigen::LLT<Mat> llt(s.A);
        if (llt.info() != Eigen::Success) throw SingularDynamicsError(numerical_rank(s.A), rows, t);
        sol = llt.solve(s.rhs);
    } else {
        const int rank = numerical_rank(s.A);
        if (rank < rows) throw SingularDynamicsError(rank, rows, t);
        sol = pinv_solve(s.A, s.rhs);
    }

    DynamicsEvaluation ev;
    ev.qddot = sol.head(n);
    ev.u = s.solve_u ? Vec(sol.tail(d.n_u)) : (d.n_u > 0 ? s.u_prescribed : Vec::Zero(0));
    if (model.phcs_eliminated())
        ev.lambda = model.phc_forces(x, ev.qddot, ev.u);
    else
        ev.lambda = sol.segment(n, s.n_p_rows);
    return ev;
}

DynamicsEvaluation constrained_accel(const HybridModel& model, const RobotState& x, double t) {
    return constrained_accel(model, x, t, default_context(model));
}

Vec dynamics_residual(const HybridModel& model, const RobotState& x, double t, const StepContext& ctx,
                      const DynamicsEvaluation& ev) {
    StackedSystem s = assemble(model, x, t, ctx);
    const int n = model.dims().n;
    Vec sol(s.A.cols());
    sol.head(n) = ev.qddot;
    if (s.n_p_rows > 0) sol.segment(n, s.n_p_rows) = ev.lambda;
    if (s.solve_u) sol.tail(ev.u.size()) = ev.u;
    return s.A * sol - s.rhs;
}

ImpactEvaluation impact(const HybridModel& model, const RobotState& x) {
    const int n = model.dims().n;
    if (x.q.size() != n || x.qdot.size() != n) throw InputError("state has wrong dimension");
    if (!x.finite()) throw InputError("non-finite state");

    ImpactEvaluation ev;
    ev.frame = model.impact_frame(x);
    const Mat& Me = ev.frame.mass;
    const Mat& J = ev.frame.jacobian;
    const int ne = static_cast<int>(Me.rows());
    const int ni = static_cast<int>(J.rows());
    const int rank = numerical_rank(J);
    if (rank < ni) throw SingularImpactError(rank, ni);

    Mat A = Mat::Zero(ne + ni, ne + ni);
    A.topLeftCorner(ne, ne) = Me;
    A.block(0, ne, ne, ni) = -J.transpose();
    A.block(ne, 0, ni, ne) = J;
    Vec rhs = Vec::Zero(ne + ni);
    rhs.head(ne) = Me * ev.frame.velocity;
    const Vec sol = pinv_solve(A, rhs);
    ev.velocity_plus = sol.head(ne);
    ev.impulse = sol.tail(ni);
    ev.qdot_plus = model.reduce_velocity(x.q, ev.velocity_plus);
    return ev;
}

double kinetic_energy(const HybridModel& model, const RobotState& x) {
    return 0.5 * x.qdot.dot(checked_mass_matrix(model, x.q) * x.qdot);
}

double total_energy(const HybridModel& model, const RobotState& x) {
    return kinetic_energy(model, x) + model.potential_energy(x.q);
}

}  // namespace gaitcont
