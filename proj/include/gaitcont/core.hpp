#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gaitcont {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Model dimensions: configuration size n, physical holonomic constraints n_p,
// virtual constraints n_v, inputs n_u and control/design parameters k.
struct Dims {
    int n = 0;
    int n_p = 0;
    int n_v = 0;
    int n_u = 0;
    int k = 0;

    int state() const { return 2 * n; }
    int space() const { return 2 * n + 1 + k; }
    bool operator==(const Dims&) const = default;
};

struct RobotState {
    Vec q;
    Vec qdot;

    RobotState() = default;
    RobotState(Vec q_, Vec qdot_) : q(std::move(q_)), qdot(std::move(qdot_)) {}

    int n() const { return static_cast<int>(q.size()); }
    Vec stacked() const;
    static RobotState from_stacked(const Eigen::Ref<const Vec>& x);
    bool finite() const;
};

// A point c = (x0, tau, mu) of state-time-control space. x0 is the
// pre-impact state; the impact happens at t = 0 and the flow runs to tau.
struct GaitPoint {
    RobotState x0;
    double tau = 0.0;
    Vec mu;

    Vec to_vector() const;
    static GaitPoint from_vector(const Eigen::Ref<const Vec>& c, int n);
    int dim() const { return 2 * x0.n() + 1 + static_cast<int>(mu.size()); }
};

// Throws InputError unless c matches the dimensions and tau > 0.
void validate_gait_point(const GaitPoint& c, const Dims& dims);

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class SingularDynamicsError : public Error {
public:
    SingularDynamicsError(int rank, int expected, double time);
    int rank;
    int expected;
    double time;
};

class SingularImpactError : public Error {
public:
    SingularImpactError(int rank, int expected);
    int rank;
    int expected;
};

class IntegrationError : public Error {
public:
    using Error::Error;
};

class NoTangentError : public Error {
public:
    using Error::Error;
};

class StepFailure : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, Vec last, double residual)
        : Error(what), last_iterate(std::move(last)), residual_norm(residual) {}
    Vec last_iterate;
    double residual_norm;
};

class DegenerateReferenceError : public Error {
public:
    using Error::Error;
};

class StalledDescentError : public Error {
public:
    StalledDescentError(const std::string& what, Vec last, double p)
        : Error(what), last_iterate(std::move(last)), p_value(p) {}
    Vec last_iterate;
    double p_value;
};

}  // namespace gaitcont
