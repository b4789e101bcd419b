#pragma once

#include "gaitcont/continuation.hpp"
#include "gaitcont/models.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gaitcont {

enum class ConstraintKind {
    Equality,         // q(c) = target
    SlackInequality,  // q(c) >= target, as q(c) - target - s = 0 with s >= 0
    IntegralPenalty,  // integral of [d(t)]^- over the step = 0
};

std::string to_string(ConstraintKind kind);

struct QueryConstraint {
    ConstraintKind kind = ConstraintKind::Equality;
    std::string quantity;
    std::function<double(const GaitPoint&)> evaluator;
    double target = 0.0;
};

// Path function d(c, t, x(t)) for integral penalties.
using PathFunction = std::function<double(const GaitPoint& c, double t, const RobotState& x)>;

// Integral of min(d, 0) over [0, tau] along the flow of c, adaptive
// Gauss-Kronrod with tolerance 1e-9. Nonpositive; zero iff d >= 0.
double integral_penalty(const HybridModel& model, const GaitPoint& c, const PathFunction& d,
                        const FlowOptions& opts = {}, double tol = 1e-9);

// Scalar gait quantities usable in queries: slope, step_length,
// average_velocity, duration, amplitude, peak_input, foot_clearance.
std::function<double(const GaitPoint&)> quantity_evaluator(std::shared_ptr<const GaitModel> model,
                                                           const std::string& name, const FlowOptions& opts = {});
std::vector<std::string> quantity_names();

// Extended coordinates: the gait vector followed by one slack per
// SlackInequality constraint.
class HomotopyProblem {
public:
    HomotopyProblem(std::shared_ptr<const HybridModel> model, std::vector<QueryConstraint> constraints,
                    const GaitPoint& reference, FlowOptions opts = {});

    int gait_dim() const { return gait_dim_; }
    int slack_count() const { return static_cast<int>(slack_rows_.size()); }
    int dim() const { return gait_dim_ + slack_count(); }
    int rows() const;
    int query_rows() const { return static_cast<int>(constraints_.size()); }

    const Vec& reference() const { return a_; }
    const Vec& reference_query() const { return h_a_; }
    const std::vector<QueryConstraint>& constraints() const { return constraints_; }

    Vec extend(const GaitPoint& c) const;  // slacks from max(q - target, 0)
    GaitPoint gait(const Vec& ext) const;
    Vec slacks(const Vec& ext) const;

    Vec H(const Vec& ext) const;
    double p(const Vec& ext) const;
    double p_from_H(const Vec& h) const;
    // H - p H(a) is orthogonal to H(a), so only its q-1 components in an
    // orthonormal basis of that complement are independent.
    Vec G(const Vec& ext) const;
    int g_rows() const { return query_rows() - 1; }
    Vec residual(const Vec& ext) const;  // [P; G]
    // Residual, Jacobian of [P; G] and the gradient of p, sharing the H
    // finite differences.
    MapEvaluation evaluate(const Vec& ext, Vec* grad_p = nullptr) const;
    ContinuationMap as_map() const;
    BoxBounds bounds() const;

private:
    std::shared_ptr<const HybridModel> model_;
    std::vector<QueryConstraint> constraints_;
    FlowOptions opts_;
    int gait_dim_;
    std::vector<int> slack_rows_;
    Vec a_;
    Vec h_a_;
    double h_a_sq_;
    Mat complement_;  // q x (q-1)
};

// Stacked [P(c); G(c)]. Throws DegenerateReferenceError when H(a) = 0.
Vec ghm_residual(std::shared_ptr<const HybridModel> model, const std::vector<QueryConstraint>& constraints,
                 const GaitPoint& a, const GaitPoint& c, const FlowOptions& opts = {});

struct GhmOptions {
    double alpha = 1e-4;
    double beta = 0.5;
    int max_iterations = 50;
    double p_tol = 1e-8;
    double min_lambda = 1e-12;
    FlowOptions flow;
    NewtonOptions newton;
};

struct GhmIterate {
    Vec point;  // extended coordinates
    double p = 1.0;
    double merit = 0.5;
    double lambda = 0.0;  // accepted Armijo factor (0 for the reference)
    double direction_residual = 0.0;  // ||dM_a/dc * dir|| / ||dir||
    double manifold_residual = 0.0;   // ||M_a(point)||
};

struct GhmResult {
    std::vector<GhmIterate> path;
    bool converged = false;
    bool reference_satisfied = false;
    GaitPoint root;
    Vec slacks;
    std::string diagnostic;
};

// Newton's method on p restricted to the manifold M_a = 0 with an Armijo
// backtracking line search. Stalled line searches throw StalledDescentError.
GhmResult ghm_solve(std::shared_ptr<const HybridModel> model, const std::vector<QueryConstraint>& constraints,
                    const GaitPoint& a, const GhmOptions& opts = {});

struct QuerySpec {
    std::vector<QueryConstraint> constraints;
    GhmOptions options;
    int branch = -1;
    int gait = -1;
};

QuerySpec load_query_json(std::shared_ptr<const GaitModel> model, const std::string& text);
QuerySpec load_query_file(std::shared_ptr<const GaitModel> model, const std::string& path);

}  // namespace gaitcont
