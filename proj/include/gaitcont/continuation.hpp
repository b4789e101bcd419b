#pragma once

#include "gaitcont/map.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gaitcont {

struct BoxBounds {
    Vec lower;
    Vec upper;

    static BoxBounds unbounded(int dim);
    void validate(int dim) const;
    bool contains(const Vec& c) const;
    Vec clamp(const Vec& c) const;
    bool empty() const { return lower.size() == 0; }
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 50;
    // Give up early when the residual grows beyond this multiple of the
    // starting residual (plus one).
    double divergence_factor = 1e6;
};

enum class NewtonStatus { Converged, Stationary };

struct NewtonResult {
    Vec point;
    double residual_norm = 0;
    int iterations = 0;
    NewtonStatus status = NewtonStatus::Converged;
    Mat jacobian;  // at point
    bool converged() const { return status == NewtonStatus::Converged; }
};

using ResidualFn = std::function<MapEvaluation(const Vec&)>;

// Newton with a pseudoinverse step followed by clamping to the box. Returns
// Converged when ||r|| < tol, Stationary when the clamp stops all progress,
// and throws ConvergenceError after max_iter.
NewtonResult projected_newton(const ResidualFn& residual, const Vec& c, const BoxBounds& bounds,
                              const NewtonOptions& opts = {});
NewtonResult projected_newton(const ContinuationMap& map, const Vec& c, const BoxBounds& bounds,
                              const NewtonOptions& opts = {});

struct StepResult {
    Vec point;
    Mat jacobian;  // dM/dc at point
    double residual_norm = 0;
    int iterations = 0;
};

// Predictor c + h cdot, corrector on [M(z); cdot^T (z - c) - h] = 0.
// Throws StepFailure when the corrector does not converge.
StepResult cm_step(const ContinuationMap& map, const Vec& c, const Vec& cdot, double h,
                   const NewtonOptions& opts = {}, const BoxBounds& bounds = {});
GaitPoint cm_step(const ContinuationMap& map, const GaitPoint& c, const Vec& cdot, double h);

struct CurveOptions {
    int count = 250;
    double step = 1.0 / 20.0;
    double min_step = 1e-6;
    int restore_after = 3;
    NewtonOptions newton;
    BoxBounds bounds;  // corrector clamp
    BoxBounds domain;  // stop when a point leaves it
};

struct CurveResult {
    // points[0] is the seed; points[i] for i >= 1 are the traced points.
    std::vector<Vec> points;
    std::vector<Vec> tangents;  // oriented in the direction of travel
    std::vector<double> residual_norms;
    std::vector<double> steps;  // signed step used to reach points[i]
    bool complete = true;
    std::string diagnostic;
};

CurveResult cm_curve(const ContinuationMap& map, const Vec& c0, const Vec& cdot0, const CurveOptions& opts = {});

// det(dP/dx0) at the equilibrium gait (x_eq, tau, mu).
double indicator(const HybridModel& model, const RobotState& x_eq, const Vec& mu, double tau,
                 const FlowOptions& opts = {});

struct IndicatorSample {
    double tau;
    double value;
};

struct SingularEG {
    GaitPoint point;
    Vec tangent;  // unit, orthogonal to e0
    // Same direction with the state block pushed through the impact
    // Jacobian (post-impact coordinates), renormalized.
    Vec post_impact_tangent;
    double indicator_root = 0;
    double indicator_value = 0;
    int null_dimension = 0;  // of the M0 Jacobian, e0 included
    bool switchable() const { return null_dimension <= 2; }
};

struct ScanOptions {
    FlowOptions flow;
    double root_tol = 1e-10;
    double bracket_tol = 1e-12;
    int max_polish_iter = 200;
};

struct ScanResult {
    std::vector<SingularEG> singular;
    std::vector<IndicatorSample> samples;
};

ScanResult scan_indicator(const HybridModel& model, const RobotState& x_eq, const Vec& mu, double a, double b,
                          int steps, const ScanOptions& opts = {});
std::vector<SingularEG> scan_singular(const HybridModel& model, const RobotState& x_eq, const Vec& mu, double a,
                                      double b, int steps, const ScanOptions& opts = {});

// Non-time unit tangent of Null(J0) at an equilibrium gait, sign-normalized so
// that the first clearly nonzero component is positive.
Vec singular_tangent(const Mat& j0, int tau_index, int* null_dimension = nullptr);
Vec normalize_sign(Vec v);
// Central-difference Jacobian of the impact map x- -> x+.
Mat impact_jacobian(const HybridModel& model, const RobotState& x, double delta = 1e-6);
Vec post_impact_direction(const HybridModel& model, const RobotState& x, const Vec& tangent);

struct GaitRecord {
    GaitPoint gait;
    double residual_norm = 0;  // ||P(c)||
    double slope = 0;
    double step_length = 0;
    bool push_pull = false;
};

struct Branch {
    std::string label;
    int seed_index = 0;
    int direction = 1;
    int level = 1;
    int parent = -1;  // index of the seed point in the previous level, if any
    int mirror_of = -1;
    GaitPoint seed;
    Vec tangent;
    MapKind map_kind = MapKind::ConstantControl;
    std::string map;
    std::vector<GaitRecord> gaits;
    bool complete = true;
    std::string diagnostic;
};

enum class ScanClass { ConstantZero, NoCrossing, Ok };
std::string to_string(ScanClass c);
ScanClass classify_scan(const std::vector<IndicatorSample>& samples, std::size_t roots_found);
std::string remediation(ScanClass c);

struct GaitFamily {
    std::vector<Branch> branches;
    std::vector<IndicatorSample> indicator;
    std::vector<SingularEG> singular;
    ScanClass classification = ScanClass::Ok;
    std::string diagnostic;

    std::size_t gait_count() const;
};

struct FamilyOptions {
    CurveOptions curve;
    ScanOptions scan;
    bool both_signs = true;
    int seed_index = -1;  // trace only this singular EG; -1 for all
    unsigned max_threads = 0;  // 0: hardware concurrency
};

GaitRecord make_record(const HybridModel& model, const GaitPoint& c, const FlowOptions& opts = {});

// Traces one branch under M0 from a seed gait and tangent.
Branch trace_branch(std::shared_ptr<const HybridModel> model, const GaitPoint& seed, const Vec& tangent,
                    int direction, const CurveOptions& opts, const FlowOptions& flow = {});

GaitFamily build_family(std::shared_ptr<const HybridModel> model, const GaitPoint& c_eq, double a, double b,
                        int steps, const FamilyOptions& opts = {});

struct MultiDimOptions {
    // Count and step per level; level i uses counts[i-1] (last entry repeats).
    std::vector<int> counts{250};
    std::vector<double> steps{1.0 / 20.0};
    bool both_directions = false;
    CurveOptions curve;
    FlowOptions flow;
    unsigned max_threads = 0;
};

struct MultiDimResult {
    std::vector<Branch> branches;
    std::vector<GaitPoint> points;  // union of all levels
};

MultiDimResult multi_dim(std::shared_ptr<const HybridModel> model, const SingularEG& seed, int d,
                         const MultiDimOptions& opts = {});

// Mirrored gait (-x0, tau, mu) re-polished under M0.
NewtonResult polish_mirror(std::shared_ptr<const HybridModel> model, const GaitPoint& c, const FlowOptions& flow = {});

}  // namespace gaitcont
