#pragma once

#include "gaitcont/core.hpp"

#include <functional>
#include <vector>

namespace gaitcont {

struct OdeTolerances {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_steps = 100000;
};

using OdeRhs = std::function<void(double t, const Eigen::Ref<const Vec>& x, Eigen::Ref<Vec> dxdt)>;

struct AdaptiveRun {
    Vec final_state;
    // Accepted step boundaries including t0 and t1.
    std::vector<double> mesh;
    std::vector<Vec> nodes;
};

// Adaptive Runge-Kutta-Fehlberg 7(8) from t0 to t1.
AdaptiveRun integrate_adaptive(const OdeRhs& rhs, const Vec& x0, double t0,
                               double t1, const OdeTolerances& tol,
                               bool keep_nodes = false);

// Same 7(8) scheme stepping exactly through the given mesh. Used to replay an
// adaptive mesh so that finite differences of two runs are smooth in the
// perturbation.
Vec integrate_on_mesh(const OdeRhs& rhs, const Vec& x0,
                      const std::vector<double>& mesh);

// Random-access trajectory: stored mesh nodes plus one 7(8) step from the
// nearest node to the requested time. Accuracy matches the adaptive run.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(OdeRhs rhs, std::vector<double> mesh, std::vector<Vec> nodes);

    double t0() const { return mesh_.front(); }
    double t1() const { return mesh_.back(); }
    Vec at(double t) const;
    const std::vector<double>& mesh() const { return mesh_; }
    const std::vector<Vec>& nodes() const { return nodes_; }

private:
    OdeRhs rhs_;
    std::vector<double> mesh_;
    std::vector<Vec> nodes_;
};

}  // namespace gaitcont
