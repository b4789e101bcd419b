#include "gaitcont/continuation.hpp"
#include "gaitcont/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace gaitcont {

BoxBounds BoxBounds::unbounded(int dim) {
    const double inf = std::numeric_limits<double>::infinity();
    return {Vec::Constant(dim, -inf), Vec::Constant(dim, inf)};
}

void BoxBounds::validate(int dim) const {
    if (lower.size() != dim || upper.size() != dim) throw InputError("box bounds have wrong dimension");
    for (int i = 0; i < dim; ++i) {
        if (std::isnan(lower(i)) || std::isnan(upper(i))) throw InputError("box bounds contain NaN");
        if (lower(i) > upper(i)) throw InputError("box bounds have lower > upper");
    }
}

bool BoxBounds::contains(const Vec& c) const {
    if (empty()) return true;
    return (c.array() >= lower.array()).all() && (c.array() <= upper.array()).all();
}

Vec BoxBounds::clamp(const Vec& c) const {
    if (empty()) return c;
    return c.cwiseMax(lower).cwiseMin(upper);
}

NewtonResult projected_newton(const ResidualFn& residual, const Vec& c, const BoxBounds& bounds,
                              const NewtonOptions& opts) {
    if (!bounds.empty()) bounds.validate(static_cast<int>(c.size()));
    Vec z = bounds.clamp(c);
    double first_norm = -1;
    for (int it = 0;; ++it) {
        MapEvaluation ev = residual(z);
        if (ev.residual.size() > z.size()) throw InputError("residual has more rows than unknowns");
        const double norm = ev.residual.norm();
        if (!std::isfinite(norm)) throw ConvergenceError("residual became non-finite", z, norm);
        if (first_norm < 0) first_norm = norm;
        if (norm < opts.tol) return {z, norm, it, NewtonStatus::Converged, std::move(ev.jacobian)};
        if (it >= opts.max_iter) {
            std::ostringstream os;
            os << "projected Newton did not converge in " << opts.max_iter << " iterations (|r| = " << norm << ")";
            throw ConvergenceError(os.str(), z, norm);
        }
        if (norm > opts.divergence_factor * (1.0 + first_norm)) {
            std::ostringstream os;
            os << "projected Newton diverged (|r| = " << norm << ")";
            throw ConvergenceError(os.str(), z, norm);
        }
        const Vec d = pinv_solve(ev.jacobian, ev.residual);
        const Vec next = bounds.clamp(z - d);
        if ((next - z).norm() <= 1e-15 * (1.0 + z.norm()))
            return {z, norm, it, NewtonStatus::Stationary, std::move(ev.jacobian)};
        z = next;
    }
}

NewtonResult projected_newton(const ContinuationMap& map, const Vec& c, const BoxBounds& bounds,
                              const NewtonOptions& opts) {
    return projected_newton([&map](const Vec& z) { return map.evaluate(z); }, c, bounds, opts);
}

StepResult cm_step(const ContinuationMap& map, const Vec& c, const Vec& cdot, double h, const NewtonOptions& opts,
                   const BoxBounds& bounds) {
    if (c.size() != map.dim() || cdot.size() != map.dim()) throw InputError("cm_step: dimension mismatch");
    const int m = map.rows();
    auto augmented = [&](const Vec& z) {
        MapEvaluation ev = map.evaluate(z);
        MapEvaluation out;
        out.residual.resize(m + 1);
        out.residual << ev.residual, cdot.dot(z - c) - h;
        out.jacobian.resize(m + 1, map.dim());
        out.jacobian << ev.jacobian, cdot.transpose();
        return out;
    };
    try {
        NewtonResult r = projected_newton(augmented, c + h * cdot, bounds, opts);
        if (!r.converged()) {
            std::ostringstream os;
            os << "corrector stalled at a bound with |r| = " << r.residual_norm;
            throw StepFailure(os.str());
        }
        StepResult s;
        s.point = std::move(r.point);
        s.jacobian = r.jacobian.topRows(m);
        s.residual_norm = r.residual_norm;
        s.iterations = r.iterations;
        return s;
    } catch (const StepFailure&) {
        throw;
    } catch (const Error& e) {
        throw StepFailure(std::string("corrector failed: ") + e.what());
    }
}

GaitPoint cm_step(const ContinuationMap& map, const GaitPoint& c, const Vec& cdot, double h) {
    const StepResult s = cm_step(map, c.to_vector(), cdot, h);
    return GaitPoint::from_vector(s.point, c.x0.n());
}

CurveResult cm_curve(const ContinuationMap& map, const Vec& c0, const Vec& cdot0, const CurveOptions& opts) {
    if (opts.count < 0) throw InputError("curve point count must be nonnegative");
    if (!(std::abs(opts.step) > 0)) throw InputError("curve step must be nonzero");
    if (cdot0.size() != map.dim() || !(cdot0.norm() > 0)) throw InputError("seed tangent must be a nonzero vector");

    CurveResult out;
    Vec c = c0;
    Vec cdot = cdot0.normalized();
    out.points.push_back(c);
    out.tangents.push_back(cdot);
    out.residual_norms.push_back(map.residual(c).norm());
    out.steps.push_back(0.0);

    const double nominal = std::abs(opts.step);
    double sign = opts.step > 0 ? 1.0 : -1.0;
    double mag = nominal;
    int successes = 0;
    while (static_cast<int>(out.points.size()) <= opts.count) {
        StepResult s;
        try {
            s = cm_step(map, c, cdot, sign * mag, opts.newton, opts.bounds);
        } catch (const StepFailure& e) {
            mag *= 0.5;
            successes = 0;
            if (mag < opts.min_step) {
                std::ostringstream os;
                os << "stopped after " << out.points.size() - 1 << " points: step fell below " << opts.min_step
                   << " (" << e.what() << ")";
                out.complete = false;
                out.diagnostic = os.str();
                break;
            }
            continue;
        }
        if (!opts.domain.empty() && !opts.domain.contains(s.point)) {
            out.complete = false;
            out.diagnostic = "stopped: point left the continuation domain";
            break;
        }

        // Tangent at the new point; with a larger null space keep the
        // projection of the previous tangent.
        const Mat N = null_space(s.jacobian, kNullCutoff);
        Vec next;
        if (N.cols() == 1) {
            next = N.col(0);
        } else if (N.cols() > 1) {
            next = N * (N.transpose() * cdot);
            if (next.norm() == 0) next = N.col(0);
            next.normalize();
        } else {
            out.complete = false;
            out.diagnostic = "stopped: empty tangent space";
            break;
        }
        const double prev_sign = sign;
        if (next.dot(cdot) < 0) sign = -sign;
        out.steps.push_back(prev_sign * mag);
        c = std::move(s.point);
        cdot = next;
        out.points.push_back(c);
        out.tangents.push_back(sign * cdot);
        out.residual_norms.push_back(s.residual_norm);

        if (mag < nominal && ++successes >= opts.restore_after) {
            mag = nominal;
            successes = 0;
        }
    }
    return out;
}

}  // namespace gaitcont
