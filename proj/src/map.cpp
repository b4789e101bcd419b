#include "gaitcont/map.hpp"

#include "gaitcont/linalg.hpp"

#include <cmath>
#include <sstream>

namespace gaitcont {

std::string to_string(MapKind kind) {
    switch (kind) {
        case MapKind::ConstantControl: return "constant-control";
        case MapKind::ConstantTime: return "constant-time";
        case MapKind::Homotopy: return "homotopy";
        case MapKind::Custom: return "custom";
    }
    return "custom";
}

ContinuationMap::ContinuationMap(MapKind kind, int dim, int rows, Evaluate fn, std::vector<std::string> aux_spec)
    : kind_(kind), dim_(dim), rows_(rows), fn_(std::move(fn)), aux_spec_(std::move(aux_spec)) {
    if (rows_ > dim_) throw InputError("continuation map has more equations than unknowns");
}

std::string ContinuationMap::descriptor() const {
    std::string s = to_string(kind_);
    if (!aux_spec_.empty()) {
        s += " [";
        for (std::size_t i = 0; i < aux_spec_.size(); ++i) s += (i ? "; " : "") + aux_spec_[i];
        s += "]";
    }
    return s;
}

Vec ContinuationMap::residual(const Vec& c) const {
    if (c.size() != dim_) throw InputError("point has wrong dimension for continuation map");
    return fn_(c, false).residual;
}

MapEvaluation ContinuationMap::evaluate(const Vec& c) const {
    if (c.size() != dim_) throw InputError("point has wrong dimension for continuation map");
    return fn_(c, true);
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

ContinuationMap constant_control_map(std::shared_ptr<const HybridModel> model, Vec mu0, FlowOptions opts) {
    const Dims d = model->dims();
    if (mu0.size() != d.k) throw InputError("mu0 has wrong dimension");
    std::vector<std::string> aux;
    for (int i = 0; i < d.k; ++i) aux.push_back("mu[" + std::to_string(i) + "] = " + fmt(mu0(i)));
    const int ns = d.state();
    auto fn = [model, mu0, opts, d, ns](const Vec& c, bool with_jacobian) {
        const GaitPoint g = GaitPoint::from_vector(c, d.n);
        MapEvaluation ev;
        ev.residual.resize(ns + d.k);
        if (with_jacobian) {
            const JacobianResult jr = jacobian(*model, g, opts);
            ev.residual.head(ns) = jr.residual;
            ev.jacobian = Mat::Zero(ns + d.k, d.space());
            ev.jacobian.topRows(ns) = jr.J;
            ev.jacobian.bottomRightCorner(d.k, d.k).setIdentity();
        } else {
            ev.residual.head(ns) = periodicity(*model, g, opts).residual;
        }
        ev.residual.tail(d.k) = g.mu - mu0;
        return ev;
    };
    return ContinuationMap(MapKind::ConstantControl, d.space(), ns + d.k, fn, aux);
}

ContinuationMap constant_time_map(std::shared_ptr<const HybridModel> model, int free_index, double t, Vec upsilon,
                                  FlowOptions opts) {
    const Dims d = model->dims();
    if (free_index < 0 || free_index >= d.k) throw InputError("free parameter index out of range");
    if (upsilon.size() != d.k) throw InputError("upsilon has wrong dimension");
    const int ns = d.state();
    std::vector<int> fixed;
    std::vector<std::string> aux{"tau = " + fmt(t)};
    for (int j = 0; j < d.k; ++j) {
        if (j == free_index) continue;
        fixed.push_back(j);
        aux.push_back("mu[" + std::to_string(j) + "] = " + fmt(upsilon(j)));
    }
    aux.push_back("free mu[" + std::to_string(free_index) + "]");
    const int rows = ns + 1 + static_cast<int>(fixed.size());
    auto fn = [model, t, upsilon, fixed, opts, d, ns, rows](const Vec& c, bool with_jacobian) {
        const GaitPoint g = GaitPoint::from_vector(c, d.n);
        MapEvaluation ev;
        ev.residual.resize(rows);
        if (with_jacobian) {
            const JacobianResult jr = jacobian(*model, g, opts);
            ev.residual.head(ns) = jr.residual;
            ev.jacobian = Mat::Zero(rows, d.space());
            ev.jacobian.topRows(ns) = jr.J;
            ev.jacobian(ns, ns) = 1.0;
            for (std::size_t r = 0; r < fixed.size(); ++r) ev.jacobian(ns + 1 + r, ns + 1 + fixed[r]) = 1.0;
        } else {
            ev.residual.head(ns) = periodicity(*model, g, opts).residual;
        }
        ev.residual(ns) = g.tau - t;
        for (std::size_t r = 0; r < fixed.size(); ++r)
            ev.residual(ns + 1 + r) = g.mu(fixed[r]) - upsilon(fixed[r]);
        return ev;
    };
    return ContinuationMap(MapKind::ConstantTime, d.space(), rows, fn, aux);
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& c, double rel_step) {
    Mat J;
    for (int j = 0; j < c.size(); ++j) {
        const double delta = rel_step * std::max(1.0, std::abs(c(j)));
        Vec cp = c, cm = c;
        cp(j) += delta;
        cm(j) -= delta;
        const Vec col = (f(cp) - f(cm)) / (2 * delta);
        if (j == 0) J.resize(col.size(), c.size());
        J.col(j) = col;
    }
    return J;
}

ContinuationMap custom_map(int dim, int rows, std::function<Vec(const Vec&)> residual,
                           std::function<Mat(const Vec&)> jac, std::vector<std::string> aux_spec) {
    auto fn = [residual, jac](const Vec& c, bool with_jacobian) {
        MapEvaluation ev;
        ev.residual = residual(c);
        if (with_jacobian) ev.jacobian = jac ? jac(c) : fd_jacobian(residual, c);
        return ev;
    };
    return ContinuationMap(MapKind::Custom, dim, rows, fn, std::move(aux_spec));
}

Mat tangent_basis(const ContinuationMap& map, const Vec& c) {
    const Mat N = null_space(map.evaluate(c).jacobian, kNullCutoff);
    if (N.cols() == 0) throw NoTangentError("null space of the continuation map Jacobian is empty");
    return N;
}

Mat tangent_basis(const HybridModel& model, const GaitPoint& c, const ContinuationMap& map) {
    validate_gait_point(c, model.dims());
    return tangent_basis(map, c.to_vector());
}

}  // namespace gaitcont
