#include "gaitcont/core.hpp"

#include <cmath>
#include <sstream>

namespace gaitcont {

Vec RobotState::stacked() const {
    Vec x(q.size() + qdot.size());
    x << q, qdot;
    return x;
}

RobotState RobotState::from_stacked(const Eigen::Ref<const Vec>& x) {
    if (x.size() % 2 != 0) throw InputError("state vector has odd length");
    const auto n = x.size() / 2;
    return RobotState(x.head(n), x.tail(n));
}

bool RobotState::finite() const { return q.allFinite() && qdot.allFinite(); }

Vec GaitPoint::to_vector() const {
    const auto n = x0.q.size();
    Vec c(2 * n + 1 + mu.size());
    c << x0.q, x0.qdot, tau, mu;
    return c;
}

GaitPoint GaitPoint::from_vector(const Eigen::Ref<const Vec>& c, int n) {
    if (c.size() < 2 * n + 1) throw InputError("gait vector too short");
    GaitPoint g;
    g.x0 = RobotState(c.head(n), c.segment(n, n));
    g.tau = c(2 * n);
    g.mu = c.tail(c.size() - 2 * n - 1);
    return g;
}

void validate_gait_point(const GaitPoint& c, const Dims& dims) {
    if (c.x0.q.size() != dims.n || c.x0.qdot.size() != dims.n)
        throw InputError("gait point state has wrong dimension");
    if (c.mu.size() != dims.k) {
        std::ostringstream os;
        os << "gait point has " << c.mu.size() << " parameters, model expects " << dims.k;
        throw InputError(os.str());
    }
    if (!c.x0.finite() || !std::isfinite(c.tau) || !c.mu.allFinite())
        throw InputError("gait point has non-finite entries");
    if (!(c.tau > 0)) throw InputError("step duration must be positive");
}

namespace {
std::string rank_message(const char* what, int rank, int expected) {
    std::ostringstream os;
    os << what << ": rank " << rank << " < " << expected;
    return os.str();
}
}  // namespace

SingularDynamicsError::SingularDynamicsError(int r, int e, double t)
    : Error(rank_message("singular dynamics", r, e) + " at t=" + std::to_string(t)),
      rank(r), expected(e), time(t) {}

SingularImpactError::SingularImpactError(int r, int e)
    : Error(rank_message("singular impact Jacobian", r, e)), rank(r), expected(e) {}

}  // namespace gaitcont
