#include "jobswitch/boundary_curve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jobswitch/errors.hpp"

namespace jobswitch {

BoundaryCurve::BoundaryCurve(std::vector<double> times, std::vector<double> values,
                             std::vector<NodeFlag> flags)
    : times_(std::move(times)), values_(std::move(values)), flags_(std::move(flags)) {
    if (times_.size() != values_.size() || times_.empty())
        throw ValidationError("boundary curve needs matching, non-empty times and values");
    if (flags_.empty()) flags_.assign(times_.size(), NodeFlag::ok);
    if (flags_.size() != times_.size()) throw ValidationError("boundary curve flag count mismatch");
    for (std::size_t k = 1; k < times_.size(); ++k)
        if (!(times_[k] > times_[k - 1]))
            throw ValidationError("boundary curve times must be strictly ascending");
    for (double v : values_)
        if (!(v >= 0.0)) throw ValidationError("boundary curve values must be >= 0 or absent");
}

bool BoundaryCurve::covers(double t0, double t1) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(times_.back()));
    return !times_.empty() && times_.front() <= t0 + tol && times_.back() >= t1 - tol;
}

double BoundaryCurve::blend(std::size_t k, double t) const {
    const double a = values_[k];
    const double b = values_[k + 1];
    const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
    if (w <= 0.0) return a;
    if (w >= 1.0) return b;
    if (std::isinf(a) || std::isinf(b)) return absent;
    if (a == 0.0 || b == 0.0) return a + w * (b - a);
    return std::exp(std::log(a) + w * (std::log(b) - std::log(a)));
}

double BoundaryCurve::operator()(double t) const {
    std::size_t hint = 0;
    return at(t, hint);
}

double BoundaryCurve::at(double t, std::size_t& hint) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(times_.back()));
    if (t < times_.front() - tol || t > times_.back() + tol)
        throw ValidationError("boundary curve evaluated outside its time range at t = " +
                              std::to_string(t));
    if (times_.size() == 1) return values_.front();
    t = std::clamp(t, times_.front(), times_.back());
    if (hint + 1 >= times_.size() || times_[hint] > t) hint = 0;
    if (times_[hint + 1] < t) {
        if (hint + 2 < times_.size() && times_[hint + 2] >= t) {
            ++hint;
        } else {
            auto it = std::upper_bound(times_.begin(), times_.end(), t);
            hint = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - times_.begin()) - 1));
            hint = std::min(hint, times_.size() - 2);
        }
    }
    return blend(hint, t);
}

}  // namespace jobswitch
