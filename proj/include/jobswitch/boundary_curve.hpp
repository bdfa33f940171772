#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace jobswitch {

enum class NodeFlag : std::uint8_t {
    ok = 0,
    capped = 1,  ///< root not found below the cap; value stored as absent
    edge = 2,    ///< root collided with a bracket edge
};

/// A time-indexed switching boundary in dual coordinates.
///
/// Values are positive lambda levels; +infinity marks an absent boundary
/// and 0 is allowed only as a limit value. Between two positive values the
/// curve is linear in log-lambda; next to a zero it is linear in lambda;
/// next to an absent node it is absent.
class BoundaryCurve {
public:
    static constexpr double absent = std::numeric_limits<double>::infinity();

    BoundaryCurve() = default;
    BoundaryCurve(std::vector<double> times, std::vector<double> values,
                  std::vector<NodeFlag> flags = {});

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<NodeFlag>& flags() const { return flags_; }
    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }

    double front_time() const { return times_.front(); }
    double back_time() const { return times_.back(); }
    bool covers(double t0, double t1) const;

    /// Interpolated value; throws ValidationError outside the time range.
    double operator()(double t) const;

    /// Interpolation with a caller-maintained segment hint for monotone sweeps.
    double at(double t, std::size_t& hint) const;

private:
    double blend(std::size_t k, double t) const;

    std::vector<double> times_;
    std::vector<double> values_;
    std::vector<NodeFlag> flags_;
};

/// The two switching boundaries: Lambda0 (0 -> 1) and Lambda1 (1 -> 0).
struct BoundaryPair {
    BoundaryCurve lambda0;
    BoundaryCurve lambda1;
};

}  // namespace jobswitch
