#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qoc/state.hpp"

namespace qoc {

/// Partition of [0, T] into segments of positive duration.
/// boundary(j) gives t_j = sum of the first j durations, so boundary(0) = 0
/// and boundary(segments()) = T.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> durations) : dts_(std::move(durations)) {
        if (dts_.empty())
            throw ContractViolation("TimeGrid: need at least one segment");
        bounds_.resize(dts_.size() + 1);
        bounds_[0] = 0.0;
        for (std::size_t j = 0; j < dts_.size(); ++j) {
            if (!(dts_[j] > 0.0))
                throw ContractViolation("TimeGrid: nonpositive duration at segment " +
                                        std::to_string(j));
            bounds_[j + 1] = bounds_[j] + dts_[j];
        }
    }

    static TimeGrid uniform(double total, std::size_t n) {
        if (n == 0 || !(total > 0.0))
            throw ContractViolation("TimeGrid::uniform: need total > 0 and n >= 1");
        return TimeGrid(std::vector<double>(n, total / static_cast<double>(n)));
    }

    std::size_t segments() const { return dts_.size(); }
    double dt(std::size_t j) const { return dts_[j]; }
    const std::vector<double>& durations() const { return dts_; }
    double boundary(std::size_t j) const { return bounds_[j]; }
    double total() const { return bounds_.back(); }

    /// Segment index containing time t in [0, T]; right-closed on the last segment.
    std::size_t segment_at(double t) const {
        std::size_t lo = 0, hi = dts_.size();
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (t < bounds_[mid]) hi = mid; else lo = mid;
        }
        return lo;
    }

private:
    std::vector<double> dts_;
    std::vector<double> bounds_;
};

inline bool same_grid(const TimeGrid& a, const TimeGrid& b) {
    if (a.segments() != b.segments()) return false;
    for (std::size_t j = 0; j < a.segments(); ++j)
        if (a.dt(j) != b.dt(j)) return false;
    return true;
}

/// One real sample per grid segment.
struct GridSeries {
    std::vector<double> values;
    TimeGrid grid;

    GridSeries(std::vector<double> v, TimeGrid g) : values(std::move(v)), grid(std::move(g)) {
        if (values.size() != grid.segments())
            throw ContractViolation("GridSeries: sample count does not match grid");
    }
};

/// <f>_T = (1/T) sum f_j dt_j
inline double time_average(const GridSeries& s) {
    double acc = 0.0;
    for (std::size_t j = 0; j < s.values.size(); ++j) acc += s.values[j] * s.grid.dt(j);
    return acc / s.grid.total();
}

inline double covariance(const GridSeries& f, const GridSeries& g) {
    if (!same_grid(f.grid, g.grid))
        throw ContractViolation("covariance: series on different grids");
    double fg = 0.0;
    for (std::size_t j = 0; j < f.values.size(); ++j)
        fg += f.values[j] * g.values[j] * f.grid.dt(j);
    fg /= f.grid.total();
    return fg - time_average(f) * time_average(g);
}

/// Std(Q)/<Q>_T with time-weighted moments. Empty when the mean is too close
/// to zero for the ratio to mean anything (|<Q>_T| <= 1e-14 * Std(Q) scale floor).
inline std::optional<double> sigma_q(const GridSeries& q) {
    const double mean = time_average(q);
    double var = covariance(q, q);
    if (var < 0.0) var = 0.0;
    const double sd = std::sqrt(var);
    if (std::abs(mean) <= 1e-14 * std::max(1.0, sd))
        return std::nullopt;
    return sd / std::abs(mean);
}

}  // namespace qoc
