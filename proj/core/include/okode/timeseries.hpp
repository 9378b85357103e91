#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace okode {

/// An observed trajectory: strictly increasing times plus one p-dimensional
/// observation row per time point. Immutable after construction.
class TimeSeries {
public:
    /// Validates: n >= 2, p >= 1, strictly increasing times, finite entries.
    TimeSeries(Eigen::VectorXd times, Eigen::MatrixXd values);

    const Eigen::VectorXd& times() const noexcept { return times_; }
    const Eigen::MatrixXd& values() const noexcept { return values_; }

    Eigen::Index length() const noexcept { return times_.size(); }
    Eigen::Index dim() const noexcept { return values_.cols(); }

    double t_start() const noexcept { return times_(0); }
    double t_end() const noexcept { return times_(times_.size() - 1); }

private:
    Eigen::VectorXd times_;
    Eigen::MatrixXd values_;
};

/// A set of trajectories of a common system observed from different initial
/// conditions. All members share p and (by construction) the same length.
class TimeSeriesBundle {
public:
    explicit TimeSeriesBundle(std::vector<TimeSeries> series);

    const std::vector<TimeSeries>& series() const noexcept { return series_; }
    const TimeSeries& operator[](std::size_t i) const { return series_.at(i); }
    std::size_t count() const noexcept { return series_.size(); }
    Eigen::Index dim() const noexcept { return series_.front().dim(); }

private:
    std::vector<TimeSeries> series_;
};

/// Reads a `t,x1,...,xp` CSV. Accepts LF or CRLF; reports the offending line
/// number on malformed input.
TimeSeries read_csv(const std::string& path);

/// Writes the same CSV convention with LF line endings and enough digits to
/// round-trip doubles.
void write_csv(const TimeSeries& ts, const std::string& path);

}  // namespace okode
