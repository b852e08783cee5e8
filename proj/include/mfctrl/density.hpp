#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfctrl {

// Point of the probability simplex over M vertices.
class Density {
public:
    static constexpr double tol_simplex = 1e-10;

    explicit Density(Eigen::VectorXd v) : v_(std::move(v)) {
        if (v_.size() < 1) throw std::invalid_argument("density: empty vector");
        double s = v_.sum();
        if (std::abs(s - 1.0) > tol_simplex)
            throw std::invalid_argument("density: coordinates sum to " + std::to_string(s));
        for (Eigen::Index i = 0; i < v_.size(); ++i) {
            if (v_[i] < -tol_simplex)
                throw std::invalid_argument("density: negative coordinate " + std::to_string(v_[i]));
            if (v_[i] < 0.0) v_[i] = 0.0;
        }
    }

    static Density from(std::initializer_list<double> xs) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
        Eigen::Index i = 0;
        for (double x : xs) v[i++] = x;
        return Density(std::move(v));
    }

    int size() const { return static_cast<int>(v_.size()); }
    double operator[](int i) const { return v_[i]; }
    const Eigen::VectorXd& vec() const { return v_; }

    double min_coord() const { return v_.minCoeff(); }
    bool interior() const { return v_.minCoeff() > 0.0; }

private:
    Eigen::VectorXd v_;
};

// Piecewise-constant nonnegative edge rates on [t_0, t_K].  The final
// breakpoint may be +inf for time-invariant schedules.
struct ControlSchedule {
    std::vector<double> breakpoints;       // t_0 = 0 < ... < t_K
    std::vector<Eigen::VectorXd> rates;    // one vector of length N_E per interval

    static ControlSchedule constant(Eigen::VectorXd u, double T = std::numeric_limits<double>::infinity()) {
        ControlSchedule s;
        s.breakpoints = {0.0, T};
        s.rates.push_back(std::move(u));
        s.validate();
        return s;
    }

    double horizon() const { return breakpoints.back(); }
    std::size_t intervals() const { return rates.size(); }

    const Eigen::VectorXd& rates_at(double t) const {
        if (t < breakpoints.front() || t > breakpoints.back())
            throw std::domain_error("schedule: time outside coverage");
        // last interval is closed on the right
        std::size_t lo = 0, hi = rates.size();
        while (lo + 1 < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (breakpoints[mid] <= t) lo = mid; else hi = mid;
        }
        return rates[lo];
    }

    double max_rate() const {
        double m = 0.0;
        for (const auto& r : rates) m = std::max(m, r.size() ? r.maxCoeff() : 0.0);
        return m;
    }

    void validate() const {
        if (breakpoints.size() != rates.size() + 1 || rates.empty())
            throw std::invalid_argument("schedule: breakpoint/interval mismatch");
        if (breakpoints.front() != 0.0)
            throw std::invalid_argument("schedule: must start at t=0");
        for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
            if (!(breakpoints[i] < breakpoints[i + 1]))
                throw std::invalid_argument("schedule: breakpoints not increasing");
        for (const auto& r : rates) {
            if (!r.allFinite() && !(r.array() >= 0).all())
                throw std::invalid_argument("schedule: invalid rates");
            if ((r.array() < 0).any())
                throw std::invalid_argument("schedule: negative rate");
        }
    }
};

// Sampled state path with integration metadata.
struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    double step_used = 0.0;
    std::string law_name;

    const Eigen::VectorXd& back() const { return states.back(); }
};

inline std::vector<double> uniform_grid(double t0, double t1, int n) {
    std::vector<double> g(n + 1);
    for (int i = 0; i <= n; ++i) g[i] = t0 + (t1 - t0) * i / n;
    return g;
}

} // namespace mfctrl
