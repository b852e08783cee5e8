#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "mfctrl/density.hpp"
#include "mfctrl/graph.hpp"

namespace mfctrl {

// Per-edge rate map of the state.  Every kind is decentralized: the rate of
// edge e depends only on the densities at its source and target (plus fixed
// data baked in at construction), which is what rate(e, ys, yt) enforces by
// interface.
struct FeedbackLaw {
    enum class Kind { constant, balance, gain, realized };

    Kind kind = Kind::constant;
    Kind base_kind = Kind::constant;   // underlying law for realized kind
    Eigen::VectorXd xeq;               // target equilibrium (empty for constant)
    Eigen::VectorXd const_rates;       // constant kind
    Eigen::MatrixXd gain;              // N_E x M; rate row applied to (y - xeq)
    std::string name;

    // Signed rate of edge e from the local densities.  For the realized kind
    // this is the nonnegative reweighted rate; ys must be positive then.
    double rate(const Graph& g, int e, double ys, double yt) const;

    // rate() evaluated at a full state vector.
    double rate_at(const Graph& g, int e, const Eigen::VectorXd& y) const {
        const Edge& ed = g.edge(e);
        return rate(g, e, y[ed.s - 1], y[ed.t - 1]);
    }

    Eigen::VectorXd rates_at(const Graph& g, const Eigen::VectorXd& y) const {
        Eigen::VectorXd r(g.edge_count());
        for (int e = 0; e < g.edge_count(); ++e) r[e] = rate_at(g, e, y);
        return r;
    }

    bool decentralized() const { return true; }
    bool nonnegative_kind() const { return kind == Kind::constant || kind == Kind::realized; }

    static const char* kind_name(Kind k);
    static Kind kind_from_name(const std::string& s);
};

// Zero-at-equilibrium bilinear law k_e(y) = xeq_T * y_S - xeq_S * y_T.
// Its closed loop is linear with an irreducible transition rate matrix, so
// the equilibrium is locally exponentially stable on the simplex.
FeedbackLaw balance_law(const Graph& g, const Density& xeq);

// Constant-rate law from a fixed nonnegative rate vector.
FeedbackLaw constant_law(const Graph& g, Eigen::VectorXd rates);

// Jacobian blocks of the closed-loop vector field of balance_law at xeq.
struct Linearization {
    std::vector<Eigen::MatrixXd> A_e;  // one per edge
    Eigen::MatrixXd G;                 // sum of A_e
};
Linearization linearization(const Graph& g, const Density& xeq);

// Eigenstructure report for a transition-rate-style matrix G (1^T G = 0).
struct SpectralCertificate {
    Eigen::MatrixXd G;
    std::vector<std::complex<double>> eigenvalues;  // sorted by descending real part
    int zero_multiplicity = 0;   // eigenvalues with |lambda| <= 1e-9
    double spectral_gap = 0.0;   // max real part among the non-zero cluster
    bool irreducible = false;    // strong connectivity of the off-diagonal support
    bool pass = false;           // simple zero and every other eigenvalue stable
};
SpectralCertificate spectral_certificate(const Eigen::MatrixXd& G);

// Nonnegative reweighting of a signed law on a bidirected graph: the
// positive part of k_e plus the reverse edge's negative part rescaled by
// y_T/y_S, so that the closed-loop vector fields coincide on the interior.
FeedbackLaw rational_realization(const Graph& g, const FeedbackLaw& law);

// Least-squares exponential fit of the convergence error ||x(t) - xeq||_2
// over the window where the error lies in [1e-8, initial/2].
struct DecayFit {
    double M0 = 0.0;
    double lambda = 0.0;
};
DecayFit decay_fit(const Trajectory& traj, const Density& xeq);

} // namespace mfctrl
