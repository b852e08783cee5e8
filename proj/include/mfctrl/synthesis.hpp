#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>

#include "mfctrl/density.hpp"
#include "mfctrl/feedback.hpp"
#include "mfctrl/graph.hpp"

namespace mfctrl {

constexpr double default_epsilon = 0.1;
constexpr double default_tol_margin = 1e-6;

struct SynthesisInfeasible : std::runtime_error {
    double best_margin;
    explicit SynthesisInfeasible(double m)
        : std::runtime_error("structured LMI infeasible"), best_margin(m) {}
};

// Linearization of the forward equation about xeq, controls as inputs:
// A = 0, column e of B equals B_e xeq.
struct LinearizedPair {
    Eigen::MatrixXd A, B;
    Eigen::VectorXd xeq;
};
LinearizedPair linearized_pair(const Graph& g, const Density& xeq);

// Move the uncontrollable mass-conservation mode from 0 to -eps: T_hat is
// identity with last row replaced by 1^T; A_eps = T_hat^{-1} diag(0,..,-eps) T_hat.
// Always 1^T A_eps = -eps 1^T.
struct EpsilonRegularized {
    Eigen::MatrixXd A_eps, T_hat;
};
EpsilonRegularized epsilon_regularize(const LinearizedPair& pair, double eps);

// Structure constraints: P diagonal positive definite, Z row e nonzero only
// at columns S(e) and T(e).
struct StructureSpec {
    const Graph* g = nullptr;
};

struct GainCertificate {
    Eigen::VectorXd P_diag;
    Eigen::MatrixXd Z;        // N_E x M, structured
    Eigen::MatrixXd K;        // Z P^{-1}; A_eps + B K is Hurwitz
    double eps = 0.0;
    double margin = 0.0;      // largest eigenvalue of A_eps P + P A_eps^T + B Z + Z^T B^T
    int iterations = 0;
    bool feasible = false;

    // Gain for the convention u = -F (y - xeq); composing gain_to_feedback
    // with this yields the stabilizing closed loop.
    Eigen::MatrixXd feedback_gain() const { return -K; }
};

// Pluggable feasibility solver for the structured inequality
// A_eps P + P A_eps^T + B Z + Z^T B^T < -tol_margin I.
class LmiSolver {
public:
    virtual ~LmiSolver() = default;
    virtual GainCertificate solve(const Eigen::MatrixXd& A_eps, const Eigen::MatrixXd& B,
                                  const StructureSpec& spec, double eps, double tol_margin) const = 0;
};

// Bundled deterministic log-barrier Newton solver (minimize the slack t with
// S(P,Z) <= t I plus box barriers on the parameters).
class BarrierSolver final : public LmiSolver {
public:
    GainCertificate solve(const Eigen::MatrixXd& A_eps, const Eigen::MatrixXd& B,
                          const StructureSpec& spec, double eps, double tol_margin) const override;
};

// Solve with the bundled solver (or a caller-provided one); throws
// SynthesisInfeasible with the best margin found when no certificate exists.
GainCertificate solve_structured_lmi(const Eigen::MatrixXd& A_eps, const Eigen::MatrixXd& B,
                                     const StructureSpec& spec,
                                     double eps = default_epsilon,
                                     double tol_margin = default_tol_margin,
                                     const LmiSolver* solver = nullptr);

// The regularized and original pairs share their controllable spectrum:
// eigenvalues of A + BF minus the one nearest 0 match those of A_eps + BF
// minus the one nearest -eps, within 1e-6 after sorting.
bool spectrum_relation_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             const Eigen::MatrixXd& A_eps, const Eigen::MatrixXd& F, double eps);

// Law k_e(y) = (-F (y - xeq))_e for a gain respecting the edge structure.
FeedbackLaw gain_to_feedback(const Graph& g, const Eigen::MatrixXd& F, const Density& xeq);

} // namespace mfctrl
