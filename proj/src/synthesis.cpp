#include "mfctrl/synthesis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace mfctrl {

LinearizedPair linearized_pair(const Graph& g, const Density& xeq) {
    const int M = g.vertex_count();
    if (xeq.size() != M) throw std::invalid_argument("synthesis: equilibrium size mismatch");
    if (!xeq.interior()) throw std::invalid_argument("synthesis: equilibrium must be interior");
    LinearizedPair p;
    p.A = Eigen::MatrixXd::Zero(M, M);
    p.B = Eigen::MatrixXd::Zero(M, g.edge_count());
    p.xeq = xeq.vec();
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(e);
        p.B(ed.s - 1, e) = -p.xeq[ed.s - 1];
        p.B(ed.t - 1, e) = p.xeq[ed.s - 1];
    }
    return p;
}

EpsilonRegularized epsilon_regularize(const LinearizedPair& pair, double eps) {
    const int M = static_cast<int>(pair.A.rows());
    if (eps < 0.0) throw std::invalid_argument("synthesis: eps must be nonnegative");
    EpsilonRegularized r;
    r.T_hat = Eigen::MatrixXd::Identity(M, M);
    r.T_hat.row(M - 1).setOnes();
    Eigen::MatrixXd T_inv = Eigen::MatrixXd::Identity(M, M);
    T_inv.row(M - 1).setConstant(-1.0);
    T_inv(M - 1, M - 1) = 1.0;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(M, M);
    D(M - 1, M - 1) = -eps;
    r.A_eps = T_inv * D * r.T_hat;
    return r;
}

namespace {

// Parameterization of S(P, Z) = A_eps P + P A_eps^T + B Z + Z^T B^T as a
// linear map of theta = (p_1..p_M, z_1..z_{2 N_E}); each z slot is one
// allowed entry of Z (row e, column S(e)-1 or T(e)-1).
struct LmiBasis {
    std::vector<Eigen::MatrixXd> mats;        // symmetric, one per parameter
    std::vector<std::pair<int, int>> z_slots; // (edge_id, column) per z parameter
    int n_p = 0;

    int size() const { return static_cast<int>(mats.size()); }

    Eigen::MatrixXd assemble(const Eigen::VectorXd& theta) const {
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(mats[0].rows(), mats[0].cols());
        for (int j = 0; j < size(); ++j) S += theta[j] * mats[j];
        return S;
    }
};

LmiBasis build_basis(const Eigen::MatrixXd& A_eps, const Eigen::MatrixXd& B, const Graph& g) {
    const int M = static_cast<int>(A_eps.rows());
    LmiBasis basis;
    basis.n_p = M;
    for (int i = 0; i < M; ++i) {
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(M, M);
        E(i, i) = 1.0;
        basis.mats.push_back(A_eps * E + E * A_eps.transpose());
    }
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(e);
        for (int c : {ed.s - 1, ed.t - 1}) {
            Eigen::MatrixXd Mz = B.col(e) * Eigen::RowVectorXd::Unit(M, c);
            basis.mats.push_back(Mz + Mz.transpose());
            basis.z_slots.emplace_back(e, c);
        }
    }
    return basis;
}

double lambda_max_sym(const Eigen::MatrixXd& S) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly)
        .eigenvalues()
        .maxCoeff();
}

} // namespace

GainCertificate BarrierSolver::solve(const Eigen::MatrixXd& A_eps, const Eigen::MatrixXd& B,
                                     const StructureSpec& spec, double eps,
                                     double tol_margin) const {
    if (!spec.g) throw std::invalid_argument("synthesis: structure spec needs a graph");
    const Graph& g = *spec.g;
    const int M = g.vertex_count();
    if (A_eps.rows() != M || A_eps.cols() != M || B.rows() != M || B.cols() != g.edge_count())
        throw std::invalid_argument("synthesis: matrix dimensions do not match the graph");
    (void)tol_margin;  // feasibility is judged by the caller from the margin

    constexpr double delta = 1e-6;    // lower box for the diagonal of P
    constexpr double p_cap = 1e4;
    constexpr double z_cap = 1e4;
    constexpr double target_margin = -1e-2;
    const double t_cap = std::abs(target_margin) * 1e6 + 10.0;

    const LmiBasis basis = build_basis(A_eps, B, g);
    const int n = basis.size();
    const int n_p = basis.n_p;

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    theta.head(n_p).setOnes();  // P = I, Z = 0
    double t = lambda_max_sym(basis.assemble(theta)) + 1.0;

    // log-barrier value, or nullopt outside the domain
    auto barrier_val = [&](const Eigen::VectorXd& th, double tv) -> std::optional<double> {
        Eigen::MatrixXd Y = tv * Eigen::MatrixXd::Identity(M, M) - basis.assemble(th);
        Eigen::LLT<Eigen::MatrixXd> llt(Y);
        if (llt.info() != Eigen::Success) return std::nullopt;
        double v = -2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        for (int i = 0; i < n_p; ++i) {
            double p = th[i];
            if (p <= delta || p >= p_cap) return std::nullopt;
            v -= std::log(p - delta) + std::log(p_cap - p);
        }
        for (int j = n_p; j < n; ++j) {
            double z = th[j];
            if (std::abs(z) >= z_cap) return std::nullopt;
            v -= std::log(z_cap - z) + std::log(z_cap + z);
        }
        if (tv <= -t_cap) return std::nullopt;
        v -= std::log(tv + t_cap);
        return v;
    };

    int nsteps = 0;
    double mu = 1.0;
    for (int outer = 0; outer < 60; ++outer) {
        for (int it = 0; it < 80; ++it) {
            Eigen::MatrixXd Y = t * Eigen::MatrixXd::Identity(M, M) - basis.assemble(theta);
            Eigen::MatrixXd X = Y.inverse();

            Eigen::VectorXd grad = Eigen::VectorXd::Zero(n + 1);
            Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n + 1, n + 1);
            std::vector<Eigen::MatrixXd> XS(n);
            for (int j = 0; j < n; ++j) {
                XS[j] = X * basis.mats[j];
                grad[j] = XS[j].trace();
            }
            grad[n] = 1.0 / mu - X.trace() - 1.0 / (t + t_cap);
            for (int j = 0; j < n; ++j)
                for (int k = j; k < n; ++k)
                    H(j, k) = H(k, j) = (XS[j].array() * XS[k].transpose().array()).sum();
            Eigen::MatrixXd X2 = X * X;
            for (int j = 0; j < n; ++j)
                H(j, n) = H(n, j) = -(X2 * basis.mats[j]).trace();
            H(n, n) = X2.trace() + 1.0 / ((t + t_cap) * (t + t_cap));

            for (int i = 0; i < n_p; ++i) {
                double p = theta[i];
                grad[i] += -1.0 / (p - delta) + 1.0 / (p_cap - p);
                H(i, i) += 1.0 / ((p - delta) * (p - delta)) + 1.0 / ((p_cap - p) * (p_cap - p));
            }
            for (int j = n_p; j < n; ++j) {
                double z = theta[j];
                grad[j] += 1.0 / (z_cap - z) - 1.0 / (z_cap + z);
                H(j, j) += 1.0 / ((z_cap - z) * (z_cap - z)) + 1.0 / ((z_cap + z) * (z_cap + z));
            }

            H.diagonal().array() += 1e-12;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
            if (ldlt.info() != Eigen::Success) break;
            Eigen::VectorXd d = ldlt.solve(-grad);
            double dec2 = -grad.dot(d);
            if (dec2 < 0.0) {  // indefinite fallback: steepest descent
                d = -grad;
                dec2 = grad.squaredNorm();
            }

            double f0 = t / mu + *barrier_val(theta, t);
            double step = 1.0;
            bool accepted = false;
            Eigen::VectorXd th_new;
            double t_new = 0.0;
            for (int ls = 0; ls < 60; ++ls) {
                th_new = theta + step * d.head(n);
                t_new = t + step * d[n];
                auto bv = barrier_val(th_new, t_new);
                if (bv && t_new / mu + *bv <= f0 - 1e-4 * step * dec2) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
            theta = th_new;
            t = t_new;
            ++nsteps;
            if (0.5 * dec2 < 1e-10) break;
        }
        double lam = lambda_max_sym(basis.assemble(theta));
        if (lam <= target_margin && mu <= 1e-6) break;
        mu *= 0.2;
        if (mu < 1e-9) break;
    }

    double lam = lambda_max_sym(basis.assemble(theta));
    Eigen::VectorXd P_diag = theta.head(n_p);
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(g.edge_count(), M);
    for (int j = n_p; j < n; ++j) {
        auto [e, c] = basis.z_slots[static_cast<std::size_t>(j - n_p)];
        Z(e, c) = theta[j];
    }
    // the inequality is homogeneous in (P, Z): a joint rescale deepens a
    // shallow negative margin without moving K = Z P^{-1}
    if (lam < 0.0 && lam > target_margin) {
        double sc = target_margin / lam;
        P_diag *= sc;
        Z *= sc;
        lam *= sc;
    }

    GainCertificate cert;
    cert.P_diag = P_diag;
    cert.Z = Z;
    cert.K = Z * P_diag.cwiseInverse().asDiagonal();
    cert.eps = eps;
    cert.margin = lam;
    cert.iterations = nsteps;
    cert.feasible = lam < 0.0;
    return cert;
}

GainCertificate solve_structured_lmi(const Eigen::MatrixXd& A_eps, const Eigen::MatrixXd& B,
                                     const StructureSpec& spec, double eps, double tol_margin,
                                     const LmiSolver* solver) {
    const BarrierSolver bundled;
    const LmiSolver& s = solver ? *solver : static_cast<const LmiSolver&>(bundled);
    GainCertificate cert = s.solve(A_eps, B, spec, eps, tol_margin);

    // recompute the margin from the returned certificate; the solver's own
    // report is not trusted
    Eigen::MatrixXd P = cert.P_diag.asDiagonal();
    Eigen::MatrixXd S = A_eps * P + P * A_eps.transpose() + B * cert.Z +
                        cert.Z.transpose() * B.transpose();
    cert.margin = lambda_max_sym(S);
    cert.feasible = cert.margin <= -tol_margin && cert.P_diag.minCoeff() > 0.0;
    if (!cert.feasible) throw SynthesisInfeasible(cert.margin);
    return cert;
}

bool spectrum_relation_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             const Eigen::MatrixXd& A_eps, const Eigen::MatrixXd& F, double eps) {
    auto eigs = [](const Eigen::MatrixXd& m) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
        std::vector<std::complex<double>> v(m.rows());
        for (Eigen::Index i = 0; i < m.rows(); ++i) v[i] = es.eigenvalues()[i];
        return v;
    };
    auto drop_nearest = [](std::vector<std::complex<double>> v, std::complex<double> target) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (std::abs(v[i] - target) < std::abs(v[best] - target)) best = i;
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(best));
        return v;
    };
    auto by_re_im = [](const std::complex<double>& a, const std::complex<double>& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    };
    auto e1 = drop_nearest(eigs(A + B * F), {0.0, 0.0});
    auto e2 = drop_nearest(eigs(A_eps + B * F), {-eps, 0.0});
    std::sort(e1.begin(), e1.end(), by_re_im);
    std::sort(e2.begin(), e2.end(), by_re_im);
    for (std::size_t i = 0; i < e1.size(); ++i)
        if (std::abs(e1[i] - e2[i]) > 1e-6) return false;
    return true;
}

FeedbackLaw gain_to_feedback(const Graph& g, const Eigen::MatrixXd& F, const Density& xeq) {
    const int M = g.vertex_count();
    if (F.rows() != g.edge_count() || F.cols() != M)
        throw std::invalid_argument("synthesis: gain shape mismatch");
    if (xeq.size() != M) throw std::invalid_argument("synthesis: equilibrium size mismatch");
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(e);
        for (int j = 0; j < M; ++j)
            if (j != ed.s - 1 && j != ed.t - 1 && F(e, j) != 0.0)
                throw std::invalid_argument("synthesis: gain not supported on edge endpoints");
    }
    FeedbackLaw law;
    law.kind = FeedbackLaw::Kind::gain;
    law.base_kind = FeedbackLaw::Kind::gain;
    law.xeq = xeq.vec();
    law.gain = -F;   // rate of edge e is (-F (y - xeq))_e
    law.name = "gain";
    return law;
}

} // namespace mfctrl
