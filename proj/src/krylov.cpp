#include "fsmhd/krylov.hpp"

#include <cmath>
#include <vector>

namespace fsmhd {

KrylovResult gmres(const LinOp& A, const LinOp& M, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol,
                   int max_iter, int restart, double atol) {
    KrylovResult res;
    const double bnorm = b.norm();
    if (x.size() != b.size()) x = Eigen::VectorXd::Zero(b.size());
    if (bnorm == 0.0) {
        x.setZero();
        res.converged = true;
        return res;
    }
    const double target = std::max(tol * bnorm, atol);
    Eigen::VectorXd r = b - A(x);
    double beta = r.norm();
    int total = 0;
    while (total < max_iter) {
        if (beta <= target) {
            res.converged = true;
            break;
        }
        const int m = restart;
        std::vector<Eigen::VectorXd> V;
        std::vector<Eigen::VectorXd> Z;
        V.reserve(m + 1);
        Z.reserve(m);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
        Eigen::VectorXd cs = Eigen::VectorXd::Zero(m), sn = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd s = Eigen::VectorXd::Zero(m + 1);
        s[0] = beta;
        V.push_back(r / beta);
        int k = 0;
        for (; k < m && total < max_iter; ++k, ++total) {
            Z.push_back(M(V[k]));
            Eigen::VectorXd w = A(Z[k]);
            for (int j = 0; j <= k; ++j) {
                H(j, k) = w.dot(V[j]);
                w -= H(j, k) * V[j];
            }
            // one pass of reorthogonalisation keeps long cycles stable
            for (int j = 0; j <= k; ++j) {
                double c = w.dot(V[j]);
                H(j, k) += c;
                w -= c * V[j];
            }
            H(k + 1, k) = w.norm();
            for (int j = 0; j < k; ++j) {
                double t = cs[j] * H(j, k) + sn[j] * H(j + 1, k);
                H(j + 1, k) = -sn[j] * H(j, k) + cs[j] * H(j + 1, k);
                H(j, k) = t;
            }
            double d = std::hypot(H(k, k), H(k + 1, k));
            cs[k] = d == 0.0 ? 1.0 : H(k, k) / d;
            sn[k] = d == 0.0 ? 0.0 : H(k + 1, k) / d;
            double hk1 = H(k + 1, k);
            H(k, k) = d;
            H(k + 1, k) = 0.0;
            s[k + 1] = -sn[k] * s[k];
            s[k] = cs[k] * s[k];
            if (hk1 != 0.0) V.push_back(w / hk1);
            if (std::abs(s[k + 1]) <= target || hk1 == 0.0) {
                ++k;
                ++total;
                break;
            }
        }
        Eigen::VectorXd y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(s.head(k));
        for (int j = 0; j < k; ++j) x += y[j] * Z[j];
        r = b - A(x);
        double nb = r.norm();
        if (nb > 0.999 * beta && nb > target) {
            // no progress over a full cycle
            beta = nb;
            break;
        }
        beta = nb;
    }
    res.iterations = total;
    res.rel_residual = beta / bnorm;
    res.converged = beta <= target;
    return res;
}

}  // namespace fsmhd
