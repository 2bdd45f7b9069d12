#include "fsmhd/modal.hpp"

#include <cmath>
#include <mutex>
#include <sstream>

namespace fsmhd {

struct ModalSolver::Factor {
    bool pseudo = false;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;

    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const {
        if (pseudo) return cod.solve(rhs);
        return lu.solve(rhs);
    }
};

ModalSolver::ModalSolver(GridPtr gp, const Builder& builder, bool pseudo) : g_(std::move(gp)) {
    const HalfSpaceGrid& g = *g_;
    std::map<long, int> seen;
    mode_key_.resize(g.nhc());
    for (int m = 0; m < g.nhc(); ++m) {
        long key = std::lround(g.k(0)[m] * g.k(0)[m] + g.k(1)[m] * g.k(1)[m]);
        auto it = seen.find(key);
        if (it == seen.end()) {
            auto f = std::make_shared<Factor>();
            Eigen::MatrixXd B = builder(g.k(0)[m], g.k(1)[m]);
            f->pseudo = pseudo;
            if (pseudo) {
                f->cod.setThreshold(1e-11);
                f->cod.compute(B);
            } else {
                f->lu.compute(B);
            }
            it = seen.emplace(key, int(factors_.size())).first;
            factors_.push_back(f);
        }
        mode_key_[m] = it->second;
    }
}

Field ModalSolver::solve(const Field& rhs) const {
    CField c = g_->fft(rhs);
    const int nhc = g_->nhc();
    const int levels = int(c.size() / nhc);
    Eigen::MatrixXd R(levels, 2);
    for (int m = 0; m < nhc; ++m) {
        for (int l = 0; l < levels; ++l) {
            R(l, 0) = c[Eigen::Index(l) * nhc + m].real();
            R(l, 1) = c[Eigen::Index(l) * nhc + m].imag();
        }
        Eigen::MatrixXd X = factors_[mode_key_[m]]->solve(R);
        for (int l = 0; l < levels; ++l) c[Eigen::Index(l) * nhc + m] = {X(l, 0), X(l, 1)};
    }
    return g_->ifft(c);
}

std::shared_ptr<const ModalSolver> cached_modal(const std::string& tag, const GridPtr& g, double A,
                                                const ModalSolver::Builder& builder, bool pseudo) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const ModalSolver>> cache;
    std::ostringstream key;
    key.precision(17);
    key << tag << '|' << g->d_h() << '|' << g->Ny() << '|' << g->Nz() << '|' << g->L() << '|' << A << '|' << pseudo;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key.str());
    if (it != cache.end()) return it->second;
    auto s = std::make_shared<const ModalSolver>(g, builder, pseudo);
    if (cache.size() > 64) cache.clear();
    cache.emplace(key.str(), s);
    return s;
}

}  // namespace fsmhd
