#pragma once

#include "fsmhd/surface.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>

namespace fsmhd {

// Per-horizontal-mode dense solver for flat-interface operators. The block for
// a mode depends only on (k1, k2) through `builder`; blocks are shared between
// modes with equal |xi|^2. Used as the preconditioner of every elliptic solve.
class ModalSolver {
public:
    using Builder = std::function<Eigen::MatrixXd(double k1, double k2)>;

    // pseudo = true factors with a rank-revealing decomposition (singular blocks)
    ModalSolver(GridPtr g, const Builder& builder, bool pseudo = false);

    Field solve(const Field& rhs) const;
    const HalfSpaceGrid& grid() const { return *g_; }

private:
    struct Factor;
    GridPtr g_;
    std::vector<int> mode_key_;
    std::vector<std::shared_ptr<Factor>> factors_;
};

// Process-wide cache of modal solvers keyed by a tag, the grid shape and A.
std::shared_ptr<const ModalSolver> cached_modal(const std::string& tag, const GridPtr& g, double A,
                                                const ModalSolver::Builder& builder, bool pseudo = false);

}  // namespace fsmhd
