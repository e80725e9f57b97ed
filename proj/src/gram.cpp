#include "mnlb/gram.hpp"

#include <cmath>

#include "mnlb/errors.hpp"

namespace mnlb {

GramMatrix::GramMatrix(int dim) : v_(Matrix::Zero(dim, dim)) {}

GramMatrix::GramMatrix(Matrix v) : v_(std::move(v)) {
    if (v_.rows() != v_.cols()) throw DomainError("GramMatrix: matrix must be square");
    if ((v_ - v_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw DomainError("GramMatrix: matrix must be symmetric");
    // Symmetrize to kill representation noise.
    v_ = 0.5 * (v_ + v_.transpose().eval());
}

void GramMatrix::add(const Vector& x, double weight) {
    v_.selfadjointView<Eigen::Lower>().rankUpdate(x, weight);
    v_.triangularView<Eigen::StrictlyUpper>() = v_.transpose();
    factor_fresh_ = eigen_fresh_ = false;
}

void GramMatrix::add_slate(const ContextSlate& slate, const Assortment& assortment,
                           double weight) {
    for (int i : assortment.items) add(slate.features.row(i).transpose(), weight);
}

void GramMatrix::add_matrix(const Matrix& m) {
    v_ += 0.5 * (m + m.transpose().eval());
    factor_fresh_ = eigen_fresh_ = false;
}

void GramMatrix::reset() {
    v_.setZero();
    factor_fresh_ = eigen_fresh_ = false;
}

void GramMatrix::refresh_factorization() const {
    if (factor_fresh_) return;
    if (!invertible()) throw SingularDesignError("GramMatrix: singular design");
    ldlt_.compute(v_);
    factor_fresh_ = true;
}

void GramMatrix::refresh_eigen() const {
    if (eigen_fresh_) return;
    Eigen::SelfAdjointEigenSolver<Matrix> es(v_, Eigen::EigenvaluesOnly);
    min_eig_ = es.eigenvalues().minCoeff();
    eigen_fresh_ = true;
}

double GramMatrix::weighted_norm(const Vector& x) const {
    refresh_factorization();
    const double q = x.dot(ldlt_.solve(x));
    return std::sqrt(std::max(q, 0.0));
}

Vector GramMatrix::solve(const Vector& b) const {
    refresh_factorization();
    return ldlt_.solve(b);
}

double GramMatrix::min_eigenvalue() const {
    refresh_eigen();
    return min_eig_;
}

}  // namespace mnlb
