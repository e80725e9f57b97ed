#pragma once

#include <Eigen/Dense>

#include "mnlb/types.hpp"

namespace mnlb {

// Symmetric PSD accumulator of (optionally weighted) feature outer products,
// V = sum_t sum_{i in S_t} w * x_{ti} x_{ti}^T.
//
// Weighted-norm queries go through a cached LDLT factorization; the cache is
// refreshed lazily after updates. Single writer; snapshots (copies) may be
// read concurrently.
class GramMatrix {
public:
    explicit GramMatrix(int dim);
    explicit GramMatrix(Matrix v);

    int dim() const { return static_cast<int>(v_.rows()); }
    const Matrix& matrix() const { return v_; }

    void add(const Vector& x, double weight = 1.0);
    void add_slate(const ContextSlate& slate, const Assortment& assortment,
                   double weight = 1.0);
    void add_matrix(const Matrix& m);
    void reset();

    // sqrt(x^T V^{-1} x). Throws SingularDesignError when lambda_min <= 1e-12.
    double weighted_norm(const Vector& x) const;

    // V^{-1} b via the cached factorization. Throws SingularDesignError.
    Vector solve(const Vector& b) const;

    // Smallest eigenvalue (symmetric tridiagonalization path).
    double min_eigenvalue() const;

    bool invertible() const { return min_eigenvalue() > 1e-12; }

private:
    void refresh_factorization() const;
    void refresh_eigen() const;

    Matrix v_;
    mutable Eigen::LDLT<Matrix> ldlt_;
    mutable double min_eig_ = 0.0;
    mutable bool factor_fresh_ = false;
    mutable bool eigen_fresh_ = false;
};

}  // namespace mnlb
