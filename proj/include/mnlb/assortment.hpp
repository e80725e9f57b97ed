#pragma once

#include "mnlb/gram.hpp"
#include "mnlb/types.hpp"

namespace mnlb {

// Utility upper bounds z_i = mean estimate + width, reconstructible as such.
struct OptimisticUtilities {
    int round = 0;
    Vector z;        // N
    Vector widths;   // N, each >= 0
};

// z_i = x_i . theta_hat + alpha * ||x_i||_{V^{-1}} for every item in the slate.
OptimisticUtilities optimistic_utilities(const ContextSlate& slate,
                                         const MnlParameter& theta_hat,
                                         const GramMatrix& gram, double alpha);

// Optimistic expected revenue of the assortment under utilities z
// (MNL formula with the outside option, log-sum-exp stabilized).
double optimistic_revenue(const ContextSlate& slate, const Assortment& assortment,
                          const OptimisticUtilities& z);

// Expected MNL revenue of an assortment from raw utilities and revenues.
double revenue_from_utilities(const Vector& utilities, const Vector& revenues,
                              const Assortment& assortment);

// Exact maximizer of the MNL expected revenue over assortments of size <= K.
// Uniform revenues reduce to top-K selection by utility; the general case
// uses bisection on the revenue threshold of the fixed-point
// characterization. Ties break toward the lexicographically smallest list.
Assortment argmax_assortment(const Vector& utilities, const Vector& revenues, int K);

// Exhaustive test oracle over all assortments of size <= K.
// Throws GuardExceededError when C(N, <=K) > 10^6.
Assortment enumerate_oracle(const Vector& utilities, const Vector& revenues, int K);

}  // namespace mnlb
