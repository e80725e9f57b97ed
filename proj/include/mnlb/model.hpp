#pragma once

#include "mnlb/types.hpp"

namespace mnlb {

// Choice probabilities over the assortment plus the outside option.
// Entry j < |S| is p(items[j] | S, theta); the last entry is p(0 | S, theta).
// Softmax denominator is log-sum-exp stabilized; the outside option has
// utility 0 (weight 1).
Vector choice_probabilities(const ContextSlate& slate, const Assortment& assortment,
                            const MnlParameter& theta);

// sum_{i in S} r_i * p(i | S, theta).
double expected_revenue(const ContextSlate& slate, const Assortment& assortment,
                        const MnlParameter& theta);

// Inverse-CDF sample of the multinomial over (items in assortment order,
// then outside option). Deterministic given u in [0, 1).
ChoiceOutcome sample_choice(const ContextSlate& slate, const Assortment& assortment,
                            const MnlParameter& theta, double u);

// Offline optimal assortment under the true parameter (regret accounting
// only). Delegates to the exact assortment maximizer; ties break toward the
// lexicographically smallest index list.
Assortment oracle_assortment(const ContextSlate& slate, const MnlParameter& theta_star,
                             int capacity);

}  // namespace mnlb
