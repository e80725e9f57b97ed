#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mnlb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Utility parameter of the MNL model (true, estimated, or optimistic).
using MnlParameter = Eigen::VectorXd;

// Chosen alternative sentinel for the no-purchase (outside) option.
inline constexpr int kOutside = -1;

// Per-round context: one feature row and one revenue per item.
// Feature rows must have Euclidean norm <= 1 and revenues lie in [-1, 1].
struct ContextSlate {
    int round = 0;
    Matrix features;   // N x d, row i = x_{ti}
    Vector revenues;   // N

    int num_items() const { return static_cast<int>(features.rows()); }
    int dim() const { return static_cast<int>(features.cols()); }

    // Throws DomainError on any invariant violation.
    void validate() const;
};

// Ordered list of distinct item indices, 1 <= size <= K.
struct Assortment {
    std::vector<int> items;

    int size() const { return static_cast<int>(items.size()); }

    // Throws IndexError / DomainError if invalid for a slate with n items.
    void validate(int n, int capacity) const;
};

// Single-trial multinomial response over S_t plus the outside option.
// `chosen` is an item index from the slate, or kOutside.
struct ChoiceOutcome {
    int chosen = kOutside;

    bool is_outside() const { return chosen == kOutside; }
    // y_{ti} for item i in the slate.
    double response(int item) const { return chosen == item ? 1.0 : 0.0; }
    double outside_response() const { return is_outside() ? 1.0 : 0.0; }
};

// Serialized encoding of a choice: outside option is written as N
// (one past the last item index).
int encode_choice(const ChoiceOutcome& outcome, int num_items);

}  // namespace mnlb
