#include "mnlb/model.hpp"

#include <cmath>
#include <string>

#include "mnlb/assortment.hpp"
#include "mnlb/errors.hpp"

namespace mnlb {

namespace {

Vector assortment_utilities(const ContextSlate& slate, const Assortment& assortment,
                            const MnlParameter& theta) {
    const int n = slate.num_items();
    Vector u(assortment.size());
    for (int j = 0; j < assortment.size(); ++j) {
        const int i = assortment.items[static_cast<std::size_t>(j)];
        if (i < 0 || i >= n)
            throw IndexError("invalid item index " + std::to_string(i));
        u(j) = slate.features.row(i).dot(theta);
    }
    return u;
}

}  // namespace

Vector choice_probabilities(const ContextSlate& slate, const Assortment& assortment,
                            const MnlParameter& theta) {
    const Vector u = assortment_utilities(slate, assortment, theta);
    // Outside option has utility 0; include it in the max for stability.
    const double m = std::max(0.0, u.maxCoeff());
    Vector w = (u.array() - m).exp();
    const double w0 = std::exp(-m);
    const double denom = w0 + w.sum();
    Vector p(assortment.size() + 1);
    p.head(assortment.size()) = w / denom;
    p(assortment.size()) = w0 / denom;
    return p;
}

double expected_revenue(const ContextSlate& slate, const Assortment& assortment,
                        const MnlParameter& theta) {
    const Vector p = choice_probabilities(slate, assortment, theta);
    double rev = 0.0;
    for (int j = 0; j < assortment.size(); ++j)
        rev += slate.revenues(assortment.items[static_cast<std::size_t>(j)]) * p(j);
    return rev;
}

ChoiceOutcome sample_choice(const ContextSlate& slate, const Assortment& assortment,
                            const MnlParameter& theta, double u) {
    if (u < 0.0 || u >= 1.0) throw DomainError("sample_choice: u must lie in [0, 1)");
    const Vector p = choice_probabilities(slate, assortment, theta);
    double cum = 0.0;
    for (int j = 0; j < assortment.size(); ++j) {
        cum += p(j);
        if (u < cum) return ChoiceOutcome{assortment.items[static_cast<std::size_t>(j)]};
    }
    return ChoiceOutcome{kOutside};
}

Assortment oracle_assortment(const ContextSlate& slate, const MnlParameter& theta_star,
                             int capacity) {
    const Vector utilities = slate.features * theta_star;
    return argmax_assortment(utilities, slate.revenues, capacity);
}

}  // namespace mnlb
