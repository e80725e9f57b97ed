#include "mnlb/types.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "mnlb/errors.hpp"

namespace mnlb {

namespace {
constexpr double kNormTol = 1e-9;
}

void ContextSlate::validate() const {
    if (num_items() < 1 || dim() < 1)
        throw DomainError("ContextSlate: need N >= 1 and d >= 1");
    if (revenues.size() != num_items())
        throw DomainError("ContextSlate: revenues size must match item count");
    for (int i = 0; i < num_items(); ++i) {
        if (!features.row(i).allFinite())
            throw DomainError("ContextSlate: non-finite feature entry");
        if (features.row(i).norm() > 1.0 + kNormTol)
            throw DomainError("ContextSlate: feature norm exceeds 1 at item " +
                              std::to_string(i));
        const double r = revenues(i);
        if (!std::isfinite(r) || std::abs(r) > 1.0 + kNormTol)
            throw DomainError("ContextSlate: |revenue| exceeds 1 at item " +
                              std::to_string(i));
    }
}

void Assortment::validate(int n, int capacity) const {
    if (items.empty()) throw DomainError("Assortment: must contain at least one item");
    if (size() > capacity)
        throw DomainError("Assortment: size exceeds capacity K");
    std::unordered_set<int> seen;
    for (int idx : items) {
        if (idx < 0 || idx >= n)
            throw IndexError("Assortment: item index out of range: " + std::to_string(idx));
        if (!seen.insert(idx).second)
            throw DomainError("Assortment: duplicate item index: " + std::to_string(idx));
    }
}

int encode_choice(const ChoiceOutcome& outcome, int num_items) {
    return outcome.is_outside() ? num_items : outcome.chosen;
}

}  // namespace mnlb
