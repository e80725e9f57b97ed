#include "mnlb/assortment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mnlb/errors.hpp"

namespace mnlb {

namespace {

// exp() guard: beyond this the weight saturates instead of overflowing.
constexpr double kMaxUtility = 690.0;

Vector preference_weights(const Vector& utilities) {
    return utilities.array().min(kMaxUtility).exp();
}

double revenue_of_selection(const std::vector<int>& items, const Vector& weights,
                            const Vector& revenues) {
    double num = 0.0, denom = 1.0;
    for (int i : items) {
        num += revenues(i) * weights(i);
        denom += weights(i);
    }
    return num / denom;
}

Assortment best_singleton(const Vector& weights, const Vector& revenues) {
    int best = 0;
    double best_rev = revenues(0) * weights(0) / (1.0 + weights(0));
    for (int i = 1; i < weights.size(); ++i) {
        const double rev = revenues(i) * weights(i) / (1.0 + weights(i));
        if (rev > best_rev) {
            best = i;
            best_rev = rev;
        }
    }
    return Assortment{{best}};
}

// Top <= K items by score w_i (r_i - lambda), positive scores only,
// ties toward smaller index. Returned items sorted ascending.
std::vector<int> select_at_threshold(const Vector& weights, const Vector& revenues,
                                     double lambda, int K) {
    std::vector<std::pair<double, int>> scored;
    for (int i = 0; i < weights.size(); ++i) {
        const double s = weights(i) * (revenues(i) - lambda);
        if (s > 0.0) scored.emplace_back(s, i);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    if (static_cast<int>(scored.size()) > K) scored.resize(static_cast<std::size_t>(K));
    std::vector<int> items;
    items.reserve(scored.size());
    for (const auto& [s, i] : scored) items.push_back(i);
    std::sort(items.begin(), items.end());
    return items;
}

double sum_top_scores(const Vector& weights, const Vector& revenues, double lambda,
                      int K) {
    std::vector<double> scores;
    for (int i = 0; i < weights.size(); ++i) {
        const double s = weights(i) * (revenues(i) - lambda);
        if (s > 0.0) scores.push_back(s);
    }
    std::sort(scores.begin(), scores.end(), std::greater<>());
    double total = 0.0;
    const int take = std::min<int>(K, static_cast<int>(scores.size()));
    for (int j = 0; j < take; ++j) total += scores[static_cast<std::size_t>(j)];
    return total;
}

bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

OptimisticUtilities optimistic_utilities(const ContextSlate& slate,
                                         const MnlParameter& theta_hat,
                                         const GramMatrix& gram, double alpha) {
    const int n = slate.num_items();
    OptimisticUtilities out;
    out.round = slate.round;
    out.z.resize(n);
    out.widths.resize(n);
    for (int i = 0; i < n; ++i) {
        const Vector x = slate.features.row(i).transpose();
        out.widths(i) = alpha * gram.weighted_norm(x);
        out.z(i) = x.dot(theta_hat) + out.widths(i);
    }
    return out;
}

double revenue_from_utilities(const Vector& utilities, const Vector& revenues,
                              const Assortment& assortment) {
    // Stabilized: divide numerator and denominator by e^m.
    double m = 0.0;
    for (int i : assortment.items) m = std::max(m, std::min(utilities(i), kMaxUtility));
    double num = 0.0, denom = std::exp(-m);
    for (int i : assortment.items) {
        const double w = std::exp(std::min(utilities(i), kMaxUtility) - m);
        num += revenues(i) * w;
        denom += w;
    }
    return num / denom;
}

double optimistic_revenue(const ContextSlate& slate, const Assortment& assortment,
                          const OptimisticUtilities& z) {
    return revenue_from_utilities(z.z, slate.revenues, assortment);
}

Assortment argmax_assortment(const Vector& utilities, const Vector& revenues, int K) {
    if (K < 1) throw DomainError("argmax_assortment: K must be >= 1");
    const int n = static_cast<int>(utilities.size());
    const int k = std::min(K, n);
    const Vector weights = preference_weights(utilities);

    const double r_min = revenues.minCoeff();
    const double r_max = revenues.maxCoeff();

    if (r_min == r_max) {
        // Uniform revenues: objective is r * W/(1+W), monotone in the total
        // weight W, so positive r reduces to top-K by utility.
        if (r_max > 0.0) {
            std::vector<int> order(static_cast<std::size_t>(n));
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                if (utilities(a) != utilities(b)) return utilities(a) > utilities(b);
                return a < b;
            });
            order.resize(static_cast<std::size_t>(k));
            std::sort(order.begin(), order.end());
            return Assortment{std::move(order)};
        }
        // r == 0: every assortment is worth 0; r < 0: the optimum is the
        // least-weight singleton. Both are degenerate-instance fallbacks.
        return best_singleton(weights, revenues);
    }

    if (r_max <= 0.0 || sum_top_scores(weights, revenues, 0.0, k) <= 0.0)
        return best_singleton(weights, revenues);

    // Bisection on the revenue threshold: R(S) >= lambda iff
    // sum_{i in S} w_i (r_i - lambda) >= lambda, and g(lambda) - lambda is
    // strictly decreasing with a root at the optimal revenue.
    double lo = 0.0, hi = r_max;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sum_top_scores(weights, revenues, mid, k) > mid)
            lo = mid;
        else
            hi = mid;
    }

    std::vector<int> best;
    double best_rev = -std::numeric_limits<double>::infinity();
    for (const double lambda : {lo, hi}) {
        std::vector<int> sel = select_at_threshold(weights, revenues, lambda, k);
        if (sel.empty()) continue;
        const double rev = revenue_of_selection(sel, weights, revenues);
        if (rev > best_rev || (rev == best_rev && lex_less(sel, best))) {
            best = std::move(sel);
            best_rev = rev;
        }
    }
    if (best.empty()) return best_singleton(weights, revenues);
    return Assortment{std::move(best)};
}

Assortment enumerate_oracle(const Vector& utilities, const Vector& revenues, int K) {
    const int n = static_cast<int>(utilities.size());
    const int k_max = std::min(K, n);

    double count = 0.0;
    {
        double c = 1.0;
        for (int k = 1; k <= k_max; ++k) {
            c *= static_cast<double>(n - k + 1) / k;
            count += c;
            if (count > 1e6) throw GuardExceededError("enumerate_oracle: C(N, <=K) > 1e6");
        }
    }

    const Vector weights = preference_weights(utilities);
    std::vector<int> best;
    double best_rev = -std::numeric_limits<double>::infinity();

    for (int k = 1; k <= k_max; ++k) {
        std::vector<int> comb(static_cast<std::size_t>(k));
        std::iota(comb.begin(), comb.end(), 0);
        for (;;) {
            const double rev = revenue_of_selection(comb, weights, revenues);
            if (rev > best_rev || (rev == best_rev && lex_less(comb, best))) {
                best = comb;
                best_rev = rev;
            }
            // next lexicographic combination
            int i = k - 1;
            while (i >= 0 && comb[static_cast<std::size_t>(i)] == n - k + i) --i;
            if (i < 0) break;
            ++comb[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < k; ++j)
                comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    return Assortment{std::move(best)};
}

}  // namespace mnlb
