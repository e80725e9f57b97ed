#pragma once

#include <cstddef>
#include <vector>

#include "mnlb/gram.hpp"
#include "mnlb/types.hpp"

namespace mnlb {

struct SampleRecord {
    ContextSlate slate;
    Assortment assortment;
    ChoiceOutcome outcome;
};

// Observed (slate, assortment, response) history. Rounds strictly increasing.
class SampleLog {
public:
    void append(SampleRecord record);

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const SampleRecord& operator[](std::size_t i) const { return records_[i]; }

    auto begin() const { return records_.begin(); }
    auto end() const { return records_.end(); }

    // Sub-log of the records whose round is in `rounds`.
    SampleLog restrict(const std::vector<int>& rounds) const;
    // Sub-log of records [begin, end).
    SampleLog slice(std::size_t begin, std::size_t end) const;

    // Gram matrix of all offered features in the log.
    GramMatrix design_gram() const;

private:
    std::vector<SampleRecord> records_;
};

struct MleReport {
    MnlParameter theta_hat;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Population quantities the confidence theory assumes known.
struct ConfidenceConfig {
    double kappa = 0.25;   // lower bound on p_i * p_0, in (0, 1]
    double sigma0 = 0.2;   // lower bound on lambda_min of the context second moment
    double delta = 0.05;   // failure probability

    void validate() const;
};

// Negative log-likelihood sum_t f_t(theta) of the MNL responses.
double mnl_neg_log_likelihood(const SampleLog& log, const MnlParameter& theta);

// Exact gradient: sum_t sum_{i in S_t} (p_t(i) - y_ti) x_ti.
Vector mnl_gradient(const SampleLog& log, const MnlParameter& theta);

// Hessian of the negative log-likelihood (convex objective).
Matrix mnl_hessian(const SampleLog& log, const MnlParameter& theta);

// Damped Newton with backtracking line search (halving, max 30 halvings).
// Throws SingularDesignError when the design Gram has lambda_min <= 1e-12.
// A non-converged report is a soft failure; callers keep their previous
// estimate.
// check_design=false skips the Gram scan for callers that maintain the
// design Gram incrementally and have verified invertibility themselves.
MleReport mle_fit(const SampleLog& log, const MnlParameter& init, double tol = 1e-10,
                  int max_iter = 100, bool check_design = true);

// Closed-form minimizer of the online Newton objective:
// theta_prev - V^{-1} G, with V the kappa/2-weighted accumulator.
MnlParameter online_newton_step(const MnlParameter& theta_prev,
                                const GramMatrix& gram_next,
                                const Vector& gradient_prev);

// Confidence widths.
double radius_ucb(double t, int d, double kappa);
double radius_online(double t, int d, int K, double kappa, double T0);
double radius_dbl(double tau_k, int N, double kappa);
double radius_sup(double T, int N, double kappa);

// Random-sampling budget q_k for the doubling schedule,
// (288 / (K sigma0 kappa^4)) (4 d^2 + log(tau_k^2 N / 4)).
double dbl_sampling_budget(double tau_k, int N, int K, int d, double sigma0,
                           double kappa);

// (5/kappa) sqrt(log(1/delta)) ||x||_{V^{-1}}.
double prediction_error_bound(const GramMatrix& gram, const Vector& x, double kappa,
                              double delta);

}  // namespace mnlb
