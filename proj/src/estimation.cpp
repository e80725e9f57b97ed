#include "mnlb/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "mnlb/errors.hpp"
#include "mnlb/model.hpp"

namespace mnlb {

void SampleLog::append(SampleRecord record) {
    if (!records_.empty() && record.slate.round <= records_.back().slate.round)
        throw DomainError("SampleLog: rounds must be strictly increasing");
    record.assortment.validate(record.slate.num_items(), record.assortment.size());
    records_.push_back(std::move(record));
}

SampleLog SampleLog::restrict(const std::vector<int>& rounds) const {
    SampleLog out;
    for (const auto& rec : records_)
        if (std::find(rounds.begin(), rounds.end(), rec.slate.round) != rounds.end())
            out.records_.push_back(rec);
    return out;
}

SampleLog SampleLog::slice(std::size_t begin, std::size_t end) const {
    SampleLog out;
    end = std::min(end, records_.size());
    for (std::size_t i = begin; i < end; ++i) out.records_.push_back(records_[i]);
    return out;
}

GramMatrix SampleLog::design_gram() const {
    if (records_.empty()) throw DomainError("SampleLog: empty log has no design");
    GramMatrix gram(records_.front().slate.dim());
    for (const auto& rec : records_) gram.add_slate(rec.slate, rec.assortment);
    return gram;
}

void ConfidenceConfig::validate() const {
    if (!(kappa > 0.0 && kappa <= 1.0)) throw ConfigError("kappa must lie in (0, 1]");
    if (!(sigma0 > 0.0)) throw ConfigError("sigma0 must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
}

double mnl_neg_log_likelihood(const SampleLog& log, const MnlParameter& theta) {
    double total = 0.0;
    for (const auto& rec : log) {
        const Vector p = choice_probabilities(rec.slate, rec.assortment, theta);
        // f_t = -sum_i y_ti log p_i, including the outside option.
        if (rec.outcome.is_outside()) {
            total -= std::log(p(rec.assortment.size()));
        } else {
            for (int j = 0; j < rec.assortment.size(); ++j) {
                if (rec.assortment.items[static_cast<std::size_t>(j)] == rec.outcome.chosen) {
                    total -= std::log(p(j));
                    break;
                }
            }
        }
    }
    return total;
}

Vector mnl_gradient(const SampleLog& log, const MnlParameter& theta) {
    Vector g = Vector::Zero(theta.size());
    for (const auto& rec : log) {
        const Vector p = choice_probabilities(rec.slate, rec.assortment, theta);
        for (int j = 0; j < rec.assortment.size(); ++j) {
            const int i = rec.assortment.items[static_cast<std::size_t>(j)];
            const double y = rec.outcome.response(i);
            g += (p(j) - y) * rec.slate.features.row(i).transpose();
        }
    }
    return g;
}

Matrix mnl_hessian(const SampleLog& log, const MnlParameter& theta) {
    const auto d = theta.size();
    Matrix h = Matrix::Zero(d, d);
    for (const auto& rec : log) {
        const Vector p = choice_probabilities(rec.slate, rec.assortment, theta);
        Vector mean = Vector::Zero(d);
        for (int j = 0; j < rec.assortment.size(); ++j) {
            const int i = rec.assortment.items[static_cast<std::size_t>(j)];
            const Vector x = rec.slate.features.row(i).transpose();
            h.selfadjointView<Eigen::Lower>().rankUpdate(x, p(j));
            mean += p(j) * x;
        }
        h.selfadjointView<Eigen::Lower>().rankUpdate(mean, -1.0);
    }
    h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
    return h;
}

namespace {

// Fused loss / gradient / Hessian pass. One sweep over the log with
// preallocated buffers; this is the hot loop of every per-round refit.
struct ObjectiveEval {
    double loss = 0.0;
    Vector grad;
    Matrix hess;
};

void evaluate_objective(const SampleLog& log, const MnlParameter& theta,
                        ObjectiveEval& out, bool want_hessian) {
    const auto d = theta.size();
    out.loss = 0.0;
    out.grad.setZero(d);
    if (want_hessian) out.hess.setZero(d, d);

    thread_local std::vector<double> utilities, probs;
    thread_local Vector mean;
    mean.resize(d);

    for (const auto& rec : log) {
        const int m = rec.assortment.size();
        utilities.resize(static_cast<std::size_t>(m));
        probs.resize(static_cast<std::size_t>(m));

        double umax = 0.0;  // outside option has utility 0
        for (int j = 0; j < m; ++j) {
            const int i = rec.assortment.items[static_cast<std::size_t>(j)];
            const double u = rec.slate.features.row(i) * theta;
            utilities[static_cast<std::size_t>(j)] = u;
            if (u > umax) umax = u;
        }
        double denom = std::exp(-umax);
        for (int j = 0; j < m; ++j) {
            const double w = std::exp(utilities[static_cast<std::size_t>(j)] - umax);
            probs[static_cast<std::size_t>(j)] = w;
            denom += w;
        }
        const double log_denom = std::log(denom) + umax;

        // loss contribution: log denom minus the chosen utility (0 if outside)
        double chosen_utility = 0.0;
        mean.setZero();
        for (int j = 0; j < m; ++j) {
            const int i = rec.assortment.items[static_cast<std::size_t>(j)];
            const double p = probs[static_cast<std::size_t>(j)] / denom;
            probs[static_cast<std::size_t>(j)] = p;
            const double y = rec.outcome.response(i);
            if (y > 0.0) chosen_utility = utilities[static_cast<std::size_t>(j)];
            out.grad.noalias() += (p - y) * rec.slate.features.row(i).transpose();
            if (want_hessian) {
                out.hess.selfadjointView<Eigen::Lower>().rankUpdate(
                    rec.slate.features.row(i).transpose(), p);
                mean.noalias() += p * rec.slate.features.row(i).transpose();
            }
        }
        out.loss += log_denom - chosen_utility;
        if (want_hessian)
            out.hess.selfadjointView<Eigen::Lower>().rankUpdate(mean, -1.0);
    }
    if (want_hessian)
        out.hess.triangularView<Eigen::StrictlyUpper>() = out.hess.transpose();
}

double objective_value(const SampleLog& log, const MnlParameter& theta) {
    double total = 0.0;
    thread_local std::vector<double> utilities;
    for (const auto& rec : log) {
        const int m = rec.assortment.size();
        utilities.resize(static_cast<std::size_t>(m));
        double umax = 0.0;
        double chosen_utility = 0.0;
        for (int j = 0; j < m; ++j) {
            const int i = rec.assortment.items[static_cast<std::size_t>(j)];
            const double u = rec.slate.features.row(i) * theta;
            utilities[static_cast<std::size_t>(j)] = u;
            if (u > umax) umax = u;
            if (rec.outcome.chosen == i) chosen_utility = u;
        }
        double denom = std::exp(-umax);
        for (int j = 0; j < m; ++j)
            denom += std::exp(utilities[static_cast<std::size_t>(j)] - umax);
        total += std::log(denom) + umax - chosen_utility;
    }
    return total;
}

}  // namespace

MleReport mle_fit(const SampleLog& log, const MnlParameter& init, double tol,
                  int max_iter, bool check_design) {
    if (log.empty()) throw DomainError("mle_fit: empty sample log");
    if (check_design && log.design_gram().min_eigenvalue() <= 1e-12)
        throw SingularDesignError("mle_fit: design Gram is singular, MLE unidentified");

    MleReport report;
    MnlParameter theta = init;
    ObjectiveEval eval;
    evaluate_objective(log, theta, eval, true);
    int iterations = 0;

    for (int it = 1; it <= max_iter; ++it) {
        report.gradient_norm = eval.grad.norm();
        if (report.gradient_norm <= tol) {
            report.converged = true;
            report.iterations = iterations;
            report.theta_hat = theta;
            return report;
        }

        Eigen::LDLT<Matrix> ldlt(eval.hess);
        Vector direction;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive())
            direction = ldlt.solve(eval.grad);
        else
            direction = eval.grad;  // fall back to steepest descent
        if (direction.dot(eval.grad) <= 0.0) direction = eval.grad;

        // Near the optimum the objective is locally quadratic; a full Newton
        // step is safe and skips the line-search evaluations.
        if (report.gradient_norm < 1e-3 && direction.norm() < 1e-2) {
            theta -= direction;
            evaluate_objective(log, theta, eval, true);
            iterations = it;
            continue;
        }

        const double loss = eval.loss;
        double step = 1.0;
        const double slope = direction.dot(eval.grad);
        bool moved = false;
        for (int halvings = 0; halvings <= 30; ++halvings) {
            const MnlParameter candidate = theta - step * direction;
            const double candidate_loss = objective_value(log, candidate);
            if (candidate_loss <= loss - 1e-4 * step * slope) {
                theta = candidate;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        iterations = it;
        if (!moved) break;  // line search stalled
        evaluate_objective(log, theta, eval, true);
    }

    report.gradient_norm = eval.grad.norm();
    report.converged = report.gradient_norm <= tol;
    report.iterations = iterations;
    report.theta_hat = theta;
    return report;
}

MnlParameter online_newton_step(const MnlParameter& theta_prev,
                                const GramMatrix& gram_next,
                                const Vector& gradient_prev) {
    return theta_prev - gram_next.solve(gradient_prev);
}

double radius_ucb(double t, int d, double kappa) {
    if (t < 1.0) throw DomainError("radius_ucb: t must be >= 1");
    return (1.0 / (2.0 * kappa)) *
           std::sqrt(2.0 * d * std::log(1.0 + t / d) + 2.0 * std::log(t));
}

double radius_online(double t, int d, int K, double kappa, double T0) {
    if (t * K < 4.0) throw DomainError("radius_online: requires tK >= 4");
    const double level = std::ceil(2.0 * std::log2(t * K / 2.0));
    return std::sqrt(T0 + (8.0 / kappa) * d * std::log(1.0 + t / d) +
                     (8.0 / kappa + 16.0 / 3.0) * std::log(level * std::pow(t, 4.0)) +
                     4.0);
}

double radius_dbl(double tau_k, int N, double kappa) {
    const double arg = tau_k * tau_k * N / 4.0;
    if (arg <= 1.0) throw DomainError("radius_dbl: requires tau_k^2 N > 4");
    return (5.0 / kappa) * std::sqrt(std::log(arg));
}

double radius_sup(double T, int N, double kappa) {
    const double arg = T * N * std::log2(T);
    if (arg <= 1.0) throw DomainError("radius_sup: requires T N log2(T) > 1");
    return (5.0 / kappa) * std::sqrt(2.0 * std::log(arg));
}

double dbl_sampling_budget(double tau_k, int N, int K, int d, double sigma0,
                           double kappa) {
    const double arg = tau_k * tau_k * N / 4.0;
    if (arg <= 1.0) throw DomainError("dbl_sampling_budget: requires tau_k^2 N > 4");
    return (288.0 / (K * sigma0 * std::pow(kappa, 4.0))) *
           (4.0 * d * d + std::log(arg));
}

double prediction_error_bound(const GramMatrix& gram, const Vector& x, double kappa,
                              double delta) {
    return (5.0 / kappa) * std::sqrt(std::log(1.0 / delta)) * gram.weighted_norm(x);
}

}  // namespace mnlb
