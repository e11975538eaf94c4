#pragma once

#include <cmath>
#include <string>

#include "altrade/errors.hpp"
#include "altrade/kernels.hpp"

namespace altrade {

/// Cholesky factor of a jittered symmetric matrix.
///
/// The factor is of `base + jitter I`. On failure the jitter grows tenfold
/// until it exceeds `max_jitter`. Solves apply two steps of iterative
/// refinement against `base`, so for well-conditioned matrices the result
/// matches the unjittered system; for near-singular ones the jittered
/// factor bounds the error.
class RegularizedCholesky {
public:
    RegularizedCholesky() = default;

    RegularizedCholesky(Eigen::MatrixXd base, double initial_jitter, double max_jitter)
        : base_(std::move(base)) {
        if (base_.rows() != base_.cols()) throw InputError("cholesky: matrix must be square");
        factorize(initial_jitter, max_jitter);
    }

    // Takes a Gram whose diagonal already carries its jitter.
    explicit RegularizedCholesky(const GramMatrix& gram)
        : base_(gram.values) {
        base_.diagonal().array() -= gram.jitter_applied;
        const double start = gram.jitter_applied > 0.0 ? gram.jitter_applied : 1e-12;
        factorize(start, start * (kMaxRelativeJitter / kRelativeJitter));
    }

    Eigen::Index size() const { return base_.rows(); }
    double jitter() const { return jitter_; }
    const Eigen::MatrixXd& base() const { return base_; }
    Eigen::MatrixXd lower() const { return llt_.matrixL(); }

    template <typename Rhs>
    Eigen::MatrixXd solve(const Eigen::MatrixBase<Rhs>& rhs) const {
        Eigen::MatrixXd x = llt_.solve(rhs);
        for (int step = 0; step < 2; ++step) {
            x += llt_.solve(rhs - base_ * x);
        }
        return x;
    }

    Eigen::VectorXd solve_vector(const Eigen::VectorXd& rhs) const { return solve(rhs); }

    // log|base + jitter I|
    double log_determinant() const {
        return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
    }

private:
    void factorize(double initial_jitter, double max_jitter) {
        jitter_ = initial_jitter;
        if (base_.rows() == 0) return;
        while (true) {
            Eigen::MatrixXd shifted = base_;
            shifted.diagonal().array() += jitter_;
            llt_.compute(shifted);
            if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().minCoeff() > 0.0) return;
            if (jitter_ * 10.0 > max_jitter * (1.0 + 1e-9)) break;
            jitter_ *= 10.0;
        }
        throw NumericalError("cholesky factorization failed with jitter up to " + std::to_string(jitter_));
    }

    Eigen::MatrixXd base_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double jitter_ = 0.0;
};

}  // namespace altrade
