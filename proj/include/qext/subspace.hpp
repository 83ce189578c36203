#pragma once

#include "config.hpp"

namespace qext {

// Linear subspace of R^n with orthonormal basis and the two orthogonal projectors.
class Subspace {
public:
    Subspace() = default;

    // Columns of `spanning` span the subspace; they need not be orthonormal or independent.
    static Subspace span(const MatrixXd& spanning, double rank_tol = 1e-10) {
        Subspace s;
        s.n_ = static_cast<int>(spanning.rows());
        if (spanning.cols() == 0) {
            s.basis_ = MatrixXd::Zero(s.n_, 0);
        } else {
            Eigen::JacobiSVD<MatrixXd> svd(spanning, Eigen::ComputeFullU);
            const VectorXd& sv = svd.singularValues();
            const double top = sv.size() ? sv(0) : 0.0;
            int k = 0;
            while (k < sv.size() && sv(k) > rank_tol * std::max(1.0, top)) ++k;
            s.basis_ = svd.matrixU().leftCols(k);
            s.complement_ = svd.matrixU().rightCols(s.n_ - k);
        }
        if (spanning.cols() == 0) s.complement_ = MatrixXd::Identity(s.n_, s.n_);
        s.P_ = s.basis_ * s.basis_.transpose();
        s.Q_ = MatrixXd::Identity(s.n_, s.n_) - s.P_;
        return s;
    }

    // Basis vectors given as rows (the file format convention).
    static Subspace from_rows(const MatrixXd& rows) { return span(rows.transpose()); }

    static Subspace full(int n) { return span(MatrixXd::Identity(n, n)); }
    static Subspace zero(int n) { return span(MatrixXd::Zero(n, 0)); }

    int ambient_dim() const { return n_; }
    int dim() const { return static_cast<int>(basis_.cols()); }
    bool is_full() const { return dim() == n_; }

    const MatrixXd& basis() const { return basis_; }
    // Orthonormal basis of the orthogonal complement, as columns.
    const MatrixXd& complement_basis() const { return complement_; }
    const MatrixXd& P() const { return P_; }
    const MatrixXd& Q() const { return Q_; }

    Point project(const Point& x) const { return P_ * x; }
    Point embed(const VectorXd& coords) const { return basis_ * coords; }
    VectorXd coords(const Point& x) const { return basis_.transpose() * x; }
    double distance(const Point& x) const { return (Q_ * x).norm(); }
    bool contains(const Point& x, double tol = 1e-9) const {
        return complement_.cols() == 0 || (complement_.transpose() * x).cwiseAbs().maxCoeff() <= tol;
    }

    bool same_as(const Subspace& o, double tol = 1e-10) const {
        return n_ == o.n_ && dim() == o.dim() && (P_ - o.P_).cwiseAbs().maxCoeff() <= tol;
    }

private:
    int n_ = 0;
    MatrixXd basis_;
    MatrixXd complement_;
    MatrixXd P_;
    MatrixXd Q_;
};

}  // namespace qext
