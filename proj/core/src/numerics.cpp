// numerics.cpp

#include "mclpbeam/numerics.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "mclpbeam/error.hpp"

namespace mclpbeam {

HermitianMatrix::HermitianMatrix(const Eigen::MatrixXcd &a) {
    if (a.rows() != a.cols())
        throw Error(ErrorKind::kInvalidInput,
                    "Hermitian matrix must be square, got " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()));
    a_ = 0.5 * (a + a.adjoint());
}

HermitianMatrix HermitianMatrix::Identity(int dim) {
    return HermitianMatrix(Eigen::MatrixXcd::Identity(dim, dim));
}

HermitianMatrix HermitianMatrix::Zero(int dim) {
    return HermitianMatrix(Eigen::MatrixXcd::Zero(dim, dim));
}

HermitianMatrix Regularize(const HermitianMatrix &a, double delta) {
    if (!(delta >= 0.0))
        throw Error(ErrorKind::kConfiguration, "regularization delta must be >= 0");
    const int n = a.dim();
    if (n == 0) return a;
    const double tr = a.trace();
    const double load = tr > 0.0 ? delta * tr / n : delta;
    Eigen::MatrixXcd out = a.matrix();
    out.diagonal().array() += load;
    return HermitianMatrix(out);
}

namespace {

Eigen::LLT<Eigen::MatrixXcd> Factor(const HermitianMatrix &a, std::optional<int> bin) {
    if (!a.matrix().allFinite())
        throw Error(ErrorKind::kNumericalFailure, "matrix has non-finite entries", bin);
    Eigen::LLT<Eigen::MatrixXcd> llt(a.matrix());
    if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::kNumericalFailure,
                    "matrix is not positive definite after regularization", bin);
    return llt;
}

}  // namespace

Eigen::MatrixXcd SolveHermitian(const HermitianMatrix &a, const Eigen::MatrixXcd &b,
                                double delta, std::optional<int> bin) {
    if (b.rows() != a.dim())
        throw Error(ErrorKind::kInvalidInput, "right-hand side is not row-compatible", bin);
    const HermitianMatrix reg = Regularize(a, delta);
    const Eigen::LLT<Eigen::MatrixXcd> llt = Factor(reg, bin);
    Eigen::MatrixXcd x = llt.solve(b);
    const double residual = (reg.matrix() * x - b).norm();
    const double bound = 1e-8 * (reg.matrix().norm() * x.norm() + b.norm());
    if (!x.allFinite() || residual > bound)
        throw Error(ErrorKind::kNumericalFailure,
                    "solve residual " + std::to_string(residual) + " exceeds bound", bin);
    return x;
}

Eigen::VectorXcd NormalizePhase(const Eigen::VectorXcd &w) {
    const double norm = w.norm();
    if (norm == 0.0) return w;
    Eigen::VectorXcd out = w / norm;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        const double mag = std::abs(out[i]);
        if (mag > 1e-12) {
            out *= std::conj(out[i]) / mag;
            out[i] = mag;
            break;
        }
    }
    return out;
}

namespace {

// Orthogonal component of `next` relative to unit vector `prev`; next is unit.
double SineOfAngle(const Eigen::VectorXcd &prev, const Eigen::VectorXcd &next) {
    const std::complex<double> c = prev.dot(next);
    return (next - c * prev).norm();
}

// Start vector for the power iteration: the largest column of C^(2^j) once the
// normalized powers stop changing.
Eigen::VectorXcd SquaringWarmup(const Eigen::MatrixXcd &c) {
    const int n = static_cast<int>(c.rows());
    Eigen::MatrixXcd p = c;
    double scale = p.norm();
    if (scale == 0.0) return Eigen::VectorXcd::Unit(n, 0);
    p /= scale;
    for (int j = 0; j < 64; ++j) {
        Eigen::MatrixXcd next = p * p;
        next = 0.5 * (next + next.adjoint());
        scale = next.norm();
        if (scale == 0.0 || !std::isfinite(scale)) break;
        next /= scale;
        const double change = (next - p).norm();
        p = std::move(next);
        if (change < 1e-14) break;
    }
    Eigen::Index best = 0;
    double best_norm = -1.0;
    for (Eigen::Index i = 0; i < p.cols(); ++i) {
        const double cn = p.col(i).norm();
        if (cn > best_norm * (1.0 + 1e-12)) {
            best_norm = cn;
            best = i;
        }
    }
    if (best_norm <= 0.0) return Eigen::VectorXcd::Unit(n, 0);
    return p.col(best) / best_norm;
}

}  // namespace

GeneralizedEigenpair MaxGeneralizedEigvec(const HermitianMatrix &xx, const HermitianMatrix &vv,
                                          double delta, std::optional<int> bin) {
    if (xx.dim() != vv.dim() || xx.dim() == 0)
        throw Error(ErrorKind::kInvalidInput, "PSD pair dimensions differ or are empty", bin);
    if (!xx.matrix().allFinite())
        throw Error(ErrorKind::kNumericalFailure, "speech PSD has non-finite entries", bin);

    const HermitianMatrix vv_reg = Regularize(vv, delta);
    const Eigen::LLT<Eigen::MatrixXcd> llt = Factor(vv_reg, bin);
    const auto lower = llt.matrixL();

    // C = L^-1 xx L^-H
    Eigen::MatrixXcd tmp = lower.solve(xx.matrix());
    Eigen::MatrixXcd c = lower.solve(tmp.adjoint().eval()).adjoint();
    c = 0.5 * (c + c.adjoint());

    Eigen::VectorXcd u = SquaringWarmup(c);
    int iterations = 0;
    bool converged = false;
    for (; iterations < kMaxPowerIterations; ++iterations) {
        Eigen::VectorXcd next = c * u;
        const double norm = next.norm();
        if (norm == 0.0) {
            converged = true;  // xx is zero: every vector is dominant
            break;
        }
        next /= norm;
        const double sine = SineOfAngle(u, next);
        // Align phase so successive iterates are directly comparable.
        const std::complex<double> ph = u.dot(next);
        if (std::abs(ph) > 0.0) next *= std::conj(ph) / std::abs(ph);
        u = std::move(next);
        if (sine < kPowerTolerance) {
            converged = true;
            ++iterations;
            break;
        }
    }
    if (!converged)
        throw Error(ErrorKind::kNumericalFailure,
                    "power iteration did not converge in " +
                        std::to_string(kMaxPowerIterations) + " iterations",
                    bin);

    // w = L^-H u
    Eigen::VectorXcd w = llt.matrixU().solve(u);
    w = NormalizePhase(w);

    GeneralizedEigenpair out;
    const double num = (w.adjoint() * xx.matrix() * w)(0, 0).real();
    const double den = (w.adjoint() * vv_reg.matrix() * w)(0, 0).real();
    out.vector = std::move(w);
    out.value = num / den;
    out.iterations = iterations;
    return out;
}

}  // namespace mclpbeam
