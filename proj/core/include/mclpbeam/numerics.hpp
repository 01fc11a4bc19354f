// numerics.hpp
// Complex Hermitian kernels shared by MCLP and the beamformers.

#pragma once

#include <optional>

#include <Eigen/Core>

namespace mclpbeam {

inline constexpr double kDefaultDelta = 1e-6;

// Square complex matrix symmetrized to (A + A^H) / 2 on construction.
class HermitianMatrix {
public:
    HermitianMatrix() = default;
    explicit HermitianMatrix(const Eigen::MatrixXcd &a);

    static HermitianMatrix Identity(int dim);
    static HermitianMatrix Zero(int dim);

    int dim() const { return static_cast<int>(a_.rows()); }
    double trace() const { return a_.diagonal().real().sum(); }
    const Eigen::MatrixXcd &matrix() const { return a_; }

private:
    Eigen::MatrixXcd a_;
};

// A + delta * (trace(A) / dim) * I, or A + delta * I when trace(A) is not
// positive.
HermitianMatrix Regularize(const HermitianMatrix &a, double delta);

// Solves Regularize(a, delta) * X = b by Cholesky. Throws kNumericalFailure
// (tagged with `bin`) if the regularized matrix is not positive definite or the
// residual exceeds 1e-8 * (|A| |X| + |B|).
Eigen::MatrixXcd SolveHermitian(const HermitianMatrix &a, const Eigen::MatrixXcd &b,
                                double delta = kDefaultDelta,
                                std::optional<int> bin = std::nullopt);

// Unit norm, first component with |w_i| > 1e-12 |w| rotated to be real >= 0.
Eigen::VectorXcd NormalizePhase(const Eigen::VectorXcd &w);

struct GeneralizedEigenpair {
    Eigen::VectorXcd vector;  // unit norm, phase normalized
    double value = 0.0;       // Rayleigh quotient against the regularized noise matrix
    int iterations = 0;       // power iterations after the squaring warm-up
};

// Dominant eigenpair of the pencil (xx, Regularize(vv, delta)).
//
// Whitens with the Cholesky factor L of the regularized vv, then runs power
// iteration on C = L^-1 xx L^-H. The start vector comes from repeatedly
// squaring C (each squaring doubles the effective power count), so plain
// iteration only has to polish; it stops once successive iterates differ by
// less than 1e-10 in sine of angle, at most 200 iterations.
GeneralizedEigenpair MaxGeneralizedEigvec(const HermitianMatrix &xx, const HermitianMatrix &vv,
                                          double delta = kDefaultDelta,
                                          std::optional<int> bin = std::nullopt);

inline constexpr int kMaxPowerIterations = 200;
inline constexpr double kPowerTolerance = 1e-10;

}  // namespace mclpbeam
