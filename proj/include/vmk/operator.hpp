#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vmk/errors.hpp"
#include "vmk/kernel.hpp"
#include "vmk/timegrid.hpp"

namespace vmk {

// Discretized operator J·Id + K on L^2([0,T], R^N). The identity part J (N x N) is kept
// symbolic; the kernel part is an (N n) x (N n) matrix whose block (i,j) approximates
// K(t_i, s) integrated over cell j, so composition is a plain matrix product.
template <class Scalar>
class IntegralOperator {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    IntegralOperator() = default;
    IntegralOperator(int n, int N, Scalar T)
        : n_(n), N_(N), T_(T), J_(Matrix::Zero(N, N)), K_(Matrix::Zero(n * N, n * N)) {}
    IntegralOperator(int n, int N, Scalar T, Matrix kernel, Matrix identity_part)
        : n_(n), N_(N), T_(T), J_(std::move(identity_part)), K_(std::move(kernel))
    {
        if (K_.rows() != n * N || K_.cols() != n * N || J_.rows() != N || J_.cols() != N)
            throw std::invalid_argument("IntegralOperator: dimensions inconsistent with grid and block size");
    }

    static IntegralOperator kernel(int n, int N, Scalar T, Matrix k)
    {
        return IntegralOperator(n, N, T, std::move(k), Matrix::Zero(N, N));
    }
    static IntegralOperator identity(int n, int N, Scalar T, Scalar c = Scalar(1))
    {
        return IntegralOperator(n, N, T, Matrix::Zero(n * N, n * N), c * Matrix::Identity(N, N));
    }

    int cells() const { return n_; }
    int block() const { return N_; }
    Scalar horizon() const { return T_; }
    Scalar dt() const { return T_ / n_; }
    int size() const { return n_ * N_; }

    const Matrix& identity_part() const { return J_; }
    const Matrix& kernel_matrix() const { return K_; }
    Matrix& kernel_matrix() { return K_; }

    // Full action on grid functions (identity part on the block diagonal).
    Matrix dense() const
    {
        Matrix out = K_;
        for (int i = 0; i < n_; ++i) out.block(i * N_, i * N_, N_, N_) += J_;
        return out;
    }

    Vector apply(const Vector& f) const
    {
        if (f.size() != size()) throw std::invalid_argument("IntegralOperator::apply: size mismatch");
        Vector out = K_ * f;
        for (int i = 0; i < n_; ++i) out.segment(i * N_, N_) += J_ * f.segment(i * N_, N_);
        return out;
    }

    // Kernel value K(t_i, t_j) recovered by unfolding the quadrature weight.
    Matrix kernel_at(int i, int j) const { return K_.block(i * N_, j * N_, N_, N_) / dt(); }

    bool same_space(const IntegralOperator& o) const { return o.n_ == n_ && o.N_ == N_ && o.T_ == T_; }

private:
    int n_ = 0;
    int N_ = 0;
    Scalar T_ = 0;
    Matrix J_;
    Matrix K_;
};

using Operator = IntegralOperator<double>;

template <class Scalar>
struct Spectrum {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;                // descending
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> functions;  // columns, grid-orthonormal
};

inline constexpr double kConditionThreshold = 1e12;
inline constexpr double kSymmetryTolerance = 1e-8;

namespace detail {

template <class Scalar>
void require_same(const IntegralOperator<Scalar>& a, const IntegralOperator<Scalar>& b, const char* op)
{
    if (!a.same_space(b)) throw std::invalid_argument(std::string(op) + ": operators live on different grids");
}

template <class Matrix>
Matrix block_diag(const Matrix& J, int n)
{
    const auto N = J.rows();
    Matrix out = Matrix::Zero(n * N, n * N);
    for (int i = 0; i < n; ++i) out.block(i * N, i * N, N, N) = J;
    return out;
}

// (J_a ⊗ I) K from the left
template <class Matrix>
bool strictly_block_lower(const Matrix& K, int N, int n)
{
    for (int j = 0; j < n; ++j)
        if (!K.block(0, j * N, (j + 1) * N, N).isZero(0)) return false;
    return true;
}

template <class Matrix>
Matrix left_blocks(const Matrix& J, const Matrix& K, int n)
{
    const auto N = J.rows();
    Matrix out(K.rows(), K.cols());
    for (int i = 0; i < n; ++i) out.middleRows(i * N, N) = J * K.middleRows(i * N, N);
    return out;
}

template <class Matrix>
Matrix right_blocks(const Matrix& K, const Matrix& J, int n)
{
    const auto N = J.rows();
    Matrix out(K.rows(), K.cols());
    for (int j = 0; j < n; ++j) out.middleCols(j * N, N) = K.middleCols(j * N, N) * J;
    return out;
}

}  // namespace detail

// Nystrom assembly with exact cell integrals: block (i,j) = int_{cell j} K(t_i, s) ds.
inline Operator discretize(const Kernel& k, const TimeGrid& g)
{
    const int N = k.dim();
    Operator::Matrix A = Operator::Matrix::Zero(g.n * N, g.n * N);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            if (k.volterra() && j >= i) break;
            A.block(i * N, j * N, N, N) = k.cell_integral(g.node(i), g.cell_left(j), g.cell_right(j));
        }
    return Operator::kernel(g.n, N, g.T, std::move(A));
}

template <class Scalar>
IntegralOperator<Scalar> operator+(const IntegralOperator<Scalar>& a, const IntegralOperator<Scalar>& b)
{
    detail::require_same(a, b, "operator+");
    return IntegralOperator<Scalar>(a.cells(), a.block(), a.horizon(), a.kernel_matrix() + b.kernel_matrix(),
                                    a.identity_part() + b.identity_part());
}

template <class Scalar>
IntegralOperator<Scalar> operator-(const IntegralOperator<Scalar>& a, const IntegralOperator<Scalar>& b)
{
    detail::require_same(a, b, "operator-");
    return IntegralOperator<Scalar>(a.cells(), a.block(), a.horizon(), a.kernel_matrix() - b.kernel_matrix(),
                                    a.identity_part() - b.identity_part());
}

template <class Scalar>
IntegralOperator<Scalar> operator*(Scalar c, const IntegralOperator<Scalar>& a)
{
    return IntegralOperator<Scalar>(a.cells(), a.block(), a.horizon(), c * a.kernel_matrix(), c * a.identity_part());
}

// Composition (A ⋆ B)(s,u) = int A(s,z) B(z,u) dz with symbolic identity parts.
template <class Scalar>
IntegralOperator<Scalar> star(const IntegralOperator<Scalar>& a, const IntegralOperator<Scalar>& b)
{
    detail::require_same(a, b, "star");
    using Matrix = typename IntegralOperator<Scalar>::Matrix;
    const int n = a.cells();
    Matrix k = a.kernel_matrix() * b.kernel_matrix();
    if (!a.identity_part().isZero(0)) k += detail::left_blocks(a.identity_part(), b.kernel_matrix(), n);
    if (!b.identity_part().isZero(0)) k += detail::right_blocks(a.kernel_matrix(), b.identity_part(), n);
    return IntegralOperator<Scalar>(n, a.block(), a.horizon(), std::move(k), a.identity_part() * b.identity_part());
}

// K*(s,u) = K(u,s)^T
template <class Scalar>
IntegralOperator<Scalar> adjoint(const IntegralOperator<Scalar>& a)
{
    return IntegralOperator<Scalar>(a.cells(), a.block(), a.horizon(), a.kernel_matrix().transpose(),
                                    a.identity_part().transpose());
}

// (Id - A)^{-1}, identity part included.
template <class Scalar>
IntegralOperator<Scalar> invert_id_minus(const IntegralOperator<Scalar>& a)
{
    using Matrix = typename IntegralOperator<Scalar>::Matrix;
    const int N = a.block();
    const int n = a.cells();
    Matrix Jc = Matrix::Identity(N, N) - a.identity_part();
    if (detail::strictly_block_lower(a.kernel_matrix(), N, n)) {
        Eigen::PartialPivLU<Matrix> jlu(Jc);
        if (!(static_cast<double>(jlu.rcond()) > 1.0 / kConditionThreshold))
            throw SingularOperator("Id - A is singular on the diagonal", INFINITY);
        // nilpotent kernel part: block forward substitution, no conditioning limit
        const Matrix Jinv = jlu.inverse();
        const Matrix& K = a.kernel_matrix();
        Matrix X = Matrix::Zero(n * N, n * N);
        for (int i = 0; i < n; ++i) {
            Matrix rhs = Matrix::Zero(N, n * N);
            rhs.middleCols(i * N, N).setIdentity();
            if (i > 0) rhs.leftCols(i * N) += K.block(i * N, 0, N, i * N) * X.topLeftCorner(i * N, i * N);
            X.block(i * N, 0, N, n * N) = Jinv * rhs;
        }
        X -= detail::block_diag(Jinv, n);
        return IntegralOperator<Scalar>(n, N, a.horizon(), std::move(X), Jinv);
    }
    Matrix M = detail::block_diag(Jc, n) - a.kernel_matrix();
    Eigen::PartialPivLU<Matrix> lu(M);
    const double rc = static_cast<double>(lu.rcond());
    if (!(rc > 1.0 / kConditionThreshold))
        throw SingularOperator("Id - A is numerically singular (condition estimate " + std::to_string(1.0 / rc) + ")",
                               rc > 0 ? 1.0 / rc : INFINITY);
    Matrix inv = lu.inverse();
    Matrix Jinv = Jc.inverse();
    inv -= detail::block_diag(Jinv, n);
    return IntegralOperator<Scalar>(n, N, a.horizon(), std::move(inv), std::move(Jinv));
}

// R with (Id - A)^{-1} = Id + R, i.e. R = A + A⋆R = A + R⋆A.
template <class Scalar>
IntegralOperator<Scalar> resolvent(const IntegralOperator<Scalar>& a)
{
    if (!a.identity_part().isZero(0)) throw std::invalid_argument("resolvent: operator must be a pure kernel operator");
    auto inv = invert_id_minus(a);
    return IntegralOperator<Scalar>::kernel(a.cells(), a.block(), a.horizon(), inv.kernel_matrix());
}

// Tr(F) = int tr F(s,s) ds of the kernel part.
template <class Scalar>
Scalar trace(const IntegralOperator<Scalar>& a)
{
    if (!a.identity_part().isZero(0)) throw std::invalid_argument("trace: the identity part has no finite trace");
    return a.kernel_matrix().trace();
}

// <f,g> = int f(s)^T g(s) ds on the grid.
template <class Scalar, class V1, class V2>
Scalar grid_inner(const V1& f, const V2& g, Scalar dt)
{
    return dt * f.dot(g);
}

template <class Scalar>
Scalar asymmetry(const IntegralOperator<Scalar>& a)
{
    auto d = a.dense();
    const Scalar scale = std::max<Scalar>(Scalar(1), d.cwiseAbs().maxCoeff());
    return (d - d.transpose()).cwiseAbs().maxCoeff() / scale;
}

template <class Scalar>
Spectrum<Scalar> eig_sym(const IntegralOperator<Scalar>& a)
{
    using Matrix = typename IntegralOperator<Scalar>::Matrix;
    const Scalar asym = asymmetry(a);
    if (asym > kSymmetryTolerance)
        throw std::invalid_argument("eig_sym: operator is not symmetric (relative asymmetry " + std::to_string(asym) + ")");
    Matrix d = a.dense();
    d = (d + d.transpose()) / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Matrix> es(d);
    Spectrum<Scalar> sp;
    sp.values = es.eigenvalues().reverse();
    sp.functions = es.eigenvectors().rowwise().reverse() / std::sqrt(a.dt());
    return sp;
}

// Largest singular value of the discretized operator (its L^2 operator norm on the grid).
template <class Scalar>
Scalar op_norm(const IntegralOperator<Scalar>& a)
{
    using Matrix = typename IntegralOperator<Scalar>::Matrix;
    Matrix d = a.dense();
    if ((d - d.transpose()).cwiseAbs().maxCoeff() <= Scalar(1e-12) * std::max<Scalar>(Scalar(1), d.cwiseAbs().maxCoeff())) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(d, Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }
    return Eigen::JacobiSVD<Matrix>(d).singularValues()(0);
}

// Squared L^2([0,T]^2) norm of the kernel part.
template <class Scalar>
Scalar kernel_norm_sq(const IntegralOperator<Scalar>& a)
{
    return a.kernel_matrix().squaredNorm();
}

// Block diagonal multiplication K(t,s) -> K(t,s) M.
template <class Scalar, class Derived>
IntegralOperator<Scalar> right_multiply(const IntegralOperator<Scalar>& a, const Eigen::MatrixBase<Derived>& m)
{
    using Matrix = typename IntegralOperator<Scalar>::Matrix;
    Matrix mm = m;
    return IntegralOperator<Scalar>(a.cells(), a.block(), a.horizon(),
                                    detail::right_blocks(a.kernel_matrix(), mm, a.cells()), a.identity_part() * mm);
}

}  // namespace vmk
