#pragma once

// Dense real matrix kernel: storage aliases over Eigen, a symmetric matrix
// type, and the handful of factorizations the synthesis and simulation code
// relies on. Everything here is a pure function of its inputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "etc/errors.hpp"

namespace etc {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = Matrix<double>;
using Vec = Vector<double>;

template <typename Derived>
[[nodiscard]] typename Derived::Scalar max_abs(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    return m.size() == 0 ? Scalar(0) : m.cwiseAbs().maxCoeff();
}

template <typename Derived>
[[nodiscard]] bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.size() == 0 || m.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const std::string& what) {
    if (!all_finite(m)) {
        throw InvalidInput(what + ": non-finite entry");
    }
}

/// Real symmetric matrix. The input is symmetrized as (S + S^T)/2 on
/// construction, so the stored entries are exactly symmetric.
template <typename Scalar>
class BasicSymMat {
public:
    BasicSymMat() = default;

    explicit BasicSymMat(Matrix<Scalar> m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) {
            throw DimensionMismatch("SymMat: matrix is " + std::to_string(m_.rows()) + "x" +
                                    std::to_string(m_.cols()));
        }
        require_finite(m_, "SymMat");
        const Matrix<Scalar> t = m_.transpose();
        m_ = Scalar(0.5) * (m_ + t);
    }

    template <typename Derived>
    explicit BasicSymMat(const Eigen::MatrixBase<Derived>& m) : BasicSymMat(Matrix<Scalar>(m)) {}

    static BasicSymMat identity(Eigen::Index n) {
        return BasicSymMat(Matrix<Scalar>::Identity(n, n));
    }
    static BasicSymMat zero(Eigen::Index n) { return BasicSymMat(Matrix<Scalar>::Zero(n, n)); }

    [[nodiscard]] Eigen::Index dim() const noexcept { return m_.rows(); }
    [[nodiscard]] const Matrix<Scalar>& matrix() const noexcept { return m_; }
    [[nodiscard]] Scalar operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    friend BasicSymMat operator+(const BasicSymMat& a, const BasicSymMat& b) {
        return BasicSymMat(Matrix<Scalar>(a.m_ + b.m_));
    }
    friend BasicSymMat operator*(Scalar s, const BasicSymMat& a) {
        return BasicSymMat(Matrix<Scalar>(s * a.m_));
    }

private:
    Matrix<Scalar> m_;
};

using SymMat = BasicSymMat<double>;

template <typename Scalar>
struct SymEig {
    Vector<Scalar> values;   // ascending
    Matrix<Scalar> vectors;  // orthogonal, column k pairs with values(k)
};

/// Cyclic Jacobi eigen-decomposition. Throws NumericalFailure when the
/// off-diagonal mass does not vanish within the sweep cap.
template <typename Scalar>
[[nodiscard]] SymEig<Scalar> sym_eig(const BasicSymMat<Scalar>& s, int max_sweeps = 100) {
    using std::abs;
    using std::sqrt;
    const Eigen::Index n = s.dim();
    Matrix<Scalar> a = s.matrix();
    Matrix<Scalar> v = Matrix<Scalar>::Identity(n, n);

    const Scalar eps = Eigen::NumTraits<Scalar>::epsilon();
    const Scalar scale = a.norm();
    auto off_norm = [&] {
        Scalar acc(0);
        for (Eigen::Index q = 1; q < n; ++q)
            for (Eigen::Index p = 0; p < q; ++p) acc += a(p, q) * a(p, q);
        return sqrt(Scalar(2) * acc);
    };

    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        if (off_norm() <= eps * scale) break;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const Scalar apq = a(p, q);
                if (apq == Scalar(0)) continue;
                const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
                const Scalar t = (theta >= Scalar(0) ? Scalar(1) : Scalar(-1)) /
                                 (abs(theta) + sqrt(theta * theta + Scalar(1)));
                const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
                const Scalar sn = t * c;

                for (Eigen::Index k = 0; k < n; ++k) {
                    const Scalar akp = a(k, p);
                    const Scalar akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const Scalar apk = a(p, k);
                    const Scalar aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                a(p, q) = Scalar(0);
                a(q, p) = Scalar(0);
                for (Eigen::Index k = 0; k < n; ++k) {
                    const Scalar vkp = v(k, p);
                    const Scalar vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    if (sweep == max_sweeps && off_norm() > eps * scale) {
        throw NumericalFailure("sym_eig: Jacobi sweeps did not converge");
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

    SymEig<Scalar> out{Vector<Scalar>(n), Matrix<Scalar>(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        out.values(k) = a(src, src);
        out.vectors.col(k) = v.col(src);
    }
    return out;
}

template <typename Derived>
[[nodiscard]] auto sym_eig(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    return sym_eig(BasicSymMat<Scalar>(Matrix<Scalar>(m)));
}

template <typename Scalar>
[[nodiscard]] Scalar lambda_min(const BasicSymMat<Scalar>& s) {
    return s.dim() == 0 ? Scalar(0) : sym_eig(s).values(0);
}

template <typename Scalar>
[[nodiscard]] Scalar lambda_max(const BasicSymMat<Scalar>& s) {
    return s.dim() == 0 ? Scalar(0) : sym_eig(s).values(s.dim() - 1);
}

/// Lower Cholesky factor, or std::nullopt together with the failing pivot.
template <typename Scalar>
[[nodiscard]] std::optional<Matrix<Scalar>> try_cholesky(const BasicSymMat<Scalar>& s,
                                                         std::size_t* failed_pivot = nullptr) {
    using std::sqrt;
    const Eigen::Index n = s.dim();
    const Matrix<Scalar>& a = s.matrix();
    Matrix<Scalar> l = Matrix<Scalar>::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Scalar d = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > Scalar(0))) {
            if (failed_pivot) *failed_pivot = static_cast<std::size_t>(j);
            return std::nullopt;
        }
        const Scalar ljj = sqrt(d);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            Scalar acc = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            l(i, j) = acc / ljj;
        }
    }
    return l;
}

template <typename Scalar>
[[nodiscard]] Matrix<Scalar> cholesky(const BasicSymMat<Scalar>& s) {
    std::size_t pivot = 0;
    auto l = try_cholesky(s, &pivot);
    if (!l) {
        throw NotPositiveDefinite(pivot, "cholesky: non-positive pivot at row " + std::to_string(pivot));
    }
    return *std::move(l);
}

/// Euclidean-induced norm, sqrt(lambda_max(M^T M)). The smaller Gram matrix
/// is used, so the result is identical for M and M^T.
template <typename Derived>
[[nodiscard]] typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    using std::sqrt;
    if (m.size() == 0) return Scalar(0);
    const Matrix<Scalar> mm = m;
    const Matrix<Scalar> gram = mm.rows() >= mm.cols() ? Matrix<Scalar>(mm.transpose() * mm)
                                                       : Matrix<Scalar>(mm * mm.transpose());
    const Scalar top = lambda_max(BasicSymMat<Scalar>(gram));
    return sqrt(std::max(top, Scalar(0)));
}

/// Solves A X = B by Gaussian elimination with partial (column) pivoting.
/// Throws SingularMatrix when a pivot falls below 1e-13 * max|A|.
template <typename DerivedA, typename DerivedB>
[[nodiscard]] Matrix<typename DerivedA::Scalar> solve_linear(const Eigen::MatrixBase<DerivedA>& a_in,
                                                             const Eigen::MatrixBase<DerivedB>& b_in) {
    using Scalar = typename DerivedA::Scalar;
    using std::abs;
    if (a_in.rows() != a_in.cols()) throw DimensionMismatch("solve_linear: A is not square");
    if (b_in.rows() != a_in.rows()) throw DimensionMismatch("solve_linear: B row count differs from A");

    Matrix<Scalar> a = a_in;
    Matrix<Scalar> b = b_in;
    const Eigen::Index n = a.rows();
    const Scalar threshold = Scalar(1e-13) * max_abs(a);

    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index piv = k;
        a.col(k).tail(n - k).cwiseAbs().maxCoeff(&piv);
        piv += k;
        if (!(abs(a(piv, k)) > threshold)) {
            throw SingularMatrix("solve_linear: pivot " + std::to_string(k) + " below threshold");
        }
        if (piv != k) {
            a.row(k).swap(a.row(piv));
            b.row(k).swap(b.row(piv));
        }
        for (Eigen::Index i = k + 1; i < n; ++i) {
            const Scalar f = a(i, k) / a(k, k);
            if (f == Scalar(0)) continue;
            a.row(i).tail(n - k) -= f * a.row(k).tail(n - k);
            b.row(i) -= f * b.row(k);
        }
    }
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        b.row(k) -= a.row(k).tail(n - k - 1) * b.bottomRows(n - k - 1);
        b.row(k) /= a(k, k);
    }
    return b;
}

template <typename Derived>
[[nodiscard]] Matrix<typename Derived::Scalar> inverse(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    return solve_linear(a, Matrix<Scalar>::Identity(a.rows(), a.rows()));
}

} // namespace etc
