#pragma once

// Affine symmetric-matrix-valued constraints F(v) = F0 + sum_k v_k F_k over a
// flat vector of scalar unknowns, and the three synthesis LMIs used for
// controller/trigger co-design.

#include <cstddef>
#include <string>
#include <vector>

#include "etc/matrix_kernel.hpp"

namespace etc {

struct PlantModel;

enum class VarKind { Symmetric, General, Scalar };

struct VariableBlock {
    std::string name;
    VarKind kind = VarKind::Scalar;
    Eigen::Index rows = 1;
    Eigen::Index cols = 1;
    std::size_t offset = 0;

    [[nodiscard]] std::size_t count() const noexcept;
    /// Basis matrix multiplying the k-th scalar of this block (k local).
    [[nodiscard]] Mat basis(std::size_t k) const;
};

/// Maps named matrix/scalar unknowns onto contiguous index ranges.
/// Symmetric n x n unknowns are parameterized by their upper triangle in
/// row-major order.
class DecisionLayout {
public:
    DecisionLayout& add_symmetric(const std::string& name, Eigen::Index n);
    DecisionLayout& add_general(const std::string& name, Eigen::Index rows, Eigen::Index cols);
    DecisionLayout& add_scalar(const std::string& name);

    /// X, Y (symmetric n_p), M (n_p x n_p), Z (n_p x n_y), N (n_u x n_p),
    /// then mu, eps, alpha, beta.
    static DecisionLayout codesign(Eigen::Index n_p, Eigen::Index n_u, Eigen::Index n_y);

    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] const std::vector<VariableBlock>& blocks() const noexcept { return blocks_; }
    [[nodiscard]] const VariableBlock& block(const std::string& name) const;
    [[nodiscard]] bool contains(const std::string& name) const noexcept;

    [[nodiscard]] Mat matrix(const std::string& name, const Vec& values) const;
    [[nodiscard]] double scalar(const std::string& name, const Vec& values) const;
    void set(const std::string& name, const Mat& value, Vec& values) const;
    void set(const std::string& name, double value, Vec& values) const;

    friend bool operator==(const DecisionLayout& a, const DecisionLayout& b);

private:
    DecisionLayout& add(VariableBlock b);

    std::vector<VariableBlock> blocks_;
    std::size_t size_ = 0;
};

/// Named view of a co-design assignment.
struct LmiSolution {
    Mat X, Y, M, Z, N;
    double mu = 0.0;
    double eps = 0.0;
    double alpha = 0.0;
    double beta = 0.0;

    [[nodiscard]] Vec to_assignment(const DecisionLayout& layout) const;
    static LmiSolution from_assignment(const DecisionLayout& layout, const Vec& values);
};

enum class Sense { NegativeDefinite, PositiveDefinite };

class AffineLmi {
public:
    AffineLmi(std::string name, Sense sense, SymMat constant, std::vector<SymMat> coefficients);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] Sense sense() const noexcept { return sense_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return constant_.dim(); }
    [[nodiscard]] std::size_t num_unknowns() const noexcept { return coefficients_.size(); }
    [[nodiscard]] const SymMat& constant() const noexcept { return constant_; }
    [[nodiscard]] const SymMat& coefficient(std::size_t k) const { return coefficients_.at(k); }
    [[nodiscard]] bool depends_on(std::size_t k) const { return nonzero_.at(k); }
    /// max |entry| over the constant and every coefficient.
    [[nodiscard]] double scale() const noexcept { return scale_; }

    /// Same constraint with every matrix multiplied by c > 0.
    [[nodiscard]] AffineLmi scaled(double c) const;

private:
    std::string name_;
    Sense sense_;
    SymMat constant_;
    std::vector<SymMat> coefficients_;
    std::vector<bool> nonzero_;
    double scale_ = 0.0;
};

/// Constant + sum_k values(k) * coefficient_k. Throws MissingVariable when the
/// assignment does not cover the constraint's unknowns.
[[nodiscard]] SymMat evaluate(const AffineLmi& lmi, const Vec& values);

/// lambda_min of the evaluation for "> 0" constraints, -lambda_max for "< 0".
/// Positive means strictly satisfied.
[[nodiscard]] double margin(const AffineLmi& lmi, const Vec& values);

/// Incremental assembly of a block-structured AffineLmi. Only lower-triangle
/// blocks (row >= col) are supplied; the mirror block is filled automatically.
class LmiBuilder {
public:
    LmiBuilder(const DecisionLayout& layout, std::vector<Eigen::Index> block_sizes, std::string name,
               Sense sense);

    LmiBuilder& constant(std::size_t row, std::size_t col, const Mat& value);
    /// Adds left * V * right (or left * V^T * right) to block (row, col).
    LmiBuilder& term(std::size_t row, std::size_t col, const Mat& left, const std::string& var,
                     const Mat& right, bool transpose_var = false);
    /// Adds value(var) * k to block (row, col) for a scalar unknown.
    LmiBuilder& scalar(std::size_t row, std::size_t col, const std::string& var, const Mat& k);

    [[nodiscard]] AffineLmi build() const;

private:
    void add_block(Mat& target, std::size_t row, std::size_t col, const Mat& value) const;

    const DecisionLayout& layout_;
    std::vector<Eigen::Index> sizes_;
    std::vector<Eigen::Index> starts_;
    std::string name_;
    Sense sense_;
    Mat constant_;
    std::vector<Mat> coefficients_;
};

/// Performance LMI coupling the closed-loop Lyapunov decrease with the
/// emulation gain mu and output weight eps; dimension 4 n_p + 2 n_y + n_u.
[[nodiscard]] AffineLmi build_lmi_A(const PlantModel& plant, const DecisionLayout& layout);
/// Bound on the A2^T A2 term; dimension n_y + n_u + 2 n_p.
[[nodiscard]] AffineLmi build_lmi_B(const PlantModel& plant, const DecisionLayout& layout);
/// Bound alpha * beta on lambda_max(B_c^T C_c^T C_c B_c); dimension n_y + n_u + 2 n_p.
[[nodiscard]] AffineLmi build_lmi_C(const PlantModel& plant, const DecisionLayout& layout);
/// 1x1 constraint var > 0.
[[nodiscard]] AffineLmi build_positivity(const DecisionLayout& layout, const std::string& var);

} // namespace etc
