#include "etc/lmi.hpp"

#include <algorithm>
#include <numeric>

#include "etc/plant.hpp"

namespace etc {

std::size_t VariableBlock::count() const noexcept {
    switch (kind) {
    case VarKind::Symmetric:
        return static_cast<std::size_t>(rows * (rows + 1) / 2);
    case VarKind::General:
        return static_cast<std::size_t>(rows * cols);
    case VarKind::Scalar:
        return 1;
    }
    return 0;
}

Mat VariableBlock::basis(std::size_t k) const {
    Mat e = Mat::Zero(rows, cols);
    switch (kind) {
    case VarKind::Symmetric: {
        // upper triangle, row-major
        std::size_t idx = 0;
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = i; j < cols; ++j, ++idx) {
                if (idx == k) {
                    e(i, j) = 1.0;
                    e(j, i) = 1.0;
                    return e;
                }
            }
        }
        break;
    }
    case VarKind::General:
        e(static_cast<Eigen::Index>(k) / cols, static_cast<Eigen::Index>(k) % cols) = 1.0;
        return e;
    case VarKind::Scalar:
        e(0, 0) = 1.0;
        return e;
    }
    throw InvalidInput("VariableBlock::basis: index out of range for " + name);
}

DecisionLayout& DecisionLayout::add(VariableBlock b) {
    if (contains(b.name)) throw InvalidInput("DecisionLayout: duplicate unknown " + b.name);
    b.offset = size_;
    size_ += b.count();
    blocks_.push_back(std::move(b));
    return *this;
}

DecisionLayout& DecisionLayout::add_symmetric(const std::string& name, Eigen::Index n) {
    return add({name, VarKind::Symmetric, n, n, 0});
}

DecisionLayout& DecisionLayout::add_general(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    return add({name, VarKind::General, rows, cols, 0});
}

DecisionLayout& DecisionLayout::add_scalar(const std::string& name) {
    return add({name, VarKind::Scalar, 1, 1, 0});
}

DecisionLayout DecisionLayout::codesign(Eigen::Index n_p, Eigen::Index n_u, Eigen::Index n_y) {
    if (n_p <= 0 || n_u <= 0 || n_y <= 0) throw DimensionMismatch("codesign layout: empty dimension");
    DecisionLayout l;
    l.add_symmetric("X", n_p)
        .add_symmetric("Y", n_p)
        .add_general("M", n_p, n_p)
        .add_general("Z", n_p, n_y)
        .add_general("N", n_u, n_p)
        .add_scalar("mu")
        .add_scalar("eps")
        .add_scalar("alpha")
        .add_scalar("beta");
    return l;
}

const VariableBlock& DecisionLayout::block(const std::string& name) const {
    auto it = std::find_if(blocks_.begin(), blocks_.end(), [&](const VariableBlock& b) { return b.name == name; });
    if (it == blocks_.end()) throw MissingVariable("DecisionLayout: no unknown named " + name);
    return *it;
}

bool DecisionLayout::contains(const std::string& name) const noexcept {
    return std::any_of(blocks_.begin(), blocks_.end(), [&](const VariableBlock& b) { return b.name == name; });
}

Mat DecisionLayout::matrix(const std::string& name, const Vec& values) const {
    if (static_cast<std::size_t>(values.size()) != size_) {
        throw MissingVariable("assignment has " + std::to_string(values.size()) + " entries, layout needs " +
                              std::to_string(size_));
    }
    const VariableBlock& b = block(name);
    Mat out = Mat::Zero(b.rows, b.cols);
    for (std::size_t k = 0; k < b.count(); ++k) {
        out += values(static_cast<Eigen::Index>(b.offset + k)) * b.basis(k);
    }
    return out;
}

double DecisionLayout::scalar(const std::string& name, const Vec& values) const {
    const VariableBlock& b = block(name);
    if (b.kind != VarKind::Scalar) throw InvalidInput("DecisionLayout: " + name + " is not a scalar");
    if (static_cast<std::size_t>(values.size()) != size_) throw MissingVariable("assignment size mismatch");
    return values(static_cast<Eigen::Index>(b.offset));
}

void DecisionLayout::set(const std::string& name, const Mat& value, Vec& values) const {
    const VariableBlock& b = block(name);
    if (value.rows() != b.rows || value.cols() != b.cols) {
        throw DimensionMismatch("DecisionLayout::set: wrong shape for " + name);
    }
    if (static_cast<std::size_t>(values.size()) != size_) values = Vec::Zero(static_cast<Eigen::Index>(size_));
    std::size_t idx = b.offset;
    switch (b.kind) {
    case VarKind::Symmetric:
        for (Eigen::Index i = 0; i < b.rows; ++i)
            for (Eigen::Index j = i; j < b.cols; ++j) values(static_cast<Eigen::Index>(idx++)) = 0.5 * (value(i, j) + value(j, i));
        break;
    case VarKind::General:
        for (Eigen::Index i = 0; i < b.rows; ++i)
            for (Eigen::Index j = 0; j < b.cols; ++j) values(static_cast<Eigen::Index>(idx++)) = value(i, j);
        break;
    case VarKind::Scalar:
        values(static_cast<Eigen::Index>(idx)) = value(0, 0);
        break;
    }
}

void DecisionLayout::set(const std::string& name, double value, Vec& values) const {
    set(name, Mat::Constant(1, 1, value), values);
}

bool operator==(const DecisionLayout& a, const DecisionLayout& b) {
    if (a.size_ != b.size_ || a.blocks_.size() != b.blocks_.size()) return false;
    for (std::size_t i = 0; i < a.blocks_.size(); ++i) {
        const auto& x = a.blocks_[i];
        const auto& y = b.blocks_[i];
        if (x.name != y.name || x.kind != y.kind || x.rows != y.rows || x.cols != y.cols) return false;
    }
    return true;
}

Vec LmiSolution::to_assignment(const DecisionLayout& layout) const {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(layout.size()));
    layout.set("X", X, v);
    layout.set("Y", Y, v);
    layout.set("M", M, v);
    layout.set("Z", Z, v);
    layout.set("N", N, v);
    layout.set("mu", mu, v);
    layout.set("eps", eps, v);
    layout.set("alpha", alpha, v);
    layout.set("beta", beta, v);
    return v;
}

LmiSolution LmiSolution::from_assignment(const DecisionLayout& layout, const Vec& values) {
    LmiSolution s;
    s.X = layout.matrix("X", values);
    s.Y = layout.matrix("Y", values);
    s.M = layout.matrix("M", values);
    s.Z = layout.matrix("Z", values);
    s.N = layout.matrix("N", values);
    s.mu = layout.scalar("mu", values);
    s.eps = layout.scalar("eps", values);
    s.alpha = layout.scalar("alpha", values);
    s.beta = layout.scalar("beta", values);
    return s;
}

AffineLmi::AffineLmi(std::string name, Sense sense, SymMat constant, std::vector<SymMat> coefficients)
    : name_(std::move(name)), sense_(sense), constant_(std::move(constant)), coefficients_(std::move(coefficients)) {
    nonzero_.reserve(coefficients_.size());
    scale_ = max_abs(constant_.matrix());
    for (const auto& c : coefficients_) {
        if (c.dim() != constant_.dim()) throw DimensionMismatch("AffineLmi " + name_ + ": coefficient size");
        const double m = max_abs(c.matrix());
        nonzero_.push_back(m > 0.0);
        scale_ = std::max(scale_, m);
    }
}

AffineLmi AffineLmi::scaled(double c) const {
    if (!(c > 0.0)) throw InvalidInput("AffineLmi::scaled: factor must be positive");
    std::vector<SymMat> coeffs;
    coeffs.reserve(coefficients_.size());
    for (const auto& k : coefficients_) coeffs.push_back(c * k);
    return AffineLmi(name_, sense_, c * constant_, std::move(coeffs));
}

SymMat evaluate(const AffineLmi& lmi, const Vec& values) {
    if (static_cast<std::size_t>(values.size()) != lmi.num_unknowns()) {
        throw MissingVariable("evaluate(" + lmi.name() + "): assignment has " + std::to_string(values.size()) +
                              " entries, constraint needs " + std::to_string(lmi.num_unknowns()));
    }
    Mat acc = lmi.constant().matrix();
    for (std::size_t k = 0; k < lmi.num_unknowns(); ++k) {
        if (lmi.depends_on(k)) acc += values(static_cast<Eigen::Index>(k)) * lmi.coefficient(k).matrix();
    }
    return SymMat(std::move(acc));
}

double margin(const AffineLmi& lmi, const Vec& values) {
    const SymMat f = evaluate(lmi, values);
    return lmi.sense() == Sense::PositiveDefinite ? lambda_min(f) : -lambda_max(f);
}

LmiBuilder::LmiBuilder(const DecisionLayout& layout, std::vector<Eigen::Index> block_sizes, std::string name,
                       Sense sense)
    : layout_(layout), sizes_(std::move(block_sizes)), name_(std::move(name)), sense_(sense) {
    Eigen::Index n = 0;
    for (Eigen::Index s : sizes_) {
        starts_.push_back(n);
        n += s;
    }
    constant_ = Mat::Zero(n, n);
    coefficients_.assign(layout_.size(), Mat::Zero(n, n));
}

void LmiBuilder::add_block(Mat& target, std::size_t row, std::size_t col, const Mat& value) const {
    if (row >= sizes_.size() || col >= sizes_.size() || col > row) {
        throw InvalidInput("LmiBuilder(" + name_ + "): bad block index");
    }
    if (value.rows() != sizes_[row] || value.cols() != sizes_[col]) {
        throw DimensionMismatch("LmiBuilder(" + name_ + "): block (" + std::to_string(row) + "," +
                                std::to_string(col) + ") expects " + std::to_string(sizes_[row]) + "x" +
                                std::to_string(sizes_[col]) + ", got " + std::to_string(value.rows()) + "x" +
                                std::to_string(value.cols()));
    }
    target.block(starts_[row], starts_[col], sizes_[row], sizes_[col]) += value;
    if (row != col) target.block(starts_[col], starts_[row], sizes_[col], sizes_[row]) += value.transpose();
}

LmiBuilder& LmiBuilder::constant(std::size_t row, std::size_t col, const Mat& value) {
    add_block(constant_, row, col, value);
    return *this;
}

LmiBuilder& LmiBuilder::term(std::size_t row, std::size_t col, const Mat& left, const std::string& var,
                             const Mat& right, bool transpose_var) {
    const VariableBlock& b = layout_.block(var);
    for (std::size_t k = 0; k < b.count(); ++k) {
        const Mat e = transpose_var ? Mat(b.basis(k).transpose()) : b.basis(k);
        add_block(coefficients_[b.offset + k], row, col, left * e * right);
    }
    return *this;
}

LmiBuilder& LmiBuilder::scalar(std::size_t row, std::size_t col, const std::string& var, const Mat& k) {
    const VariableBlock& b = layout_.block(var);
    if (b.kind != VarKind::Scalar) throw InvalidInput("LmiBuilder::scalar: " + var + " is not a scalar unknown");
    add_block(coefficients_[b.offset], row, col, k);
    return *this;
}

AffineLmi LmiBuilder::build() const {
    auto check = [&](const Mat& m) {
        const double asym = max_abs(Mat(m - m.transpose()));
        if (asym > 1e-12 * (1.0 + max_abs(m))) {
            throw InvalidInput("LmiBuilder(" + name_ + "): diagonal block terms are not symmetric");
        }
        return SymMat(m);
    };
    std::vector<SymMat> coeffs;
    coeffs.reserve(coefficients_.size());
    for (const auto& c : coefficients_) coeffs.push_back(check(c));
    return AffineLmi(name_, sense_, check(constant_), std::move(coeffs));
}

namespace {

void require_codesign_layout(const PlantModel& plant, const DecisionLayout& layout) {
    plant.validate();
    if (!(layout == DecisionLayout::codesign(plant.n_p(), plant.n_u(), plant.n_y()))) {
        throw DimensionMismatch("decision layout does not match plant dimensions");
    }
}

Mat eye(Eigen::Index n) { return Mat::Identity(n, n); }

} // namespace

AffineLmi build_lmi_A(const PlantModel& plant, const DecisionLayout& layout) {
    require_codesign_layout(plant, layout);
    const Eigen::Index np = plant.n_p(), nu = plant.n_u(), ny = plant.n_y();
    const Mat& A = plant.A;
    const Mat& B = plant.B;
    const Mat& C = plant.C;
    const Mat Ip = eye(np);

    // block rows: x_p-like, x_c-like, e_y, e_u, two n_p copy rows, output row
    LmiBuilder b(layout, {np, np, ny, nu, np, np, ny}, "lmi_A", Sense::NegativeDefinite);
    // (1,1): Sigma(Y A_p + Z C_p)
    b.term(0, 0, Ip, "Y", A).term(0, 0, A.transpose(), "Y", Ip);
    b.term(0, 0, Ip, "Z", C).term(0, 0, C.transpose(), "Z", Ip, true);
    // (2,1): A_p + M^T
    b.constant(1, 0, A).term(1, 0, Ip, "M", Ip, true);
    // (2,2): Sigma(A_p X + B_p N)
    b.term(1, 1, A, "X", Ip).term(1, 1, Ip, "X", A.transpose());
    b.term(1, 1, B, "N", Ip).term(1, 1, Ip, "N", B.transpose(), true);
    // (3,1): Z^T, (3,3): -mu I
    b.term(2, 0, eye(ny), "Z", Ip, true).scalar(2, 2, "mu", -eye(ny));
    // (4,1): B_p^T Y, (4,2): B_p^T, (4,4): -mu I
    b.term(3, 0, B.transpose(), "Y", Ip).constant(3, 1, B.transpose()).scalar(3, 3, "mu", -eye(nu));
    // (5,1): Y A_p + Z C_p, (5,2): M, (5,5): -Y
    b.term(4, 0, Ip, "Y", A).term(4, 0, Ip, "Z", C).term(4, 1, Ip, "M", Ip).term(4, 4, -Ip, "Y", Ip);
    // (6,1): A_p, (6,2): A_p X + B_p N, (6,5): -I, (6,6): -X
    b.constant(5, 0, A).term(5, 1, A, "X", Ip).term(5, 1, B, "N", Ip);
    b.constant(5, 4, -Ip).term(5, 5, -Ip, "X", Ip);
    // (7,1): C_p, (7,2): C_p X, (7,7): -eps I
    b.constant(6, 0, C).term(6, 1, C, "X", Ip).scalar(6, 6, "eps", -eye(ny));
    return b.build();
}

AffineLmi build_lmi_B(const PlantModel& plant, const DecisionLayout& layout) {
    require_codesign_layout(plant, layout);
    const Eigen::Index np = plant.n_p(), nu = plant.n_u(), ny = plant.n_y();
    const Mat& C = plant.C;
    const Mat Ip = eye(np);

    LmiBuilder b(layout, {ny, nu, np, np}, "lmi_B", Sense::NegativeDefinite);
    b.constant(0, 0, -eye(ny)).constant(1, 1, -eye(nu));
    b.constant(2, 0, -C.transpose()).term(2, 2, -Ip, "Y", Ip);
    b.term(3, 0, -Ip, "X", C.transpose()).term(3, 1, -Ip, "N", eye(nu), true);
    b.constant(3, 2, -Ip).term(3, 3, -Ip, "X", Ip);
    return b.build();
}

AffineLmi build_lmi_C(const PlantModel& plant, const DecisionLayout& layout) {
    require_codesign_layout(plant, layout);
    const Eigen::Index np = plant.n_p(), nu = plant.n_u(), ny = plant.n_y();
    const Mat Ip = eye(np);

    LmiBuilder b(layout, {ny, nu, np, np}, "lmi_C", Sense::PositiveDefinite);
    b.scalar(0, 0, "alpha", eye(ny)).scalar(1, 1, "beta", eye(nu));
    b.term(2, 1, Ip, "N", eye(nu), true).term(2, 2, Ip, "X", Ip);
    b.term(3, 0, Ip, "Z", eye(ny)).constant(3, 2, Ip).term(3, 3, Ip, "Y", Ip);
    return b.build();
}

AffineLmi build_positivity(const DecisionLayout& layout, const std::string& var) {
    LmiBuilder b(layout, {1}, var + "_positive", Sense::PositiveDefinite);
    b.scalar(0, 0, var, Mat::Identity(1, 1));
    return b.build();
}

} // namespace etc
