#pragma once

#include "etc/matrix_kernel.hpp"

namespace etc {

/// LTI plant dx/dt = A x + B u, y = C x.
struct PlantModel {
    Mat A;  // n_p x n_p
    Mat B;  // n_p x n_u
    Mat C;  // n_y x n_p

    PlantModel() = default;
    /// Throws DimensionMismatch or InvalidInput (non-finite entries).
    PlantModel(Mat a, Mat b, Mat c);

    [[nodiscard]] Eigen::Index n_p() const noexcept { return A.rows(); }
    [[nodiscard]] Eigen::Index n_u() const noexcept { return B.cols(); }
    [[nodiscard]] Eigen::Index n_y() const noexcept { return C.rows(); }

    void validate() const;
};

} // namespace etc
