#include "etc/plant.hpp"

#include <string>

namespace etc {

PlantModel::PlantModel(Mat a, Mat b, Mat c) : A(std::move(a)), B(std::move(b)), C(std::move(c)) { validate(); }

void PlantModel::validate() const {
    if (A.rows() == 0 || A.rows() != A.cols()) throw DimensionMismatch("plant: A_p must be square and non-empty");
    if (B.rows() != A.rows() || B.cols() == 0) {
        throw DimensionMismatch("plant: B_p must have " + std::to_string(A.rows()) + " rows");
    }
    if (C.cols() != A.rows() || C.rows() == 0) {
        throw DimensionMismatch("plant: C_p must have " + std::to_string(A.rows()) + " columns");
    }
    require_finite(A, "plant A_p");
    require_finite(B, "plant B_p");
    require_finite(C, "plant C_p");
}

} // namespace etc
