#pragma once

#include <string>
#include <vector>

#include "oracle/types.hpp"

namespace oracle {

struct ProjectionResult {
    Matrix coords;              // M x components
    Vector explained_variance;  // fractions of total variance, non-increasing
    std::vector<std::string> group_labels;  // one per row
    Index components = 0;
    bool rank_deficient = false;  // fewer components than requested
};

// Column-centered PCA via a deterministic self-adjoint eigen-solution on the
// covariance. Sign convention: the first nonzero loading of every kept
// direction is positive. Rank below k keeps fewer components and raises the
// warning flag instead of erroring.
ProjectionResult pca_project(const Matrix& X, int k = 2,
                             const std::vector<std::string>* groups = nullptr);

// CSV: a method note line, then "x,y,group", then one row per point with 12
// significant digits. Missing trailing components export as 0.
void export_projection(const ProjectionResult& result, const std::string& path);

}  // namespace oracle
