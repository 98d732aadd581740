#include "oracle/project.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace oracle {

namespace {

constexpr double kRankTol = 1e-10;

}  // namespace

ProjectionResult pca_project(const Matrix& X, int k,
                             const std::vector<std::string>* groups) {
    if (k < 1) throw UsageError("pca_project: components must be >= 1, got " + std::to_string(k));
    const Index m = X.rows();
    const Index d = X.cols();
    if (m < 2) throw DataError("pca_project: need at least 2 rows, got " + std::to_string(m));
    if (d < 1) throw DataError("pca_project: need at least 1 column");
    if (groups && static_cast<Index>(groups->size()) != m) {
        throw DataError("pca_project: group labels length " + std::to_string(groups->size()) +
                        " does not match rows " + std::to_string(m));
    }
    if (!X.allFinite()) throw NumericError("pca_project: input contains non-finite values");

    Matrix centered = X.rowwise() - X.colwise().mean();
    Matrix cov = centered.transpose() * centered / static_cast<double>(m - 1);

    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("pca_project: eigen-decomposition failed");

    // Solver orders eigenvalues ascending; walk them from the back.
    const Vector evals = solver.eigenvalues();
    const Matrix evecs = solver.eigenvectors();
    const double total = std::max(evals.sum(), 0.0);
    const double floor = std::max(total, 1.0) * kRankTol;

    const int want = std::min<Index>(k, d);
    std::vector<Index> keep;
    for (Index j = d - 1; j >= 0 && static_cast<int>(keep.size()) < want; --j) {
        if (evals(j) > floor) keep.push_back(j);
    }
    if (keep.empty()) throw DataError("pca_project: data has zero variance");

    ProjectionResult result;
    result.components = static_cast<Index>(keep.size());
    result.rank_deficient = result.components < k;
    result.explained_variance = Vector(result.components);

    Matrix basis(d, result.components);
    for (Index c = 0; c < result.components; ++c) {
        Vector v = evecs.col(keep[static_cast<size_t>(c)]);
        for (Index r = 0; r < d; ++r) {
            if (v(r) != 0.0) {
                if (v(r) < 0.0) v = -v;
                break;
            }
        }
        basis.col(c) = v;
        result.explained_variance(c) =
            total > 0.0 ? std::max(evals(keep[static_cast<size_t>(c)]), 0.0) / total : 0.0;
    }

    result.coords = centered * basis;
    if (groups) {
        result.group_labels = *groups;
    } else {
        result.group_labels.assign(static_cast<size_t>(m), "all");
    }
    return result;
}

void export_projection(const ProjectionResult& result, const std::string& path) {
    const Index m = result.coords.rows();
    if (static_cast<Index>(result.group_labels.size()) != m) {
        throw DataError("export_projection: group labels length " +
                        std::to_string(result.group_labels.size()) +
                        " does not match rows " + std::to_string(m));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("export_projection: cannot open '" + path + "' for writing");

    out << "# method=pca components=" << result.components << "\n";
    out << "x,y,group\n";
    char buf[64];
    for (Index i = 0; i < m; ++i) {
        const double x = result.coords.cols() > 0 ? result.coords(i, 0) : 0.0;
        const double y = result.coords.cols() > 1 ? result.coords(i, 1) : 0.0;
        std::snprintf(buf, sizeof(buf), "%.12g", x);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.12g", y);
        out << buf << ',' << result.group_labels[static_cast<size_t>(i)] << '\n';
    }
    if (!out) throw DataError("export_projection: write to '" + path + "' failed");
}

}  // namespace oracle
