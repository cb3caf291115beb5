#pragma once

#include <Eigen/Core>

namespace melvq::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

inline MapMat map_mat(double* p, int rows, int cols) { return MapMat(p, rows, cols); }
inline CMapMat map_mat(const double* p, int rows, int cols) { return CMapMat(p, rows, cols); }

}  // namespace melvq::nn
