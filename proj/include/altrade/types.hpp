#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace altrade {

// A point in feature space.
using Point = Eigen::VectorXd;
// A list of points, one per row.
using PointList = Eigen::MatrixXd;

// All stochastic code takes a caller-owned generator so runs are replayable.
using Rng = std::mt19937_64;

inline Point row_point(const PointList& points, Eigen::Index row) {
    return points.row(row).transpose();
}

}  // namespace altrade
