#pragma once

#include <Eigen/Dense>

namespace xanchor {

/// Row-major dense matrix; row i is one embedding.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace xanchor
