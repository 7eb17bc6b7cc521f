#pragma once

#include <Eigen/Dense>

namespace hjreg {

/// Points, momenta and gradients. Dimension is 1 or 2; in 1-D the second
/// component is kept at zero.
using Vec = Eigen::Vector2d;
using Mat = Eigen::Matrix2d;

inline Vec make_vec(int dim, double a, double b = 0.0) {
    return dim == 1 ? Vec(a, 0.0) : Vec(a, b);
}

}  // namespace hjreg
