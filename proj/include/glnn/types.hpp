#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace glnn {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Array = Eigen::ArrayXd;
using Index = Eigen::Index;

/// Forward evolution produced a non-finite activation.
struct DivergentDynamics : std::runtime_error {
    explicit DivergentDynamics(Index t)
        : std::runtime_error("divergent dynamics at t=" + std::to_string(t)), t(t) {}
    Index t;
};

inline constexpr Scalar kBitsPerNat = 1.4426950408889634;  // 1/ln 2

inline Scalar nats_to_bits(Scalar nats) { return nats * kBitsPerNat; }

}  // namespace glnn
