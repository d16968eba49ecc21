#pragma once

#include <Eigen/Dense>

#include <vector>

namespace nyspec {

/// Minimum-cost assignment for a rows <= cols cost matrix (shortest
/// augmenting path with potentials, O(rows^2 cols)). Returns the column
/// assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

} // namespace nyspec
