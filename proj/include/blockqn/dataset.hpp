#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <string>

#include "blockqn/objectives.hpp"

namespace blockqn {

struct LogisticProblem {
  LogisticData data;
  double gamma = 1.0;
};

struct DatasetStats {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  Eigen::Index nnz = 0;
  Eigen::Index positives = 0;
};

DatasetStats dataset_stats(const LogisticData& data);

/// Reads the sparse classification text format:
///   <label> <index>:<value> <index>:<value> ...
/// one sample per line, 1-based indices, blank lines and '#' comments
/// ignored. Labels 0/1 and -1/+1 are both accepted and mapped to ±1; d is
/// the largest index seen. Errors carry the 1-based line number.
LogisticData parse_dataset(std::istream& in, const std::string& source = "<stream>");
LogisticData load_dataset(const std::string& path);

/// n unit-norm Gaussian rows, labels from a planted parameter with 10% of
/// them flipped. Deterministic in seed.
LogisticProblem synth_logistic(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double gamma);

/// ½xᵀHx − bᵀx with H = QΛQᵀ, Λ log-uniform in [1, kappa] (both ends
/// attained), b Gaussian.
QuadraticObjective make_quadratic(Eigen::Index d, double kappa, std::uint64_t seed);

}  // namespace blockqn
