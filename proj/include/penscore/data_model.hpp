#pragma once

#include <Eigen/Dense>
#include <istream>
#include <string>
#include <vector>

namespace penscore {

// Standardized design and centered response. Every column satisfies
// x_j' 1 = 0 and x_j' x_j = n; the response is centered but keeps its units.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> names;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }
};

// Feature under test and the remaining columns in their original order.
struct FeatureSplit {
  Eigen::VectorXd x;
  Eigen::MatrixXd Z;
  Eigen::Index j = 0;
};

// Centers y and centers/scales each column of X so that x_j' x_j = n.
// Throws NonFiniteInput, ZeroVarianceColumn or InvalidArgument.
Dataset standardize(const Eigen::Ref<const Eigen::MatrixXd>& raw_X,
                    const Eigen::Ref<const Eigen::VectorXd>& raw_y,
                    std::vector<std::string> names = {});

FeatureSplit split(const Dataset& dataset, Eigen::Index j);

// Column indices of `dataset` other than j.
std::vector<Eigen::Index> complement_indices(Eigen::Index d, Eigen::Index j);

// Raw numeric table read from CSV; header row required.
struct RawTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

RawTable read_csv(std::istream& in);
RawTable read_csv_file(const std::string& path);

// Splits a raw table into response column `response` and features, then
// standardizes. Throws InvalidArgument if the response column is unknown.
Dataset dataset_from_table(const RawTable& table, const std::string& response);

}  // namespace penscore
