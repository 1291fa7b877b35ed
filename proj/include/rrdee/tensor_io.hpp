#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace rrdee {

// Single-file container: magic, version, JSON metadata header, then the
// named float64 arrays back to back in header order. Matrices are stored
// row-major. The byte layout is fully determined by its contents, so
// identical inputs produce identical files.
struct NamedArray {
  std::string name;
  std::vector<long> shape;
  std::vector<double> data;

  static NamedArray from_matrix(const std::string& name, const Eigen::MatrixXd& m);
  Eigen::MatrixXd to_matrix() const;  // requires 2-d shape
};

struct Container {
  nlohmann::ordered_json meta;
  std::vector<NamedArray> arrays;

  const NamedArray& array(const std::string& name) const;
};

void save_container(const std::string& path, const Container& c);
Container load_container(const std::string& path);

}  // namespace rrdee
