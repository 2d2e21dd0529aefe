#ifndef CAUSALNET_FACTOR_HPP
#define CAUSALNET_FACTOR_HPP

#include <string>
#include <vector>

#include "causalnet/errors.hpp"

namespace causalnet {

// Dense nonnegative table over a list of named categorical axes. Values are
// stored row-major with the last axis varying fastest. The variable-
// elimination workhorse: supports product, marginalization, slicing on an
// observed level, and normalization.
class Factor {
 public:
  struct Axis {
    std::string name;
    std::vector<std::string> levels;
    bool operator==(const Axis&) const = default;
  };

  // Scalar factor (empty scope).
  explicit Factor(double value = 1.0) : values_{value} {}
  Factor(std::vector<Axis> axes, std::vector<double> values);

  const std::vector<Axis>& axes() const { return axes_; }
  bool scalar() const { return axes_.empty(); }
  size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  int axis_of(const std::string& var) const;  // -1 when absent

  double value_at(const std::vector<int>& levels) const;
  double& at(const std::vector<int>& levels);

  Factor multiply(const Factor& other) const;
  Factor sum_out(const std::string& var) const;
  Factor reduce(const std::string& var, int level) const;
  // Keep exactly `order`, summing out the rest; result axes follow `order`.
  Factor marginal(const std::vector<std::string>& order) const;
  Factor reordered(const std::vector<std::string>& order) const;

  double total() const;
  // Divides by total(); throws InconsistentEvidence when total() <= 0.
  Factor normalized() const;

 private:
  size_t flat_index(const std::vector<int>& levels) const;

  std::vector<Axis> axes_;
  std::vector<double> values_;
};

}  // namespace causalnet

#endif  // CAUSALNET_FACTOR_HPP
