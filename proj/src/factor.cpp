#include "causalnet/factor.hpp"

#include <algorithm>

namespace causalnet {

namespace {

size_t table_size(const std::vector<Factor::Axis>& axes) {
  size_t n = 1;
  for (const auto& a : axes) n *= a.levels.size();
  return n;
}

}  // namespace

Factor::Factor(std::vector<Axis> axes, std::vector<double> values)
    : axes_(std::move(axes)), values_(std::move(values)) {
  for (const auto& a : axes_) {
    if (a.levels.empty()) throw InvalidArgument("factor axis '" + a.name + "' has no levels");
  }
  for (size_t i = 0; i < axes_.size(); ++i) {
    for (size_t j = i + 1; j < axes_.size(); ++j) {
      if (axes_[i].name == axes_[j].name) {
        throw InvalidArgument("factor repeats axis '" + axes_[i].name + "'");
      }
    }
  }
  if (values_.size() != table_size(axes_)) {
    throw InvalidArgument("factor value count does not match axis sizes");
  }
}

int Factor::axis_of(const std::string& var) const {
  for (size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].name == var) return static_cast<int>(i);
  }
  return -1;
}

size_t Factor::flat_index(const std::vector<int>& levels) const {
  size_t idx = 0;
  for (size_t a = 0; a < axes_.size(); ++a) {
    idx = idx * axes_[a].levels.size() + static_cast<size_t>(levels[a]);
  }
  return idx;
}

double Factor::value_at(const std::vector<int>& levels) const {
  return values_[flat_index(levels)];
}

double& Factor::at(const std::vector<int>& levels) { return values_[flat_index(levels)]; }

Factor Factor::multiply(const Factor& other) const {
  // Result scope: this factor's axes, then the other's new axes.
  std::vector<Axis> axes = axes_;
  for (const auto& a : other.axes_) {
    int here = axis_of(a.name);
    if (here >= 0) {
      if (axes_[here].levels != a.levels) {
        throw InvalidArgument("factor product: axis '" + a.name + "' has mismatched levels");
      }
    } else {
      axes.push_back(a);
    }
  }

  // Strides of each operand along every result axis.
  size_t k = axes.size();
  std::vector<size_t> dim(k), stride_a(k, 0), stride_b(k, 0);
  for (size_t i = 0; i < k; ++i) dim[i] = axes[i].levels.size();
  {
    size_t s = 1;
    for (size_t i = axes_.size(); i-- > 0;) {
      stride_a[i] = s;
      s *= axes_[i].levels.size();
    }
  }
  {
    std::vector<size_t> own(other.axes_.size());
    size_t s = 1;
    for (size_t i = other.axes_.size(); i-- > 0;) {
      own[i] = s;
      s *= other.axes_[i].levels.size();
    }
    for (size_t i = 0; i < k; ++i) {
      int in_b = other.axis_of(axes[i].name);
      if (in_b >= 0) stride_b[i] = own[in_b];
    }
  }

  std::vector<double> values(table_size(axes));
  std::vector<int> digit(k, 0);
  size_t ia = 0, ib = 0;
  for (size_t out = 0; out < values.size(); ++out) {
    values[out] = values_[ia] * other.values_[ib];
    // Odometer increment, last axis fastest.
    for (size_t i = k; i-- > 0;) {
      ++digit[i];
      ia += stride_a[i];
      ib += stride_b[i];
      if (digit[i] < static_cast<int>(dim[i])) break;
      ia -= stride_a[i] * dim[i];
      ib -= stride_b[i] * dim[i];
      digit[i] = 0;
    }
  }
  return Factor(std::move(axes), std::move(values));
}

Factor Factor::sum_out(const std::string& var) const {
  int drop = axis_of(var);
  if (drop < 0) throw InvalidArgument("factor has no axis '" + var + "'");
  std::vector<Axis> axes;
  for (size_t i = 0; i < axes_.size(); ++i) {
    if (static_cast<int>(i) != drop) axes.push_back(axes_[i]);
  }
  size_t inner = 1;  // combined size of axes after `drop`
  for (size_t i = drop + 1; i < axes_.size(); ++i) inner *= axes_[i].levels.size();
  size_t levels = axes_[drop].levels.size();
  std::vector<double> values(table_size(axes), 0.0);
  size_t block = inner * levels;
  for (size_t src = 0; src < values_.size(); ++src) {
    size_t outer = src / block;
    size_t rem = src % block;
    size_t dst = outer * inner + rem % inner;
    values[dst] += values_[src];
  }
  return Factor(std::move(axes), std::move(values));
}

Factor Factor::reduce(const std::string& var, int level) const {
  int drop = axis_of(var);
  if (drop < 0) throw InvalidArgument("factor has no axis '" + var + "'");
  if (level < 0 || level >= static_cast<int>(axes_[drop].levels.size())) {
    throw UnknownLevel("factor axis '" + var + "': level index out of range");
  }
  std::vector<Axis> axes;
  for (size_t i = 0; i < axes_.size(); ++i) {
    if (static_cast<int>(i) != drop) axes.push_back(axes_[i]);
  }
  size_t inner = 1;
  for (size_t i = drop + 1; i < axes_.size(); ++i) inner *= axes_[i].levels.size();
  size_t levels = axes_[drop].levels.size();
  std::vector<double> values;
  values.reserve(table_size(axes));
  size_t block = inner * levels;
  for (size_t outer = 0; outer * block < values_.size(); ++outer) {
    size_t base = outer * block + static_cast<size_t>(level) * inner;
    for (size_t i = 0; i < inner; ++i) values.push_back(values_[base + i]);
  }
  return Factor(std::move(axes), std::move(values));
}

Factor Factor::marginal(const std::vector<std::string>& order) const {
  Factor out = *this;
  for (const auto& a : axes_) {
    bool keep = std::find(order.begin(), order.end(), a.name) != order.end();
    if (!keep) out = out.sum_out(a.name);
  }
  return out.reordered(order);
}

Factor Factor::reordered(const std::vector<std::string>& order) const {
  if (order.size() != axes_.size()) {
    throw InvalidArgument("factor reorder: axis list does not match scope");
  }
  std::vector<Axis> axes;
  std::vector<int> src_axis;
  for (const auto& name : order) {
    int i = axis_of(name);
    if (i < 0) throw InvalidArgument("factor has no axis '" + name + "'");
    axes.push_back(axes_[i]);
    src_axis.push_back(i);
  }
  std::vector<size_t> src_stride(axes_.size());
  {
    size_t s = 1;
    for (size_t i = axes_.size(); i-- > 0;) {
      src_stride[i] = s;
      s *= axes_[i].levels.size();
    }
  }
  size_t k = axes.size();
  std::vector<size_t> dim(k);
  for (size_t i = 0; i < k; ++i) dim[i] = axes[i].levels.size();
  std::vector<double> values(values_.size());
  std::vector<int> digit(k, 0);
  size_t src = 0;
  for (size_t out = 0; out < values.size(); ++out) {
    values[out] = values_[src];
    for (size_t i = k; i-- > 0;) {
      ++digit[i];
      src += src_stride[src_axis[i]];
      if (digit[i] < static_cast<int>(dim[i])) break;
      src -= src_stride[src_axis[i]] * dim[i];
      digit[i] = 0;
    }
  }
  return Factor(std::move(axes), std::move(values));
}

double Factor::total() const {
  double t = 0.0;
  for (double v : values_) t += v;
  return t;
}

Factor Factor::normalized() const {
  double t = total();
  if (!(t > 0.0)) {
    throw InconsistentEvidence("distribution has zero total mass");
  }
  Factor out = *this;
  for (double& v : out.values_) v /= t;
  return out;
}

}  // namespace causalnet
