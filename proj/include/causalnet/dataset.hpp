#ifndef CAUSALNET_DATASET_HPP
#define CAUSALNET_DATASET_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "causalnet/errors.hpp"
#include "causalnet/graph.hpp"

namespace causalnet {

// Cell code for a missing value.
inline constexpr int32_t kMissing = -1;

struct VariableSpec {
  std::string name;
  std::vector<std::string> levels;                    // nonempty, unique
  std::vector<std::string> missing_tokens = {"", "NA"};
};

// Ordered list of categorical variables with their level vocabularies.
//
// Text form, one variable per line:
//   name: level1,level2,...  [missing=tok1|tok2]
// `#` starts a comment. Levels and missing tokens must not overlap.
class Schema {
 public:
  static Schema make(std::vector<VariableSpec> vars);
  static Schema parse(const std::string& text);
  static Schema load(const std::string& path);
  std::string format() const;
  void save(const std::string& path) const;

  int size() const { return static_cast<int>(vars_.size()); }
  const VariableSpec& var(int i) const { return vars_[i]; }
  const std::vector<VariableSpec>& vars() const { return vars_; }
  int index_of(const std::string& name) const;  // throws MissingColumn
  std::optional<int> find(const std::string& name) const;
  // Level code for a token; throws UnknownLevel.
  int level_code(int var, const std::string& token) const;
  bool is_missing_token(int var, const std::string& token) const;

 private:
  std::vector<VariableSpec> vars_;
};

// Column-oriented table of level codes (kMissing marks an absent cell) plus
// one nonnegative weight per row.
class Dataset {
 public:
  explicit Dataset(Schema schema);

  // CSV with a header naming every schema variable exactly once, in any
  // column order. RFC-4180 quoting: fields containing comma, quote or
  // newline are double-quoted, embedded quotes doubled. Missing tokens map
  // to missing cells. format_csv emits columns in schema order, LF endings,
  // quoting only where required.
  static Dataset parse_csv(const std::string& text, const Schema& schema);
  static Dataset load_csv(const std::string& path, const Schema& schema);
  std::string format_csv() const;
  void save_csv(const std::string& path) const;

  const Schema& schema() const { return schema_; }
  size_t row_count() const { return rows_; }
  int32_t cell(size_t row, int var) const { return columns_[var][row]; }
  void set_cell(size_t row, int var, int32_t code);
  const std::vector<int32_t>& column(int var) const { return columns_[var]; }

  double weight(size_t row) const { return weights_[row]; }
  void set_weight(size_t row, double w);
  double total_weight() const;

  void append_row(const std::vector<int32_t>& codes, double weight = 1.0);

  const std::optional<std::string>& cohort_column() const { return cohort_; }
  // Marks an existing, fully observed column as the cohort label.
  void designate_cohort(const std::string& name);

  bool row_complete_on(size_t row, const std::vector<int>& vars) const;
  bool complete_on(const std::vector<int>& vars) const;
  // Rows with a missing cell in any of `vars` removed; weights and cohort
  // designation carried over.
  Dataset drop_incomplete(const std::vector<int>& vars) const;
  Dataset select_rows(const std::vector<size_t>& rows) const;

 private:
  Schema schema_;
  size_t rows_ = 0;
  std::vector<std::vector<int32_t>> columns_;  // [var][row]
  std::vector<double> weights_;
  std::optional<std::string> cohort_;
};

// Adds one fully observed binary indicator column per partially observed
// node of `g`: value "1" where the node's cell is missing, "0" where present.
// The column name is the graph's indicator node name when one is declared,
// otherwise "R_" + the variable name. Columns that already exist are
// recomputed in place, so the operation is idempotent. A partially observed
// node without a data column throws MissingColumn.
Dataset derive_indicators(const Dataset& d, const MGraph& g);

// Splits per cohort value: rows of each cohort are shuffled by a seed derived
// from `seed` and the cohort code, and the first floor(frac * n_cohort) go to
// train. Row order inside each part preserves the original dataset order.
// Every cohort level present in the data must have a fraction in [0, 1].
std::pair<Dataset, Dataset> split_train_test(
    const Dataset& d, const std::map<std::string, double>& train_frac_per_cohort, uint64_t seed);

}  // namespace causalnet

#endif  // CAUSALNET_DATASET_HPP
