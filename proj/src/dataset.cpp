#include "causalnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "causalnet/rng.hpp"

namespace causalnet {

namespace {

std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool needs_quoting(const std::string& field) {
  return field.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quote_field(const std::string& field) {
  if (!needs_quoting(field)) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// RFC-4180 record reader; handles quoted fields with embedded separators,
// doubled quotes and embedded newlines. LF and CRLF both end a record.
std::vector<std::vector<std::string>> read_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;  // distinguishes an empty record from one empty field
  size_t i = 0;
  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&] {
    if (fields.empty() && !field_started && field.empty()) return;  // blank line
    end_field();
    records.push_back(std::move(fields));
    fields.clear();
    field_started = false;
  };
  while (i < text.size()) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\n':
        end_record();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      default:
        field += c;
        field_started = true;
        break;
    }
    ++i;
  }
  if (in_quotes) throw FormatError("csv ends inside a quoted field");
  end_record();
  return records;
}

}  // namespace

Schema Schema::make(std::vector<VariableSpec> vars) {
  Schema s;
  std::set<std::string> names;
  for (const auto& v : vars) {
    if (v.name.empty()) throw FormatError("variable with empty name");
    if (!names.insert(v.name).second) throw FormatError("duplicate variable '" + v.name + "'");
    if (v.levels.empty()) throw FormatError("variable '" + v.name + "' has no levels");
    std::set<std::string> seen;
    for (const auto& l : v.levels) {
      if (!seen.insert(l).second) {
        throw FormatError("variable '" + v.name + "' repeats level '" + l + "'");
      }
    }
    for (const auto& m : v.missing_tokens) {
      if (seen.count(m)) {
        throw FormatError("variable '" + v.name + "': token '" + m +
                          "' is both a level and a missing token");
      }
    }
  }
  s.vars_ = std::move(vars);
  return s;
}

Schema Schema::parse(const std::string& text) {
  std::vector<VariableSpec> vars;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::string line = strip(raw);
    if (line.empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw FormatError("schema line " + std::to_string(line_no) + ": expected 'name: levels'");
    }
    VariableSpec spec;
    spec.name = strip(line.substr(0, colon));
    std::istringstream rest(line.substr(colon + 1));
    std::string levels_token, extra;
    rest >> levels_token;
    if (spec.name.empty() || levels_token.empty()) {
      throw FormatError("schema line " + std::to_string(line_no) + ": expected 'name: levels'");
    }
    spec.levels = split_on(levels_token, ',');
    for (const auto& l : spec.levels) {
      if (l.empty()) {
        throw FormatError("schema line " + std::to_string(line_no) + ": empty level");
      }
    }
    std::string clause;
    while (rest >> clause) {
      if (clause.rfind("missing=", 0) == 0) {
        spec.missing_tokens = split_on(clause.substr(8), '|');
      } else {
        throw FormatError("schema line " + std::to_string(line_no) + ": unknown clause '" +
                          clause + "'");
      }
    }
    vars.push_back(std::move(spec));
  }
  return make(std::move(vars));
}

Schema Schema::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open schema file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string Schema::format() const {
  std::string out;
  for (const auto& v : vars_) {
    for (const auto& l : v.levels) {
      if (l.find_first_of(", \t#|") != std::string::npos) {
        throw FormatError("level '" + l + "' of '" + v.name + "' cannot be written to text");
      }
    }
    out += v.name + ": ";
    for (size_t i = 0; i < v.levels.size(); ++i) {
      if (i) out += ",";
      out += v.levels[i];
    }
    if (v.missing_tokens != std::vector<std::string>{"", "NA"}) {
      out += " missing=";
      for (size_t i = 0; i < v.missing_tokens.size(); ++i) {
        if (i) out += "|";
        out += v.missing_tokens[i];
      }
    }
    out += "\n";
  }
  return out;
}

void Schema::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write schema file '" + path + "'");
  out << format();
}

int Schema::index_of(const std::string& name) const {
  auto i = find(name);
  if (!i) throw MissingColumn("no column '" + name + "'");
  return *i;
}

std::optional<int> Schema::find(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (vars_[i].name == name) return i;
  return std::nullopt;
}

int Schema::level_code(int var, const std::string& token) const {
  const auto& levels = vars_[var].levels;
  for (size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == token) return static_cast<int>(i);
  }
  throw UnknownLevel("column '" + vars_[var].name + "': unknown level '" + token + "'");
}

bool Schema::is_missing_token(int var, const std::string& token) const {
  const auto& toks = vars_[var].missing_tokens;
  return std::find(toks.begin(), toks.end(), token) != toks.end();
}

Dataset::Dataset(Schema schema) : schema_(std::move(schema)) {
  columns_.resize(schema_.size());
}

Dataset Dataset::parse_csv(const std::string& text, const Schema& schema) {
  auto records = read_records(text);
  if (records.empty()) throw FormatError("csv has no header row");
  const auto& header = records[0];

  // Header must be a permutation of the schema names.
  std::vector<int> col_of_var(schema.size(), -1);
  for (size_t c = 0; c < header.size(); ++c) {
    auto var = schema.find(header[c]);
    if (!var) throw FormatError("csv header names unknown column '" + header[c] + "'");
    if (col_of_var[*var] != -1) {
      throw FormatError("csv header repeats column '" + header[c] + "'");
    }
    col_of_var[*var] = static_cast<int>(c);
  }
  for (int v = 0; v < schema.size(); ++v) {
    if (col_of_var[v] == -1) throw MissingColumn("no column '" + schema.var(v).name + "'");
  }

  Dataset d(schema);
  std::vector<int32_t> codes(schema.size());
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw RaggedRow("csv row " + std::to_string(r) + " has " + std::to_string(rec.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    for (int v = 0; v < schema.size(); ++v) {
      const std::string& token = rec[col_of_var[v]];
      if (schema.is_missing_token(v, token)) {
        codes[v] = kMissing;
      } else {
        try {
          codes[v] = schema.level_code(v, token);
        } catch (const UnknownLevel&) {
          throw UnknownLevel("csv row " + std::to_string(r) + ", column '" + schema.var(v).name +
                             "': unknown level '" + token + "'");
        }
      }
    }
    d.append_row(codes);
  }
  return d;
}

Dataset Dataset::load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open csv file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

std::string Dataset::format_csv() const {
  std::string out;
  for (int v = 0; v < schema_.size(); ++v) {
    if (v) out += ",";
    out += quote_field(schema_.var(v).name);
  }
  out += "\n";
  for (size_t r = 0; r < rows_; ++r) {
    for (int v = 0; v < schema_.size(); ++v) {
      if (v) out += ",";
      int32_t code = columns_[v][r];
      if (code == kMissing) {
        out += quote_field(schema_.var(v).missing_tokens.empty()
                               ? std::string{}
                               : schema_.var(v).missing_tokens.front());
      } else {
        out += quote_field(schema_.var(v).levels[code]);
      }
    }
    out += "\n";
  }
  return out;
}

void Dataset::save_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write csv file '" + path + "'");
  out << format_csv();
}

void Dataset::set_cell(size_t row, int var, int32_t code) {
  if (code != kMissing) {
    if (code < 0 || code >= static_cast<int32_t>(schema_.var(var).levels.size())) {
      throw UnknownLevel("column '" + schema_.var(var).name + "': level code out of range");
    }
  }
  columns_[var][row] = code;
}

void Dataset::set_weight(size_t row, double w) {
  if (!(w >= 0.0)) throw InvalidArgument("row weight must be nonnegative");
  weights_[row] = w;
}

double Dataset::total_weight() const {
  double t = 0.0;
  for (double w : weights_) t += w;
  return t;
}

void Dataset::append_row(const std::vector<int32_t>& codes, double weight) {
  if (codes.size() != static_cast<size_t>(schema_.size())) {
    throw RaggedRow("appended row has " + std::to_string(codes.size()) + " cells, expected " +
                    std::to_string(schema_.size()));
  }
  if (!(weight >= 0.0)) throw InvalidArgument("row weight must be nonnegative");
  for (int v = 0; v < schema_.size(); ++v) {
    int32_t code = codes[v];
    if (code != kMissing &&
        (code < 0 || code >= static_cast<int32_t>(schema_.var(v).levels.size()))) {
      throw UnknownLevel("column '" + schema_.var(v).name + "': level code out of range");
    }
    columns_[v].push_back(code);
  }
  weights_.push_back(weight);
  ++rows_;
}

void Dataset::designate_cohort(const std::string& name) {
  int var = schema_.index_of(name);
  for (size_t r = 0; r < rows_; ++r) {
    if (columns_[var][r] == kMissing) {
      throw NoCohortColumn("cohort column '" + name + "' has a missing cell at row " +
                           std::to_string(r + 1));
    }
  }
  cohort_ = name;
}

bool Dataset::row_complete_on(size_t row, const std::vector<int>& vars) const {
  for (int v : vars) {
    if (columns_[v][row] == kMissing) return false;
  }
  return true;
}

bool Dataset::complete_on(const std::vector<int>& vars) const {
  for (size_t r = 0; r < rows_; ++r) {
    if (!row_complete_on(r, vars)) return false;
  }
  return true;
}

Dataset Dataset::drop_incomplete(const std::vector<int>& vars) const {
  std::vector<size_t> keep;
  for (size_t r = 0; r < rows_; ++r) {
    if (row_complete_on(r, vars)) keep.push_back(r);
  }
  return select_rows(keep);
}

Dataset Dataset::select_rows(const std::vector<size_t>& rows) const {
  Dataset out(schema_);
  out.cohort_ = cohort_;
  for (auto& col : out.columns_) col.reserve(rows.size());
  std::vector<int32_t> codes(schema_.size());
  for (size_t r : rows) {
    for (int v = 0; v < schema_.size(); ++v) codes[v] = columns_[v][r];
    out.append_row(codes, weights_[r]);
  }
  return out;
}

Dataset derive_indicators(const Dataset& d, const MGraph& g) {
  const Schema& schema = d.schema();

  // Indicator column name per partially observed node, plus its source.
  std::vector<std::pair<std::string, int>> indicator_source;  // (column name, source var)
  for (int i = 0; i < g.node_count(); ++i) {
    if (g.role(i).kind != RoleKind::PartiallyObserved) continue;
    auto src = schema.find(g.name(i));
    if (!src) throw MissingColumn("no column '" + g.name(i) + "'");
    auto r = g.indicator_of(i);
    std::string col = r ? g.name(*r) : "R_" + g.name(i);
    indicator_source.emplace_back(col, *src);
  }

  std::vector<VariableSpec> vars = schema.vars();
  for (const auto& [col, src] : indicator_source) {
    (void)src;
    if (!schema.find(col)) {
      vars.push_back(VariableSpec{col, {"0", "1"}, {"", "NA"}});
    }
  }
  Schema extended = Schema::make(std::move(vars));

  Dataset out(extended);
  std::vector<int32_t> codes(extended.size());
  for (size_t r = 0; r < d.row_count(); ++r) {
    for (int v = 0; v < schema.size(); ++v) codes[v] = d.cell(r, v);
    for (int v = schema.size(); v < extended.size(); ++v) codes[v] = 0;
    for (const auto& [col, src] : indicator_source) {
      int dst = extended.index_of(col);
      int zero = extended.level_code(dst, "0");
      int one = extended.level_code(dst, "1");
      codes[dst] = d.cell(r, src) == kMissing ? one : zero;
    }
    out.append_row(codes, d.weight(r));
  }
  if (d.cohort_column()) out.designate_cohort(*d.cohort_column());
  return out;
}

std::pair<Dataset, Dataset> split_train_test(
    const Dataset& d, const std::map<std::string, double>& train_frac_per_cohort, uint64_t seed) {
  if (!d.cohort_column()) throw NoCohortColumn("dataset has no designated cohort column");
  int cvar = d.schema().index_of(*d.cohort_column());
  const auto& levels = d.schema().var(cvar).levels;

  std::vector<std::vector<size_t>> rows_of(levels.size());
  for (size_t r = 0; r < d.row_count(); ++r) {
    int32_t code = d.cell(r, cvar);
    if (code == kMissing) {
      throw NoCohortColumn("cohort column '" + *d.cohort_column() + "' has a missing cell at row " +
                           std::to_string(r + 1));
    }
    rows_of[code].push_back(r);
  }

  std::vector<char> to_train(d.row_count(), 0);
  for (size_t code = 0; code < levels.size(); ++code) {
    if (rows_of[code].empty()) continue;
    auto it = train_frac_per_cohort.find(levels[code]);
    if (it == train_frac_per_cohort.end()) {
      throw InvalidArgument("no train fraction for cohort '" + levels[code] + "'");
    }
    double frac = it->second;
    if (!(frac >= 0.0 && frac <= 1.0)) {
      throw InvalidArgument("train fraction for cohort '" + levels[code] + "' outside [0, 1]");
    }
    std::vector<size_t> rows = rows_of[code];
    Rng rng(mix_seed(seed, code));
    rng.shuffle(rows);
    size_t take = static_cast<size_t>(std::floor(frac * static_cast<double>(rows.size())));
    for (size_t i = 0; i < take; ++i) to_train[rows[i]] = 1;
  }

  std::vector<size_t> train_rows, test_rows;
  for (size_t r = 0; r < d.row_count(); ++r) {
    (to_train[r] ? train_rows : test_rows).push_back(r);
  }
  return {d.select_rows(train_rows), d.select_rows(test_rows)};
}

}  // namespace causalnet
