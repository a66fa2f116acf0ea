// Copyright 2026 The matbandit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "matbandit/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace matbandit {

namespace {

using Value = nlohmann::json;

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::map<std::string, std::pair<Value, int>> parse_file() {
    std::map<std::string, std::pair<Value, int>> out;
    for (;;) {
      skip_space(true);
      if (at_end()) break;
      const int line = line_;
      const std::string key = parse_identifier();
      skip_space(false);
      expect('=');
      skip_space(false);
      Value v = parse_value();
      skip_space(false);
      if (!at_end() && peek() != '\n') fail("expected end of line after value");
      if (out.count(key) != 0) fail("duplicate key '" + key + "'", line);
      out.emplace(key, std::make_pair(std::move(v), line));
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& what, int line = -1) const {
    throw ConfigError("config line " + std::to_string(line < 0 ? line_ : line) + ": " + what);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  char take() {
    const char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    take();
  }

  // Skips blanks and comments; newlines only when `newlines` is set.
  void skip_space(bool newlines) {
    while (!at_end()) {
      const char c = peek();
      if (c == '#') {
        while (!at_end() && peek() != '\n') take();
      } else if (c == ' ' || c == '\t' || c == '\r' || (newlines && c == '\n')) {
        take();
      } else {
        break;
      }
    }
  }

  std::string parse_identifier() {
    std::string id;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
      id.push_back(take());
    }
    if (id.empty()) fail("expected a key");
    return id;
  }

  Value parse_value() {
    if (at_end()) fail("missing value");
    const char c = peek();
    if (c == '[' || c == '(') return parse_sequence(c == '[' ? ']' : ')');
    if (c == '{') return parse_table();
    if (c == '"') return parse_string();
    return parse_scalar();
  }

  Value parse_sequence(char close) {
    take();
    Value out = Value::array();
    skip_space(true);
    if (!at_end() && peek() == close) {
      take();
      return out;
    }
    for (;;) {
      skip_space(true);
      out.push_back(parse_value());
      skip_space(true);
      if (at_end()) fail("unterminated list");
      const char c = take();
      if (c == close) return out;
      if (c != ',') fail("expected ',' or closing bracket");
      skip_space(true);
      if (!at_end() && peek() == close) {
        take();
        return out;
      }
    }
  }

  Value parse_table() {
    take();
    Value out = Value::object();
    skip_space(true);
    if (!at_end() && peek() == '}') {
      take();
      return out;
    }
    for (;;) {
      skip_space(true);
      const std::string key = parse_identifier();
      skip_space(true);
      expect('=');
      skip_space(true);
      if (out.contains(key)) fail("duplicate table key '" + key + "'");
      out[key] = parse_value();
      skip_space(true);
      if (at_end()) fail("unterminated table");
      const char c = take();
      if (c == '}') return out;
      if (c != ',') fail("expected ',' or '}'");
    }
  }

  Value parse_string() {
    take();
    std::string s;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = take();
      if (c == '"') return s;
      if (c == '\\') {
        if (at_end()) fail("unterminated string");
        const char e = take();
        s.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
      } else {
        s.push_back(c);
      }
    }
  }

  Value parse_scalar() {
    std::string tok;
    while (!at_end()) {
      const char c = peek();
      if (c == ',' || c == ']' || c == ')' || c == '}' || c == '#' || c == '\n' ||
          std::isspace(static_cast<unsigned char>(c))) {
        break;
      }
      tok.push_back(take());
    }
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.empty()) fail("missing value");
    const bool integral = tok.find_first_of(".eE") == std::string::npos && tok != "inf" &&
                          tok != "nan";
    try {
      std::size_t used = 0;
      if (integral) {
        if (tok[0] == '-') {
          const long long v = std::stoll(tok, &used);
          if (used == tok.size()) return v;
        } else {
          const unsigned long long v = std::stoull(tok, &used);
          if (used == tok.size()) return v;
        }
      } else {
        const double v = std::stod(tok, &used);
        if (used == tok.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("cannot parse value '" + tok + "' (strings need double quotes)");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

struct Field {
  const Value& v;
  std::string key;
  int line;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line) + ": " + key + ": " + what);
  }

  double number() const {
    if (!v.is_number()) fail("expected a number");
    return v.get<double>();
  }

  long integer() const {
    if (!v.is_number_integer() && !v.is_number_unsigned()) fail("expected an integer");
    return v.get<long>();
  }

  std::uint64_t seed() const {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    fail("expected a nonnegative integer");
  }

  bool boolean() const {
    if (!v.is_boolean()) fail("expected true or false");
    return v.get<bool>();
  }

  std::string string() const {
    if (!v.is_string()) fail("expected a double-quoted string");
    return v.get<std::string>();
  }

  std::vector<double> numbers() const {
    if (!v.is_array()) fail("expected a list of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail("expected a list of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<long> integers() const {
    if (!v.is_array()) fail("expected a list of integers");
    std::vector<long> out;
    for (const auto& e : v) {
      if (!e.is_number_integer() && !e.is_number_unsigned()) fail("expected a list of integers");
      out.push_back(e.get<long>());
    }
    return out;
  }
};

std::vector<InferenceTarget> parse_targets(const Field& f, int d1, int d2) {
  if (!f.v.is_array()) f.fail("expected a list of target tables");
  std::vector<InferenceTarget> out;
  std::set<std::string> labels;
  for (std::size_t k = 0; k < f.v.size(); ++k) {
    const Value& t = f.v[k];
    if (!t.is_object()) f.fail("each target must be a table {label = ..., entries = [...]}");
    for (const auto& [name, _] : t.items()) {
      if (name != "label" && name != "entries") f.fail("unknown target key '" + name + "'");
    }
    std::string label = "T" + std::to_string(k + 1);
    if (t.contains("label")) label = Field{t["label"], f.key + ".label", f.line}.string();
    if (!labels.insert(label).second) f.fail("duplicate target label '" + label + "'");
    if (!t.contains("entries") || !t["entries"].is_array() || t["entries"].empty()) {
      f.fail("target '" + label + "' needs a nonempty entries list");
    }
    std::vector<TargetEntry> entries;
    for (const auto& e : t["entries"]) {
      if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
          !e[1].is_number_integer() || !e[2].is_number()) {
        f.fail("entries must be (row, col, weight) with 1-based integer indices");
      }
      const long row = e[0].get<long>();
      const long col = e[1].get<long>();
      if (row < 1 || row > d1 || col < 1 || col > d2) {
        f.fail("entry (" + std::to_string(row) + ", " + std::to_string(col) +
               ") lies outside the " + std::to_string(d1) + " x " + std::to_string(d2) +
               " matrix");
      }
      entries.push_back(TargetEntry{static_cast<int>(row - 1), static_cast<int>(col - 1),
                                    e[2].get<double>()});
    }
    out.push_back(InferenceTarget::from_entries(d1, d2, entries, label));
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

template <typename T, typename F>
std::string fmt_list(const std::vector<T>& v, F&& fmt) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k > 0) s += ", ";
    s += fmt(v[k]);
  }
  return s + "]";
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  const auto fields = Parser(text).parse_file();
  ExperimentConfig c = default_experiment_config();

  static const std::set<std::string> kKnown = {
      "d1", "d2", "r", "n", "epsilon", "sigma_0", "sigma_1", "singular_values_0",
      "singular_values_1", "step_c", "step_alpha", "step_t_star", "init_n0", "init_lambda",
      "init_max_iter", "init_tol", "targets", "level", "n_trials", "base_seed", "truth_seed",
      "resample_truth", "threads", "checkpoints", "sd_checkpoints", "oracle_samples",
      "output_path", "output_format"};
  for (const auto& [key, entry] : fields) {
    if (kKnown.count(key) == 0) {
      throw ConfigError("config line " + std::to_string(entry.second) + ": unknown key '" + key +
                        "'");
    }
  }
  auto get = [&](const std::string& key) -> std::optional<Field> {
    const auto it = fields.find(key);
    if (it == fields.end()) return std::nullopt;
    return Field{it->second.first, key, it->second.second};
  };

  if (auto f = get("d1")) c.truth.d1 = static_cast<int>(f->integer());
  if (auto f = get("d2")) c.truth.d2 = static_cast<int>(f->integer());
  if (auto f = get("r")) c.truth.r = static_cast<int>(f->integer());
  if (auto f = get("n")) c.n = f->integer();
  if (auto f = get("epsilon")) c.epsilon = f->number();
  if (auto f = get("sigma_0")) c.truth.sigma_0 = f->number();
  if (auto f = get("sigma_1")) c.truth.sigma_1 = f->number();
  if (auto f = get("singular_values_0")) c.truth.singular_values_0 = f->numbers();
  if (auto f = get("singular_values_1")) c.truth.singular_values_1 = f->numbers();
  if (auto f = get("step_c")) c.schedule.c = f->number();
  if (auto f = get("step_alpha")) c.schedule.alpha = f->number();
  if (auto f = get("step_t_star")) c.schedule.t_star = f->number();
  if (auto f = get("init_n0")) c.init.n0 = f->integer();
  if (auto f = get("init_lambda")) {
    if (f->v.is_string()) {
      if (f->string() != "auto") f->fail("expected a number or \"auto\"");
      c.init.lambda.reset();
    } else {
      c.init.lambda = f->number();
    }
  }
  if (auto f = get("init_max_iter")) c.init.max_iter = static_cast<int>(f->integer());
  if (auto f = get("init_tol")) c.init.tol = f->number();
  if (auto f = get("level")) c.level = f->number();
  if (auto f = get("n_trials")) c.n_trials = f->integer();
  if (auto f = get("base_seed")) c.base_seed = f->seed();
  if (auto f = get("truth_seed")) c.truth_seed = f->seed();
  if (auto f = get("resample_truth")) c.resample_truth = f->boolean();
  if (auto f = get("threads")) c.threads = static_cast<int>(f->integer());
  if (auto f = get("checkpoints")) c.checkpoints = f->integers();
  if (auto f = get("sd_checkpoints")) c.sd_checkpoints = f->integers();
  if (auto f = get("oracle_samples")) c.oracle_samples = f->integer();
  if (auto f = get("output_path")) c.output_path = f->string();
  if (auto f = get("output_format")) c.output_format = f->string();

  if (auto f = get("targets")) {
    c.targets = parse_targets(*f, c.truth.d1, c.truth.d2);
  } else {
    c.targets = {single_entry_target(c.truth.d1, c.truth.d2)};
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto dbl = [](double v) { return fmt_double(v); };
  auto lng = [](long v) { return std::to_string(v); };
  o << "d1 = " << c.truth.d1 << "\n"
    << "d2 = " << c.truth.d2 << "\n"
    << "r = " << c.truth.r << "\n"
    << "n = " << c.n << "\n"
    << "epsilon = " << fmt_double(c.epsilon) << "\n"
    << "sigma_0 = " << fmt_double(c.truth.sigma_0) << "\n"
    << "sigma_1 = " << fmt_double(c.truth.sigma_1) << "\n"
    << "singular_values_0 = " << fmt_list(c.truth.singular_values_0, dbl) << "\n"
    << "singular_values_1 = " << fmt_list(c.truth.singular_values_1, dbl) << "\n"
    << "step_c = " << fmt_double(c.schedule.c) << "\n"
    << "step_alpha = " << fmt_double(c.schedule.alpha) << "\n"
    << "step_t_star = " << fmt_double(c.schedule.t_star) << "\n"
    << "init_n0 = " << c.init.n0 << "\n"
    << "init_lambda = " << (c.init.lambda ? fmt_double(*c.init.lambda) : "\"auto\"") << "\n"
    << "init_max_iter = " << c.init.max_iter << "\n"
    << "init_tol = " << fmt_double(c.init.tol) << "\n"
    << "level = " << fmt_double(c.level) << "\n"
    << "n_trials = " << c.n_trials << "\n"
    << "base_seed = " << c.base_seed << "\n"
    << "truth_seed = " << c.truth_seed << "\n"
    << "resample_truth = " << (c.resample_truth ? "true" : "false") << "\n"
    << "threads = " << c.threads << "\n"
    << "checkpoints = " << fmt_list(c.checkpoints, lng) << "\n"
    << "sd_checkpoints = " << fmt_list(c.sd_checkpoints, lng) << "\n"
    << "oracle_samples = " << c.oracle_samples << "\n"
    << "output_path = " << quote(c.output_path) << "\n"
    << "output_format = " << quote(c.output_format) << "\n";
  o << "targets = [";
  for (std::size_t k = 0; k < c.targets.size(); ++k) {
    if (k > 0) o << ",\n  ";
    o << "{label = " << quote(c.targets[k].label) << ", entries = [";
    const auto entries = c.targets[k].entries();
    for (std::size_t j = 0; j < entries.size(); ++j) {
      if (j > 0) o << ", ";
      o << "(" << entries[j].row + 1 << ", " << entries[j].col + 1 << ", "
        << fmt_double(entries[j].weight) << ")";
    }
    o << "]}";
  }
  o << "]\n";
  return o.str();
}

}  // namespace matbandit
