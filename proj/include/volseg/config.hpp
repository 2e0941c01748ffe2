// Copyright 2026 The VolSeg Authors. All Rights Reserved.
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
//
// Hierarchical experiment configuration. Every pipeline option lives in a
// flat schema of uppercase dotted keys with typed defaults; files written in
// a small YAML subset overlay the defaults, command-line overrides overlay the
// file, and the fully resolved config dumps to canonical text that reloads
// to an equal value. Unknown keys are rejected with a nearest-key hint so
// typos fail loudly instead of silently running defaults.

#ifndef VOLSEG_CONFIG_HPP_
#define VOLSEG_CONFIG_HPP_

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "volseg/errors.hpp"
#include "volseg/version.hpp"

namespace volseg {

enum class ValueType {
  kBool,
  kInt,
  kFloat,
  kString,
  kIntList,
  kFloatList,
  kStringList,
  kIntListList,
  kFloatListList,
  kStringListList,
};

inline const char* value_type_name(ValueType t) {
  switch (t) {
    case ValueType::kBool: return "bool";
    case ValueType::kInt: return "int";
    case ValueType::kFloat: return "float";
    case ValueType::kString: return "string";
    case ValueType::kIntList: return "list<int>";
    case ValueType::kFloatList: return "list<float>";
    case ValueType::kStringList: return "list<string>";
    case ValueType::kIntListList: return "list<list<int>>";
    case ValueType::kFloatListList: return "list<list<float>>";
    default: return "list<list<string>>";
  }
}

// A typed config value. The variant index always agrees with `type`.
struct ConfigValue {
  ValueType type = ValueType::kBool;
  std::variant<bool, std::int64_t, double, std::string,
               std::vector<std::int64_t>, std::vector<double>,
               std::vector<std::string>, std::vector<std::vector<std::int64_t>>,
               std::vector<std::vector<double>>,
               std::vector<std::vector<std::string>>>
      data = false;

  friend bool operator==(const ConfigValue&, const ConfigValue&) = default;

  static ConfigValue of(bool v) { return {ValueType::kBool, v}; }
  static ConfigValue of(std::int64_t v) { return {ValueType::kInt, v}; }
  static ConfigValue of(int v) { return of(static_cast<std::int64_t>(v)); }
  static ConfigValue of(double v) { return {ValueType::kFloat, v}; }
  static ConfigValue of(const char* v) {
    return {ValueType::kString, std::string(v)};
  }
  static ConfigValue of(std::string v) {
    return {ValueType::kString, std::move(v)};
  }
  static ConfigValue of(std::vector<std::int64_t> v) {
    return {ValueType::kIntList, std::move(v)};
  }
  static ConfigValue of(std::vector<double> v) {
    return {ValueType::kFloatList, std::move(v)};
  }
  static ConfigValue of(std::vector<std::string> v) {
    return {ValueType::kStringList, std::move(v)};
  }
  static ConfigValue of(std::vector<std::vector<std::int64_t>> v) {
    return {ValueType::kIntListList, std::move(v)};
  }
  static ConfigValue of(std::vector<std::vector<double>> v) {
    return {ValueType::kFloatListList, std::move(v)};
  }
  static ConfigValue of(std::vector<std::vector<std::string>> v) {
    return {ValueType::kStringListList, std::move(v)};
  }
};

struct SchemaEntry {
  std::string key;
  ConfigValue default_value;
};

namespace detail {

inline std::vector<SchemaEntry> build_schema() {
  using IL = std::vector<std::int64_t>;
  using FL = std::vector<double>;
  using SL = std::vector<std::string>;
  using ILL = std::vector<std::vector<std::int64_t>>;
  using FLL = std::vector<std::vector<double>>;
  using SLL = std::vector<std::vector<std::string>>;

  std::vector<SchemaEntry> s;
  auto add = [&s](const char* key, ConfigValue v) {
    s.push_back({key, std::move(v)});
  };

  add("SCHEMA_VERSION", ConfigValue::of(std::int64_t{kSchemaVersion}));
  add("OUTPUT_PATH", ConfigValue::of("outputs"));

  add("SYSTEM.SEED", ConfigValue::of(std::int64_t{0}));
  add("SYSTEM.NUM_WORKERS", ConfigValue::of(std::int64_t{1}));

  add("DATASET.IMAGE_PATH", ConfigValue::of(""));
  add("DATASET.LABEL_PATH", ConfigValue::of(""));
  add("DATASET.TILE_METADATA_PATH", ConfigValue::of(""));
  add("DATASET.SAMPLE_SIZE", ConfigValue::of(IL{8, 64, 64}));
  add("DATASET.SPLIT_FRACTIONS", ConfigValue::of(FL{0.4, 0.1, 0.5}));
  add("DATASET.REJECT_PROB", ConfigValue::of(0.95));
  add("DATASET.REJECT_MIN_FOREGROUND", ConfigValue::of(std::int64_t{1}));
  add("DATASET.REJECT_MAX_ATTEMPTS", ConfigValue::of(std::int64_t{100}));
  add("DATASET.CHUNK_SIZE", ConfigValue::of(IL{17, 257, 257}));
  add("DATASET.CHUNK_OVERLAP", ConfigValue::of(IL{1, 1, 1}));

  add("AUGMENTOR.ORDER",
      ConfigValue::of(SL{"grayscale", "missing_part", "misalignment",
                         "rescale", "flip", "transpose"}));
  add("AUGMENTOR.GRAYSCALE.ENABLED", ConfigValue::of(true));
  add("AUGMENTOR.GRAYSCALE.P", ConfigValue::of(0.5));
  add("AUGMENTOR.GRAYSCALE.BRIGHTNESS", ConfigValue::of(FL{-0.1, 0.1}));
  add("AUGMENTOR.GRAYSCALE.CONTRAST", ConfigValue::of(FL{0.9, 1.1}));
  add("AUGMENTOR.GRAYSCALE.GAMMA", ConfigValue::of(FL{0.8, 1.25}));
  add("AUGMENTOR.GRAYSCALE.INVERT_PROB", ConfigValue::of(0.0));
  add("AUGMENTOR.MISSING_PART.ENABLED", ConfigValue::of(false));
  add("AUGMENTOR.MISSING_PART.P", ConfigValue::of(0.5));
  add("AUGMENTOR.MISSING_PART.NUM_REGIONS", ConfigValue::of(std::int64_t{1}));
  add("AUGMENTOR.MISSING_PART.MAX_EXTENT_FRACTION", ConfigValue::of(0.5));
  add("AUGMENTOR.MISSING_PART.FILL_MODE", ConfigValue::of("mean"));
  add("AUGMENTOR.MISSING_PART.FILL_VALUE", ConfigValue::of(std::int64_t{128}));
  add("AUGMENTOR.MISALIGNMENT.ENABLED", ConfigValue::of(false));
  add("AUGMENTOR.MISALIGNMENT.P", ConfigValue::of(0.5));
  add("AUGMENTOR.MISALIGNMENT.MAX_SHIFT_PX", ConfigValue::of(std::int64_t{4}));
  add("AUGMENTOR.MISALIGNMENT.ROTATE", ConfigValue::of(false));
  add("AUGMENTOR.MISALIGNMENT.MAX_ROTATE_DEG", ConfigValue::of(10.0));
  add("AUGMENTOR.RESCALE.ENABLED", ConfigValue::of(false));
  add("AUGMENTOR.RESCALE.P", ConfigValue::of(0.5));
  add("AUGMENTOR.RESCALE.SCALE_RANGE", ConfigValue::of(FL{0.8, 1.25}));
  add("AUGMENTOR.RESCALE.THREE_D", ConfigValue::of(false));
  add("AUGMENTOR.FLIP.ENABLED", ConfigValue::of(true));
  add("AUGMENTOR.FLIP.P", ConfigValue::of(0.5));
  add("AUGMENTOR.TRANSPOSE.ENABLED", ConfigValue::of(true));
  add("AUGMENTOR.TRANSPOSE.P", ConfigValue::of(0.5));

  add("MODEL.TARGET_OPT", ConfigValue::of(SL{"binary"}));
  add("MODEL.TARGET_WEIGHT", ConfigValue::of(FL{1.0}));
  add("MODEL.LOSS_OPTION", ConfigValue::of(SLL{{"weighted_bce", "dice"}}));
  add("MODEL.LOSS_WEIGHT", ConfigValue::of(FLL{{1.0, 1.0}}));
  add("MODEL.OUTPUT_ACT", ConfigValue::of(SL{"sigmoid"}));
  add("MODEL.OUT_PLANES", ConfigValue::of(std::int64_t{1}));
  add("MODEL.WEIGHT_OPT", ConfigValue::of("none"));
  add("MODEL.DISTANCE_ALPHA", ConfigValue::of(8.0));
  add("MODEL.DISTANCE_BETA", ConfigValue::of(50.0));
  add("MODEL.DISTANCE_CLAMP", ConfigValue::of(true));
  add("MODEL.CONTOUR_RADIUS", ConfigValue::of(std::int64_t{1}));
  add("MODEL.CONTOUR_CONNECTIVITY", ConfigValue::of(std::int64_t{26}));
  add("MODEL.AFFINITY_OFFSETS",
      ConfigValue::of(ILL{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));

  add("INFERENCE.WINDOW_SIZE", ConfigValue::of(IL{8, 64, 64}));
  add("INFERENCE.STRIDE", ConfigValue::of(IL{4, 32, 32}));
  add("INFERENCE.BLEND", ConfigValue::of("cosine"));
  add("INFERENCE.TTA", ConfigValue::of(false));
  add("INFERENCE.CHUNKED", ConfigValue::of(false));
  add("INFERENCE.PREDICTOR", ConfigValue::of("echo"));
  add("INFERENCE.PREDICTOR_ENDPOINT", ConfigValue::of(""));
  add("INFERENCE.PREDICTOR_CONSTANT", ConfigValue::of(0.5));
  add("INFERENCE.PREDICTOR_TIMEOUT_S", ConfigValue::of(60.0));
  add("INFERENCE.OUTPUT_NAME", ConfigValue::of("pred"));

  add("DECODE.MODE", ConfigValue::of("semantic"));
  add("DECODE.INPUT_PATH", ConfigValue::of(""));
  add("DECODE.OUTPUT_NAME", ConfigValue::of("labels"));
  add("DECODE.SEMANTIC_THRESHOLD", ConfigValue::of(0.5));
  add("DECODE.SEED_THRESHOLD", ConfigValue::of(0.9));
  add("DECODE.CONTOUR_THRESHOLD", ConfigValue::of(0.8));
  add("DECODE.FOREGROUND_THRESHOLD", ConfigValue::of(0.85));
  add("DECODE.DISTANCE_THRESHOLD", ConfigValue::of(0.5));
  add("DECODE.MIN_INSTANCE_VOXELS", ConfigValue::of(std::int64_t{128}));
  add("DECODE.CONNECTIVITY", ConfigValue::of(std::int64_t{6}));
  add("DECODE.MEDIAN_ENABLED", ConfigValue::of(false));
  add("DECODE.MEDIAN_KERNEL", ConfigValue::of(IL{7, 7, 7}));

  add("EVAL.METRICS", ConfigValue::of(SL{"iou"}));
  add("EVAL.PRED_PATH", ConfigValue::of(""));
  add("EVAL.GT_PATH", ConfigValue::of(""));
  add("EVAL.AP_THRESHOLDS", ConfigValue::of(FL{0.5, 0.75}));

  add("EXPORT.INPUT_PATH", ConfigValue::of(""));
  add("EXPORT.DIR", ConfigValue::of(""));
  add("EXPORT.AXIS", ConfigValue::of(std::int64_t{0}));
  add("EXPORT.CHANNEL", ConfigValue::of(std::int64_t{0}));

  return s;
}

}  // namespace detail

inline const std::vector<SchemaEntry>& config_schema() {
  static const std::vector<SchemaEntry> schema = detail::build_schema();
  return schema;
}

namespace detail {

inline const std::map<std::string, std::size_t>& schema_index() {
  static const std::map<std::string, std::size_t> index = [] {
    std::map<std::string, std::size_t> m;
    const auto& s = config_schema();
    for (std::size_t i = 0; i < s.size(); ++i) m[s[i].key] = i;
    return m;
  }();
  return index;
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                         diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::string nearest_key(const std::string& key) {
  std::string best;
  std::size_t best_dist = std::numeric_limits<std::size_t>::max();
  for (const auto& entry : config_schema()) {
    const std::size_t d = levenshtein(key, entry.key);
    if (d < best_dist) {
      best_dist = d;
      best = entry.key;
    }
  }
  return best;
}

[[noreturn]] inline void throw_unknown_key(const std::string& key) {
  throw ConfigError("unknown config key '" + key + "'; did you mean '" +
                    nearest_key(key) + "'?");
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline bool parse_int64(std::string_view s, std::int64_t& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

inline bool parse_f64(std::string_view s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc{} && res.ptr == end && std::isfinite(out);
}

// Strings that can be dumped without quotes: identifier-ish tokens and
// paths. Anything else (numbers, booleans, spaces, punctuation) is quoted
// so reloading cannot reinterpret it.
inline bool bare_string_safe(const std::string& s) {
  if (s.empty() || s == "true" || s == "false") return false;
  auto head = [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '/';
  };
  auto body = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '.' || c == '/' || c == '+' || c == '-';
  };
  if (!head(s[0])) return false;
  return std::all_of(s.begin(), s.end(), body);
}

inline std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

inline std::string render_string(const std::string& s) {
  return bare_string_safe(s) ? s : quote_string(s);
}

inline std::string render_value(const ConfigValue& v) {
  switch (v.type) {
    case ValueType::kBool:
      return std::get<bool>(v.data) ? "true" : "false";
    case ValueType::kInt:
      return std::to_string(std::get<std::int64_t>(v.data));
    case ValueType::kFloat:
      return format_double(std::get<double>(v.data));
    case ValueType::kString:
      return render_string(std::get<std::string>(v.data));
    default:
      break;
  }
  auto join = [](const auto& items, auto&& render) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ", ";
      out += render(items[i]);
    }
    out += "]";
    return out;
  };
  switch (v.type) {
    case ValueType::kIntList:
      return join(std::get<std::vector<std::int64_t>>(v.data),
                  [](std::int64_t x) { return std::to_string(x); });
    case ValueType::kFloatList:
      return join(std::get<std::vector<double>>(v.data), format_double);
    case ValueType::kStringList:
      return join(std::get<std::vector<std::string>>(v.data), render_string);
    case ValueType::kIntListList:
      return join(std::get<std::vector<std::vector<std::int64_t>>>(v.data),
                  [&](const std::vector<std::int64_t>& inner) {
                    return join(inner, [](std::int64_t x) {
                      return std::to_string(x);
                    });
                  });
    case ValueType::kFloatListList:
      return join(std::get<std::vector<std::vector<double>>>(v.data),
                  [&](const std::vector<double>& inner) {
                    return join(inner, format_double);
                  });
    default:
      return join(std::get<std::vector<std::vector<std::string>>>(v.data),
                  [&](const std::vector<std::string>& inner) {
                    return join(inner, render_string);
                  });
  }
}

// Untyped parse tree for the YAML subset. Typing happens later against the
// schema, so the parser stays oblivious to key semantics.
struct RawNode {
  enum class Kind { kScalar, kList, kMap };
  Kind kind = Kind::kScalar;
  std::string scalar;
  std::vector<RawNode> items;                          // kList
  std::vector<std::pair<std::string, RawNode>> entries;  // kMap
  int line = 0;
};

[[noreturn]] inline void parse_fail(int line, const std::string& what) {
  throw ConfigError("config parse error at line " + std::to_string(line) +
                    ": " + what);
}

struct SourceLine {
  int indent = 0;
  std::string content;
  int number = 0;
};

// Strips a trailing comment. '#' begins a comment at the start of a line or
// when preceded by whitespace, and never inside quotes.
inline std::string strip_comment(const std::string& line, int lineno) {
  std::string out;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == '\\' && quote == '"' && i + 1 < line.size()) {
        out += c;
        out += line[++i];
        continue;
      }
      if (c == quote) quote = 0;
      out += c;
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
      out += c;
      continue;
    }
    if (c == '#' && (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
      return out;
    }
    out += c;
  }
  if (quote) parse_fail(lineno, "unterminated quoted string");
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<SourceLine> split_source_lines(const std::string& text) {
  std::vector<SourceLine> lines;
  std::size_t start = 0;
  int number = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    std::string raw = text.substr(start, nl - start);
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.find('\t') != std::string::npos) {
      parse_fail(number, "tab character in indentation or content; use spaces");
    }
    const std::string stripped = strip_comment(raw, number);
    int indent = 0;
    while (indent < static_cast<int>(stripped.size()) &&
           stripped[static_cast<std::size_t>(indent)] == ' ') {
      ++indent;
    }
    const std::string content = trim(stripped);
    if (!content.empty()) lines.push_back({indent, content, number});
    if (nl == text.size()) break;
    start = nl + 1;
  }
  return lines;
}

// Parses one scalar token: quoted (with escapes for double quotes) or bare.
inline std::string parse_scalar_token(std::string_view s, int lineno) {
  if (s.empty()) return "";
  if (s[0] == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < s.size(); ++i) {
      const char c = s[i];
      if (c == '\\' && i + 1 < s.size()) {
        const char n = s[++i];
        switch (n) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: parse_fail(lineno, std::string("unknown escape '\\") + n + "'");
        }
        continue;
      }
      if (c == '"') break;
      out += c;
    }
    if (i >= s.size()) parse_fail(lineno, "unterminated quoted string");
    if (!trim(s.substr(i + 1)).empty()) {
      parse_fail(lineno, "unexpected text after quoted string");
    }
    return out;
  }
  if (s[0] == '\'') {
    const std::size_t end = s.find('\'', 1);
    if (end == std::string_view::npos) {
      parse_fail(lineno, "unterminated quoted string");
    }
    if (!trim(s.substr(end + 1)).empty()) {
      parse_fail(lineno, "unexpected text after quoted string");
    }
    return std::string(s.substr(1, end - 1));
  }
  return trim(s);
}

inline RawNode parse_flow_value(std::string_view s, std::size_t& pos, int lineno);

inline RawNode parse_flow_list(std::string_view s, std::size_t& pos, int lineno) {
  RawNode node;
  node.kind = RawNode::Kind::kList;
  node.line = lineno;
  ++pos;  // consume '['
  auto skip_ws = [&] {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  };
  skip_ws();
  if (pos < s.size() && s[pos] == ']') {
    ++pos;
    return node;
  }
  while (true) {
    skip_ws();
    node.items.push_back(parse_flow_value(s, pos, lineno));
    skip_ws();
    if (pos >= s.size()) parse_fail(lineno, "unterminated list");
    if (s[pos] == ',') {
      ++pos;
      continue;
    }
    if (s[pos] == ']') {
      ++pos;
      return node;
    }
    parse_fail(lineno, "expected ',' or ']' in list");
  }
}

inline RawNode parse_flow_value(std::string_view s, std::size_t& pos, int lineno) {
  if (pos < s.size() && s[pos] == '[') return parse_flow_list(s, pos, lineno);
  RawNode node;
  node.kind = RawNode::Kind::kScalar;
  node.line = lineno;
  if (pos < s.size() && (s[pos] == '"' || s[pos] == '\'')) {
    const char quote = s[pos];
    std::string out;
    std::size_t i = pos + 1;
    for (; i < s.size(); ++i) {
      const char c = s[i];
      if (quote == '"' && c == '\\' && i + 1 < s.size()) {
        const char n = s[++i];
        switch (n) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: parse_fail(lineno, std::string("unknown escape '\\") + n + "'");
        }
        continue;
      }
      if (c == quote) break;
      out += c;
    }
    if (i >= s.size()) parse_fail(lineno, "unterminated quoted string");
    pos = i + 1;
    node.scalar = out;
    return node;
  }
  const std::size_t start = pos;
  while (pos < s.size() && s[pos] != ',' && s[pos] != ']' && s[pos] != '[') ++pos;
  node.scalar = trim(s.substr(start, pos - start));
  return node;
}

// Parses a full value literal: a flow list "[...]" or a scalar. Used both
// for in-line map values and for command-line override literals.
inline RawNode parse_value_literal(const std::string& text, int lineno) {
  const std::string t = trim(text);
  if (!t.empty() && t[0] == '[') {
    std::size_t pos = 0;
    RawNode node = parse_flow_list(t, pos, lineno);
    if (!trim(std::string_view(t).substr(pos)).empty()) {
      parse_fail(lineno, "unexpected text after list");
    }
    return node;
  }
  RawNode node;
  node.kind = RawNode::Kind::kScalar;
  node.line = lineno;
  node.scalar = parse_scalar_token(t, lineno);
  return node;
}

inline RawNode parse_block_map(const std::vector<SourceLine>& lines,
                               std::size_t& i, int indent);

inline RawNode parse_block_sequence(const std::vector<SourceLine>& lines,
                                    std::size_t& i, int indent) {
  RawNode node;
  node.kind = RawNode::Kind::kList;
  node.line = lines[i].number;
  while (i < lines.size() && lines[i].indent == indent &&
         (lines[i].content == "-" || lines[i].content.rfind("- ", 0) == 0)) {
    const std::string item =
        lines[i].content == "-" ? "" : lines[i].content.substr(2);
    node.items.push_back(parse_value_literal(item, lines[i].number));
    ++i;
  }
  return node;
}

inline RawNode parse_block_map(const std::vector<SourceLine>& lines,
                               std::size_t& i, int indent) {
  RawNode node;
  node.kind = RawNode::Kind::kMap;
  node.line = i < lines.size() ? lines[i].number : 0;
  while (i < lines.size() && lines[i].indent == indent) {
    const SourceLine& line = lines[i];
    if (line.content.rfind("- ", 0) == 0 || line.content == "-") {
      parse_fail(line.number, "list item outside of a key context");
    }
    const std::size_t colon = line.content.find(':');
    if (colon == std::string::npos) {
      parse_fail(line.number, "expected 'KEY: value'");
    }
    const std::string key = trim(line.content.substr(0, colon));
    if (key.empty()) parse_fail(line.number, "empty key");
    const std::string rest = trim(line.content.substr(colon + 1));
    ++i;
    if (!rest.empty()) {
      node.entries.emplace_back(key, parse_value_literal(rest, line.number));
      continue;
    }
    if (i < lines.size() && lines[i].indent > indent) {
      const int child = lines[i].indent;
      if (lines[i].content == "-" || lines[i].content.rfind("- ", 0) == 0) {
        node.entries.emplace_back(key, parse_block_sequence(lines, i, child));
      } else {
        node.entries.emplace_back(key, parse_block_map(lines, i, child));
      }
      if (i < lines.size() && lines[i].indent > indent &&
          lines[i].indent != child) {
        parse_fail(lines[i].number, "inconsistent indentation");
      }
      continue;
    }
    RawNode empty;
    empty.kind = RawNode::Kind::kScalar;
    empty.line = line.number;
    node.entries.emplace_back(key, empty);
  }
  return node;
}

inline RawNode parse_yaml_subset(const std::string& text) {
  const auto lines = split_source_lines(text);
  if (lines.empty()) {
    RawNode node;
    node.kind = RawNode::Kind::kMap;
    return node;
  }
  if (lines[0].indent != 0) {
    parse_fail(lines[0].number, "top-level key must not be indented");
  }
  std::size_t i = 0;
  RawNode root = parse_block_map(lines, i, 0);
  if (i < lines.size()) {
    parse_fail(lines[i].number, "inconsistent indentation");
  }
  return root;
}

inline void flatten_raw(const RawNode& node, const std::string& prefix,
                        std::vector<std::pair<std::string, const RawNode*>>& out) {
  for (const auto& [key, child] : node.entries) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (child.kind == RawNode::Kind::kMap) {
      flatten_raw(child, full, out);
    } else {
      out.emplace_back(full, &child);
    }
  }
}

[[noreturn]] inline void type_fail(const std::string& key, ValueType expected,
                                   const RawNode& node, const std::string& got) {
  std::string msg = "type mismatch for " + key + ": expected " +
                    std::string(value_type_name(expected)) + ", got " + got;
  if (node.line > 0) msg += " (line " + std::to_string(node.line) + ")";
  throw ConfigError(msg);
}

inline bool convert_scalar_bool(const RawNode& n, const std::string& key,
                                ValueType expected) {
  if (n.kind != RawNode::Kind::kScalar) type_fail(key, expected, n, "a list");
  if (n.scalar == "true") return true;
  if (n.scalar == "false") return false;
  type_fail(key, expected, n, "'" + n.scalar + "'");
}

inline std::int64_t convert_scalar_int(const RawNode& n, const std::string& key,
                                       ValueType expected) {
  if (n.kind != RawNode::Kind::kScalar) type_fail(key, expected, n, "a list");
  std::int64_t v;
  if (!parse_int64(n.scalar, v)) type_fail(key, expected, n, "'" + n.scalar + "'");
  return v;
}

inline double convert_scalar_f64(const RawNode& n, const std::string& key,
                                 ValueType expected) {
  if (n.kind != RawNode::Kind::kScalar) type_fail(key, expected, n, "a list");
  double v;
  if (!parse_f64(n.scalar, v)) type_fail(key, expected, n, "'" + n.scalar + "'");
  return v;
}

inline std::string convert_scalar_string(const RawNode& n, const std::string& key,
                                         ValueType expected) {
  if (n.kind != RawNode::Kind::kScalar) type_fail(key, expected, n, "a list");
  return n.scalar;
}

template <typename T, typename Convert>
std::vector<T> convert_list(const RawNode& n, const std::string& key,
                            ValueType expected, Convert&& convert) {
  if (n.kind != RawNode::Kind::kList) {
    type_fail(key, expected, n, "scalar '" + n.scalar + "'");
  }
  std::vector<T> out;
  out.reserve(n.items.size());
  for (const RawNode& item : n.items) out.push_back(convert(item, key, expected));
  return out;
}

inline ConfigValue convert_raw(const RawNode& n, const std::string& key,
                               ValueType type) {
  switch (type) {
    case ValueType::kBool:
      return ConfigValue::of(convert_scalar_bool(n, key, type));
    case ValueType::kInt:
      return ConfigValue::of(convert_scalar_int(n, key, type));
    case ValueType::kFloat:
      return ConfigValue::of(convert_scalar_f64(n, key, type));
    case ValueType::kString:
      return ConfigValue::of(convert_scalar_string(n, key, type));
    case ValueType::kIntList:
      return ConfigValue::of(
          convert_list<std::int64_t>(n, key, type, convert_scalar_int));
    case ValueType::kFloatList:
      return ConfigValue::of(
          convert_list<double>(n, key, type, convert_scalar_f64));
    case ValueType::kStringList:
      return ConfigValue::of(
          convert_list<std::string>(n, key, type, convert_scalar_string));
    case ValueType::kIntListList:
      return ConfigValue::of(convert_list<std::vector<std::int64_t>>(
          n, key, type, [](const RawNode& inner, const std::string& k, ValueType t) {
            return convert_list<std::int64_t>(inner, k, t, convert_scalar_int);
          }));
    case ValueType::kFloatListList:
      return ConfigValue::of(convert_list<std::vector<double>>(
          n, key, type, [](const RawNode& inner, const std::string& k, ValueType t) {
            return convert_list<double>(inner, k, t, convert_scalar_f64);
          }));
    default:
      return ConfigValue::of(convert_list<std::vector<std::string>>(
          n, key, type, [](const RawNode& inner, const std::string& k, ValueType t) {
            return convert_list<std::string>(inner, k, t, convert_scalar_string);
          }));
  }
}

}  // namespace detail

// The fully-resolved option set for one pipeline run. Values live in a flat
// vector aligned with the schema, so lookup is an index away and equality
// and dumping are deterministic by construction. Immutable in use: commands
// resolve a config once and only read from it afterwards.
class PipelineConfig {
 public:
  PipelineConfig() {
    const auto& schema = config_schema();
    values_.reserve(schema.size());
    for (const auto& entry : schema) values_.push_back(entry.default_value);
  }

  static PipelineConfig defaults() { return PipelineConfig(); }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;

  bool has_key(const std::string& key) const {
    return detail::schema_index().count(key) > 0;
  }

  const ConfigValue& value_at(const std::string& key) const {
    return values_[index_of(key)];
  }

  void set(const std::string& key, ConfigValue v) {
    const std::size_t i = index_of(key);
    const ValueType expected = config_schema()[i].default_value.type;
    if (v.type != expected) {
      throw ConfigError("type mismatch for " + key + ": expected " +
                        std::string(value_type_name(expected)) + ", got " +
                        std::string(value_type_name(v.type)));
    }
    values_[i] = std::move(v);
  }

  bool bool_at(const std::string& key) const {
    return std::get<bool>(typed(key, ValueType::kBool).data);
  }
  std::int64_t int_at(const std::string& key) const {
    return std::get<std::int64_t>(typed(key, ValueType::kInt).data);
  }
  double float_at(const std::string& key) const {
    return std::get<double>(typed(key, ValueType::kFloat).data);
  }
  const std::string& str_at(const std::string& key) const {
    return std::get<std::string>(typed(key, ValueType::kString).data);
  }
  const std::vector<std::int64_t>& int_list_at(const std::string& key) const {
    return std::get<std::vector<std::int64_t>>(
        typed(key, ValueType::kIntList).data);
  }
  const std::vector<double>& float_list_at(const std::string& key) const {
    return std::get<std::vector<double>>(typed(key, ValueType::kFloatList).data);
  }
  const std::vector<std::string>& str_list_at(const std::string& key) const {
    return std::get<std::vector<std::string>>(
        typed(key, ValueType::kStringList).data);
  }
  const std::vector<std::vector<std::int64_t>>& int_list_list_at(
      const std::string& key) const {
    return std::get<std::vector<std::vector<std::int64_t>>>(
        typed(key, ValueType::kIntListList).data);
  }
  const std::vector<std::vector<double>>& float_list_list_at(
      const std::string& key) const {
    return std::get<std::vector<std::vector<double>>>(
        typed(key, ValueType::kFloatListList).data);
  }
  const std::vector<std::vector<std::string>>& str_list_list_at(
      const std::string& key) const {
    return std::get<std::vector<std::vector<std::string>>>(
        typed(key, ValueType::kStringListList).data);
  }

 private:
  static std::size_t index_of(const std::string& key) {
    const auto& index = detail::schema_index();
    auto it = index.find(key);
    if (it == index.end()) detail::throw_unknown_key(key);
    return it->second;
  }

  const ConfigValue& typed(const std::string& key, ValueType t) const {
    const ConfigValue& v = values_[index_of(key)];
    if (v.type != t) {
      throw std::logic_error("config key " + key + " accessed as " +
                             std::string(value_type_name(t)) + " but holds " +
                             std::string(value_type_name(v.type)));
    }
    return v;
  }

  std::vector<ConfigValue> values_;
};

// Overlay of a parsed file (or text) onto the defaults.
inline PipelineConfig load_config_text(const std::string& text) {
  const detail::RawNode root = detail::parse_yaml_subset(text);
  std::vector<std::pair<std::string, const detail::RawNode*>> flat;
  detail::flatten_raw(root, "", flat);
  PipelineConfig config;
  for (const auto& [key, node] : flat) {
    if (!config.has_key(key)) detail::throw_unknown_key(key);
    config.set(key, detail::convert_raw(
                        *node, key, config.value_at(key).type));
  }
  return config;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str());
}

// Ordered (key, value literal) overrides; later entries win.
using ConfigDelta = std::vector<std::pair<std::string, std::string>>;

inline void apply_overrides(PipelineConfig& config, const ConfigDelta& delta) {
  for (const auto& [key, literal] : delta) {
    if (!config.has_key(key)) detail::throw_unknown_key(key);
    const detail::RawNode node = detail::parse_value_literal(literal, 0);
    config.set(key, detail::convert_raw(node, key, config.value_at(key).type));
  }
}

// VOLSEG_NUM_WORKERS wins over every other source of SYSTEM.NUM_WORKERS;
// the CLI applies it after file and --opts resolution.
inline void apply_env_overrides(PipelineConfig& config) {
  const char* env = std::getenv("VOLSEG_NUM_WORKERS");
  if (env == nullptr) return;
  std::int64_t v;
  if (!detail::parse_int64(env, v) || v < 1) {
    throw ConfigError(std::string("VOLSEG_NUM_WORKERS must be a positive "
                                  "integer, got '") +
                      env + "'");
  }
  config.set("SYSTEM.NUM_WORKERS", ConfigValue::of(v));
}

// Canonical text form: schema order, two-space indentation, flow-style
// lists, shortest round-tripping float representation. load(dump(c)) == c.
inline std::string dump_config(const PipelineConfig& config) {
  std::string out;
  std::vector<std::string> open;  // currently emitted section path
  for (const auto& entry : config_schema()) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = entry.key.find('.', start);
      if (dot == std::string::npos) {
        parts.push_back(entry.key.substr(start));
        break;
      }
      parts.push_back(entry.key.substr(start, dot - start));
      start = dot + 1;
    }
    std::size_t common = 0;
    while (common < open.size() && common + 1 < parts.size() &&
           open[common] == parts[common]) {
      ++common;
    }
    open.resize(common);
    while (open.size() + 1 < parts.size()) {
      out += std::string(open.size() * 2, ' ') + parts[open.size()] + ":\n";
      open.push_back(parts[open.size()]);
    }
    out += std::string(open.size() * 2, ' ') + parts.back() + ": " +
           detail::render_value(config.value_at(entry.key)) + "\n";
  }
  return out;
}

}  // namespace volseg

#endif  // VOLSEG_CONFIG_HPP_
