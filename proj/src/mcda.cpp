#include "cib/mcda.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cib/errors.hpp"

namespace cib {

using nlohmann::json;

namespace {

using boost::multiprecision::cpp_int;

// A double read as its shortest round-trip decimal, mantissa * 10^exponent.
struct Decimal {
  cpp_int mantissa;
  int exponent = 0;
};

Decimal to_decimal(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific);
  const std::string text(buf, res.ptr);
  const auto e = text.find('e');
  std::string digits;
  bool negative = false;
  int fraction_digits = 0;
  bool after_point = false;
  for (std::size_t i = 0; i < e; ++i) {
    const char ch = text[i];
    if (ch == '-') negative = true;
    else if (ch == '.') after_point = true;
    else {
      digits += ch;
      if (after_point) ++fraction_digits;
    }
  }
  Decimal d;
  d.mantissa = cpp_int(digits);
  if (negative) d.mantissa = -d.mantissa;
  d.exponent = std::stoi(text.substr(e + 1)) - fraction_digits;
  return d;
}

cpp_int pow10(int n) {
  cpp_int r = 1;
  for (int i = 0; i < n; ++i) r *= 10;
  return r;
}

// Exact sum of products w*s, kept as a decimal with a common exponent.
class DecimalAccumulator {
 public:
  void add_product(double w, double s) {
    const auto a = to_decimal(w);
    const auto b = to_decimal(s);
    add({a.mantissa * b.mantissa, a.exponent + b.exponent});
  }
  void add(double x) { add(to_decimal(x)); }

  // Correctly rounded value of the sum divided by `divisor`.
  double divided_by(std::uint64_t divisor) const {
    cpp_int num = sum_.mantissa;
    cpp_int den = divisor;
    if (sum_.exponent >= 0) num *= pow10(sum_.exponent);
    else den *= pow10(-sum_.exponent);
    return round_to_double(num, den);
  }

 private:
  void add(Decimal term) {
    if (empty_) {
      sum_ = std::move(term);
      empty_ = false;
      return;
    }
    if (term.exponent < sum_.exponent) {
      sum_.mantissa *= pow10(sum_.exponent - term.exponent);
      sum_.exponent = term.exponent;
    } else if (term.exponent > sum_.exponent) {
      term.mantissa *= pow10(term.exponent - sum_.exponent);
    }
    sum_.mantissa += term.mantissa;
  }

  static double round_to_double(cpp_int num, const cpp_int& den) {
    if (num == 0) return 0.0;
    const bool negative = num < 0;
    if (negative) num = -num;
    // Scale by 2^k so the integer quotient has exactly 53 bits.
    int k = 52 - (static_cast<int>(boost::multiprecision::msb(num)) - static_cast<int>(boost::multiprecision::msb(den)));
    auto quotient = [&](int shift, cpp_int& q, cpp_int& r) {
      cpp_int n = num;
      cpp_int d = den;
      if (shift >= 0) n <<= shift;
      else d <<= -shift;
      boost::multiprecision::divide_qr(n, d, q, r);
      return d;
    };
    cpp_int q, r;
    cpp_int d = quotient(k, q, r);
    if (boost::multiprecision::msb(q) < 52) d = quotient(++k, q, r);
    const cpp_int twice = r * 2;
    if (twice > d || (twice == d && boost::multiprecision::bit_test(q, 0))) q += 1;
    const double value = std::ldexp(q.convert_to<double>(), -k);
    return negative ? -value : value;
  }

  Decimal sum_;
  bool empty_ = true;
};

}  // namespace

std::vector<Finding> validate_mcda_input(const McdaInput& input) {
  std::vector<Finding> out;
  auto error = [&](std::string path, std::string message) {
    out.push_back({Severity::error, std::move(path), std::move(message)});
  };
  if (input.pathways.size() < 2) error("/pathways", "at least two pathways are required");
  if (input.criteria.empty()) error("/criteria", "at least one criterion is required");
  if (input.personas.empty()) error("/personas", "at least one persona is required");
  if (!(input.scale.low < input.scale.high)) error("/scale", "scale low must be below high");
  auto check_unique = [&](const std::vector<std::string>& ids, const char* path) {
    std::set<std::string> seen;
    for (const auto& id : ids) {
      if (!seen.insert(id).second) error(path, fmt::format("duplicate id '{}'", id));
    }
  };
  check_unique(input.pathways, "/pathways");
  check_unique(input.criteria, "/criteria");

  if (input.scores.size() != input.pathways.size()) {
    error("/scores", fmt::format("score matrix has {} rows for {} pathways", input.scores.size(), input.pathways.size()));
  }
  for (std::size_t p = 0; p < std::min(input.scores.size(), input.pathways.size()); ++p) {
    const auto& row = input.scores[p];
    for (std::size_t c = 0; c < input.criteria.size(); ++c) {
      const auto path = fmt::format("/scores/{}/{}", input.pathways[p], input.criteria[c]);
      if (c >= row.size() || !row[c]) {
        error(path, fmt::format("missing score for pathway '{}', criterion '{}'", input.pathways[p], input.criteria[c]));
        continue;
      }
      const double s = *row[c];
      if (!std::isfinite(s) || s < input.scale.low || s > input.scale.high) {
        error(path, fmt::format("score {} outside the scale [{}, {}]", s, input.scale.low, input.scale.high));
      }
    }
    if (row.size() > input.criteria.size()) error(fmt::format("/scores/{}", input.pathways[p]), "more scores than criteria");
  }

  std::set<std::string> persona_ids;
  for (std::size_t r = 0; r < input.personas.size(); ++r) {
    const auto& persona = input.personas[r];
    const auto base = fmt::format("/personas/{}", persona.id.empty() ? std::to_string(r) : persona.id);
    if (!persona_ids.insert(persona.id).second) error(base, fmt::format("duplicate persona '{}'", persona.id));
    std::vector<double> weights;
    bool complete = true;
    for (std::size_t c = 0; c < input.criteria.size(); ++c) {
      if (c >= persona.weights.size() || !persona.weights[c]) {
        error(base + "/" + input.criteria[c], "missing weight");
        complete = false;
        continue;
      }
      const double w = *persona.weights[c];
      if (!std::isfinite(w) || w < 0.0) error(base + "/" + input.criteria[c], fmt::format("negative or non-finite weight {}", w));
      weights.push_back(w);
    }
    if (persona.weights.size() > input.criteria.size()) error(base, "more weights than criteria");
    if (complete) {
      DecimalAccumulator acc;
      for (double w : weights) acc.add(w);
      const double sum = acc.divided_by(1);
      if (!(std::abs(sum - 1.0) <= 1e-9)) error(base, fmt::format("weights sum to {}; expected 1", sum));
    }
  }
  if (input.selected &&
      std::find(input.pathways.begin(), input.pathways.end(), *input.selected) == input.pathways.end()) {
    error("/selected", fmt::format("selected pathway '{}' is not listed", *input.selected));
  }
  return out;
}

McdaRanking rank_pathways(const McdaInput& input) {
  const auto findings = validate_mcda_input(input);
  if (has_errors(findings)) {
    const auto& first = *std::find_if(findings.begin(), findings.end(), [](const Finding& f) { return f.severity == Severity::error; });
    throw InputError(first.path, first.message);
  }
  const auto P = input.pathways.size();
  const auto C = input.criteria.size();
  const auto R = input.personas.size();

  McdaRanking out;
  out.per_persona.assign(R, std::vector<double>(P, 0.0));
  out.values.assign(P, 0.0);
  for (std::size_t p = 0; p < P; ++p) {
    DecimalAccumulator all;
    for (std::size_t r = 0; r < R; ++r) {
      DecimalAccumulator persona;
      for (std::size_t c = 0; c < C; ++c) {
        const double w = *input.personas[r].weights[c];
        const double s = *input.scores[p][c];
        persona.add_product(w, s);
        all.add_product(w, s);
      }
      out.per_persona[r][p] = persona.divided_by(1);
    }
    out.values[p] = all.divided_by(R);
  }

  out.order.resize(P);
  for (std::size_t p = 0; p < P; ++p) out.order[p] = p;
  std::sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
    if (out.values[a] != out.values[b]) return out.values[a] > out.values[b];
    return input.pathways[a] < input.pathways[b];
  });
  for (std::size_t i = 0; i < P;) {
    std::size_t j = i + 1;
    while (j < P && out.values[out.order[j]] == out.values[out.order[i]]) ++j;
    if (j - i > 1) out.ties.emplace_back(out.order.begin() + static_cast<std::ptrdiff_t>(i), out.order.begin() + static_cast<std::ptrdiff_t>(j));
    i = j;
  }
  return out;
}

namespace {

std::optional<double> optional_number(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return std::nullopt;
  if (!it->is_number()) throw ParseError(path + "/" + key, "expected a number");
  return it->get<double>();
}

}  // namespace

McdaInput parse_mcda_input(const json& doc) {
  McdaInput in;
  try {
    if (!doc.is_object()) throw ParseError("", "expected an object");
    in.pathways = doc.at("pathways").get<std::vector<std::string>>();
    in.criteria = doc.at("criteria").get<std::vector<std::string>>();
    if (doc.contains("scale")) {
      in.scale.low = doc["scale"].at("low").get<double>();
      in.scale.high = doc["scale"].at("high").get<double>();
    }
    const auto& scores = doc.at("scores");
    if (!scores.is_object()) throw ParseError("/scores", "expected an object keyed by pathway");
    for (const auto& [key, value] : scores.items()) {
      if (std::find(in.pathways.begin(), in.pathways.end(), key) == in.pathways.end()) {
        throw ReferenceError("/scores/" + key, "unknown pathway");
      }
      for (const auto& [crit, v] : value.items()) {
        if (std::find(in.criteria.begin(), in.criteria.end(), crit) == in.criteria.end()) {
          throw ReferenceError("/scores/" + key + "/" + crit, "unknown criterion");
        }
      }
    }
    for (const auto& p : in.pathways) {
      std::vector<std::optional<double>> row;
      for (const auto& c : in.criteria) {
        row.push_back(scores.contains(p) ? optional_number(scores[p], c, "/scores/" + p) : std::nullopt);
      }
      in.scores.push_back(std::move(row));
    }
    for (const auto& jp : doc.at("personas")) {
      Persona persona;
      persona.id = jp.at("id").get<std::string>();
      const auto& w = jp.at("weights");
      for (const auto& [crit, v] : w.items()) {
        if (std::find(in.criteria.begin(), in.criteria.end(), crit) == in.criteria.end()) {
          throw ReferenceError("/personas/" + persona.id + "/" + crit, "unknown criterion");
        }
      }
      for (const auto& c : in.criteria) persona.weights.push_back(optional_number(w, c, "/personas/" + persona.id));
      in.personas.push_back(std::move(persona));
    }
    if (doc.contains("selected") && !doc["selected"].is_null()) in.selected = doc["selected"].get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError("mcda", e.what());
  }
  return in;
}

McdaInput load_mcda_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open MCDA input");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_mcda_input(json::parse(buf.str()));
  } catch (const json::parse_error& e) {
    throw ParseError(path, e.what());
  }
}

json mcda_report(const McdaInput& input, const McdaRanking& ranking) {
  json values = json::object();
  for (std::size_t p = 0; p < input.pathways.size(); ++p) values[input.pathways[p]] = ranking.values[p];
  json per_persona = json::object();
  for (std::size_t r = 0; r < input.personas.size(); ++r) {
    json row = json::object();
    for (std::size_t p = 0; p < input.pathways.size(); ++p) row[input.pathways[p]] = ranking.per_persona[r][p];
    per_persona[input.personas[r].id] = std::move(row);
  }
  json order = json::array();
  for (auto p : ranking.order) order.push_back(input.pathways[p]);
  json ties = json::array();
  for (const auto& group : ranking.ties) {
    json g = json::array();
    for (auto p : group) g.push_back(input.pathways[p]);
    ties.push_back(std::move(g));
  }
  json weights = json::object();
  for (const auto& persona : input.personas) {
    json w = json::object();
    for (std::size_t c = 0; c < input.criteria.size(); ++c) w[input.criteria[c]] = *persona.weights[c];
    weights[persona.id] = std::move(w);
  }
  json scores = json::object();
  for (std::size_t p = 0; p < input.pathways.size(); ++p) {
    json row = json::object();
    for (std::size_t c = 0; c < input.criteria.size(); ++c) row[input.criteria[c]] = *input.scores[p][c];
    scores[input.pathways[p]] = std::move(row);
  }
  const std::string selected = input.selected ? *input.selected : input.pathways[ranking.order.front()];
  return json{{"criteria", input.criteria},
              {"weights", std::move(weights)},
              {"scores", std::move(scores)},
              {"per_persona_values", std::move(per_persona)},
              {"values", std::move(values)},
              {"ranking", std::move(order)},
              {"ties", std::move(ties)},
              {"selected", selected},
              {"selection_source", input.selected ? "override" : "top_ranked"}};
}

}  // namespace cib
