#include "cib/quantifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cib/errors.hpp"

namespace cib {

using nlohmann::json;

double TranslationMatrix::lookup(const Dimension& dimension, int state, int period) const {
  auto it = tables.find(dimension.id);
  if (it == tables.end()) throw CoverageError(dimension.id, "dimension has no translation table");
  const auto& table = it->second;
  const std::vector<std::optional<double>>* row = &table.values;
  if (auto p = table.per_period.find(period); p != table.per_period.end()) row = &p->second;
  if (state < 0 || static_cast<std::size_t>(state) >= row->size() || !(*row)[state]) {
    throw CoverageError(dimension.id, fmt::format("no value for state {} at period {}", state, period));
  }
  return *(*row)[state];
}

std::string CellProvenance::describe() const {
  std::string out = fmt::format("lookup(state={}{})={}", state, time_dependent ? ",period" : "", matrix_value);
  if (override_note) out += fmt::format("; override: {}", *override_note);
  for (const auto& r : repairs) out += "; repair: " + r;
  return out;
}

std::size_t QuantifiedPathway::dimension_index(const std::string& id) const {
  for (std::size_t d = 0; d < dimensions.size(); ++d) {
    if (dimensions[d].id == id) return d;
  }
  throw ReferenceError(id, "unknown dimension");
}

std::size_t QuantifiedPathway::period_index(int period) const {
  auto it = std::find(periods.begin(), periods.end(), period);
  if (it == periods.end()) throw ReferenceError(std::to_string(period), "period not in the quantified pathway");
  return static_cast<std::size_t>(it - periods.begin());
}

QuantifiedPathway quantify_pathway(const Pathway& pathway, const std::vector<Dimension>& dimensions,
                                   const TranslationMatrix& matrix, const std::vector<Override>& overrides) {
  QuantifiedPathway qp;
  qp.dimensions = dimensions;
  for (const auto& e : pathway.entries) qp.periods.push_back(e.period);
  const auto T = qp.periods.size();
  qp.values.assign(dimensions.size(), std::vector<double>(T, 0.0));
  qp.ranges.assign(dimensions.size(), std::vector<std::optional<ValueRange>>(T));
  qp.provenance.assign(dimensions.size(), std::vector<CellProvenance>(T));

  for (std::size_t d = 0; d < dimensions.size(); ++d) {
    const auto& dim = dimensions[d];
    const auto table = matrix.tables.find(dim.id);
    for (std::size_t t = 0; t < T; ++t) {
      const auto& scenario = pathway.entries[t].scenario;
      if (dim.driver >= scenario.size()) throw StructureError(dim.id, "driver descriptor outside the scenario");
      const int state = scenario[dim.driver];
      const double v = matrix.lookup(dim, state, qp.periods[t]);
      qp.values[d][t] = v;
      auto& prov = qp.provenance[d][t];
      prov.state = state;
      prov.matrix_value = v;
      prov.time_dependent = table != matrix.tables.end() && table->second.per_period.contains(qp.periods[t]);
    }
  }
  for (const auto& o : overrides) {
    const auto d = qp.dimension_index(o.dimension);
    const auto t = qp.period_index(o.period);
    qp.values[d][t] = o.value;
    qp.provenance[d][t].override_note = o.note.empty() ? std::string("override") : o.note;
  }
  return qp;
}

double RangeBound::resolve(double central) const {
  switch (kind) {
    case Kind::relative: return central * (1.0 + amount);
    case Kind::offset: return central + amount;
    case Kind::value: return amount;
  }
  return amount;
}

QuantifiedPathway attach_uncertainty_ranges(QuantifiedPathway qp, const std::vector<RangeSpec>& ranges) {
  for (const auto& spec : ranges) {
    const auto d = qp.dimension_index(spec.dimension);
    for (std::size_t t = 0; t < qp.periods.size(); ++t) {
      const double central = qp.values[d][t];
      const double low = spec.low.resolve(central);
      const double high = spec.high.resolve(central);
      const auto where = fmt::format("{}@{}", spec.dimension, qp.periods[t]);
      if (low > high) throw RangeError(where, fmt::format("inverted range ({}, {})", low, high));
      if (central < low || central > high) {
        throw RangeError(where, fmt::format("range ({}, {}) excludes the central value {}", low, high, central));
      }
      qp.ranges[d][t] = ValueRange{low, high};
    }
  }
  return qp;
}

const char* to_string(ExtremeAxis axis) noexcept {
  switch (axis) {
    case ExtremeAxis::outcome_based: return "outcome_based";
    case ExtremeAxis::descriptor_based: return "descriptor_based";
    case ExtremeAxis::frequency_based: return "frequency_based";
  }
  return "unknown";
}

ExtremeSet build_extreme_scenarios(const EnsembleResult& ensemble, const StudySpec& spec,
                                   const std::vector<Dimension>& dimensions, const TranslationMatrix& matrix,
                                   const ExtremeConfig& config) {
  if (config.count < 2 || config.count > 4) throw ConfigError("extremes/count", "between 2 and 4 extreme scenarios are produced");
  std::map<Scenario, std::size_t> terminals;
  for (const auto& run : ensemble.runs) {
    if (run.ok()) ++terminals[run.pathway.terminal()];
  }
  if (terminals.empty()) throw EmptyInputError("ensemble", "no completed runs");
  const int terminal_period = ensemble.time_grid.back();

  // Most frequent terminal satisfying `pred`; ties go to the lowest scenario.
  auto most_frequent = [&](auto pred) -> const std::pair<const Scenario, std::size_t>* {
    const std::pair<const Scenario, std::size_t>* best = nullptr;
    for (const auto& entry : terminals) {
      if (pred(entry.first) && (!best || entry.second > best->second)) best = &entry;
    }
    return best;
  };
  auto quantify = [&](const Scenario& z) {
    std::vector<double> values;
    for (const auto& dim : dimensions) values.push_back(matrix.lookup(dim, z[dim.driver], terminal_period));
    return values;
  };

  ExtremeSet out;
  if (config.outcome_descriptor) {
    const auto j = *config.outcome_descriptor;
    const auto& d = spec.descriptors.at(j);
    for (int state : {0, d.state_count() - 1}) {
      const auto* hit = most_frequent([&](const Scenario& z) { return z[j] == state; });
      if (!hit) {
        out.warnings.push_back(fmt::format("outcome axis: no terminal scenario with {}={}", d.id, d.states[state].label));
        continue;
      }
      out.scenarios.push_back({fmt::format("{}={}", d.id, d.states[state].label), ExtremeAxis::outcome_based,
                               hit->first, hit->second, quantify(hit->first)});
    }
  }
  if (!config.stacks.empty()) {
    const auto* base = most_frequent([](const Scenario&) { return true; });
    for (const auto& stack : config.stacks) {
      Scenario z = base->first;
      for (const auto& s : stack.states) z[s.descriptor] = s.state;
      const auto it = terminals.find(z);
      out.scenarios.push_back({stack.label, ExtremeAxis::descriptor_based, z, it == terminals.end() ? 0 : it->second,
                               quantify(z)});
    }
  }
  if (config.frequency_based) {
    const std::pair<const Scenario, std::size_t>* rare = nullptr;
    for (const auto& entry : terminals) {
      if (entry.second >= config.min_count && (!rare || entry.second < rare->second)) rare = &entry;
    }
    if (!rare) {
      out.warnings.push_back(fmt::format("frequency axis: no terminal scenario observed at least {} times", config.min_count));
    } else {
      out.scenarios.push_back({fmt::format("rarest terminal ({} runs)", rare->second), ExtremeAxis::frequency_based,
                               rare->first, rare->second, quantify(rare->first)});
    }
  }
  if (out.scenarios.size() > config.count) out.scenarios.resize(config.count);
  if (out.scenarios.size() < 2) {
    out.warnings.push_back(fmt::format("only {} extreme scenario(s) could be built", out.scenarios.size()));
  }
  return out;
}

QuantifiedPathway enforce_identities(QuantifiedPathway qp, const std::vector<Identity>& identities) {
  struct Resolved {
    const Identity* source;
    std::vector<std::pair<std::size_t, double>> terms;
    std::vector<bool> adjustable;  // per term
  };
  std::vector<Resolved> resolved;
  for (const auto& id : identities) {
    Resolved r{&id, {}, {}};
    bool any_adjustable = false;
    for (const auto& [dim, coeff] : id.terms) {
      r.terms.emplace_back(qp.dimension_index(dim), coeff);
      const bool adj = std::find(id.adjustable.begin(), id.adjustable.end(), dim) != id.adjustable.end();
      r.adjustable.push_back(adj);
      any_adjustable = any_adjustable || (adj && coeff != 0.0);
    }
    for (const auto& a : id.adjustable) {
      const auto it = std::find_if(id.terms.begin(), id.terms.end(), [&](const auto& t) { return t.first == a; });
      if (it == id.terms.end()) throw ReferenceError(id.name, fmt::format("adjustable dimension '{}' is not a term", a));
    }
    if (!any_adjustable) throw UnrepairableError(id.name, "identity has no adjustable dimension");
    resolved.push_back(std::move(r));
  }

  constexpr int kMaxSweeps = 1000;
  for (std::size_t t = 0; t < qp.periods.size(); ++t) {
    auto residual = [&](const Resolved& r) {
      std::vector<double> lhs;
      for (const auto& [d, c] : r.terms) lhs.push_back(c * qp.values[d][t]);
      double sum = 0.0;
      for (double v : lhs) sum += v;
      return r.source->rhs - sum;
    };
    bool settled = false;
    for (int sweep = 0; sweep < kMaxSweeps && !settled; ++sweep) {
      settled = true;
      for (const auto& r : resolved) {
        const double res = residual(r);
        if (std::abs(res) <= kIdentityTolerance) continue;
        settled = false;
        double adjustable_sum = 0.0;
        double fixed_sum = 0.0;
        double norm = 0.0;
        for (std::size_t k = 0; k < r.terms.size(); ++k) {
          const auto [d, c] = r.terms[k];
          if (r.adjustable[k]) {
            adjustable_sum += c * qp.values[d][t];
            norm += c * c;
          } else {
            fixed_sum += c * qp.values[d][t];
          }
        }
        const double target = r.source->rhs - fixed_sum;
        const double factor = adjustable_sum != 0.0 ? target / adjustable_sum : std::nan("");
        for (std::size_t k = 0; k < r.terms.size(); ++k) {
          if (!r.adjustable[k] || r.terms[k].second == 0.0) continue;
          const auto [d, c] = r.terms[k];
          const double before = qp.values[d][t];
          std::string note;
          if (std::isfinite(factor)) {
            qp.values[d][t] = before * factor;
            note = fmt::format("identity '{}': scaled by {}", r.source->name, factor);
          } else {
            // All adjustable terms are zero; shift along the coefficients instead.
            qp.values[d][t] = before + c * res / norm;
            note = fmt::format("identity '{}': shifted by {}", r.source->name, c * res / norm);
          }
          qp.provenance[d][t].repairs.push_back(std::move(note));
        }
      }
    }
    if (!settled) {
      for (const auto& r : resolved) {
        if (std::abs(residual(r)) > kIdentityTolerance) {
          throw UnrepairableError(r.source->name, fmt::format("identities cannot be satisfied jointly at period {}", qp.periods[t]));
        }
      }
    }
  }
  return qp;
}

// ---------------------------------------------------------------------------
// Files

namespace {

RangeBound parse_bound(const json& node, const std::string& path) {
  if (!node.is_object() || node.size() != 1) throw ParseError(path, "expected one of {relative|offset|value: number}");
  const auto it = node.begin();
  const std::string key = it.key();
  const json& value = it.value();
  if (!value.is_number()) throw ParseError(path + "/" + key, "expected a number");
  if (key == "relative") return {RangeBound::Kind::relative, value.get<double>()};
  if (key == "offset") return {RangeBound::Kind::offset, value.get<double>()};
  if (key == "value") return {RangeBound::Kind::value, value.get<double>()};
  throw ParseError(path + "/" + key, "unknown bound kind");
}

std::vector<std::optional<double>> parse_state_values(const json& node, const StudySpec& spec, std::size_t driver,
                                                      const std::string& path) {
  if (!node.is_object()) throw ParseError(path, "expected an object keyed by state");
  std::vector<std::optional<double>> out(static_cast<std::size_t>(spec.descriptors[driver].state_count()));
  for (const auto& [key, value] : node.items()) {
    int state = -1;
    try {
      state = spec.state_index(driver, key);
    } catch (const ReferenceError&) {
      throw ReferenceError(path + "/" + key, fmt::format("'{}' is not a state of '{}'", key, spec.descriptors[driver].id));
    }
    if (!value.is_number()) throw ParseError(path + "/" + key, "expected a number");
    out[state] = value.get<double>();
  }
  return out;
}

std::vector<StateRef> parse_state_map(const json& node, const StudySpec& spec, const std::string& path) {
  if (!node.is_object()) throw ParseError(path, "expected an object of descriptor: state");
  std::vector<StateRef> out;
  for (const auto& [key, value] : node.items()) {
    const auto d = spec.descriptor_index(key);
    const int s = value.is_number_integer() ? value.get<int>() : spec.state_index(d, value.get<std::string>());
    if (s < 0 || s >= spec.descriptors[d].state_count()) throw ReferenceError(path + "/" + key, "state index out of range");
    out.push_back({d, s});
  }
  return out;
}

json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, fmt::format("cannot open {}", what));
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path, e.what());
  }
}

}  // namespace

TranslationBundle parse_translation(const json& doc, const StudySpec& spec) {
  TranslationBundle b;
  try {
    for (std::size_t k = 0; k < doc.at("dimensions").size(); ++k) {
      const auto& jd = doc["dimensions"][k];
      const auto path = fmt::format("/dimensions/{}", k);
      Dimension dim;
      dim.id = jd.at("id").get<std::string>();
      dim.unit = jd.value("unit", "");
      dim.driver = spec.descriptor_index(jd.at("driver").get<std::string>());
      DimensionTable table;
      if (jd.contains("values")) table.values = parse_state_values(jd["values"], spec, dim.driver, path + "/values");
      if (jd.contains("per_period")) {
        for (const auto& [period, values] : jd["per_period"].items()) {
          table.per_period[std::stoi(period)] = parse_state_values(values, spec, dim.driver, path + "/per_period/" + period);
        }
      }
      if (!jd.contains("values") && !jd.contains("per_period")) throw ParseError(path, "dimension has no values");
      b.matrix.tables[dim.id] = std::move(table);
      b.dimensions.push_back(std::move(dim));
    }
    if (doc.contains("overrides")) {
      for (const auto& jo : doc["overrides"]) {
        b.overrides.push_back({jo.at("dimension").get<std::string>(), jo.at("period").get<int>(), jo.at("value").get<double>(),
                               jo.value("note", "")});
      }
    }
    if (doc.contains("ranges")) {
      for (std::size_t k = 0; k < doc["ranges"].size(); ++k) {
        const auto& jr = doc["ranges"][k];
        const auto path = fmt::format("/ranges/{}", k);
        b.ranges.push_back({jr.at("dimension").get<std::string>(), parse_bound(jr.at("low"), path + "/low"),
                            parse_bound(jr.at("high"), path + "/high")});
      }
    }
    if (doc.contains("extremes")) {
      const auto& je = doc["extremes"];
      b.extremes.count = je.value("count", b.extremes.count);
      if (je.contains("outcome")) b.extremes.outcome_descriptor = spec.descriptor_index(je["outcome"].get<std::string>());
      b.extremes.frequency_based = je.value("frequency_based", true);
      b.extremes.min_count = je.value("min_count", b.extremes.min_count);
      if (je.contains("stacks")) {
        for (const auto& js : je["stacks"]) {
          b.extremes.stacks.push_back({js.at("label").get<std::string>(), parse_state_map(js.at("states"), spec, "/extremes/stacks")});
        }
      }
    }
  } catch (const json::exception& e) {
    throw ParseError("translation", e.what());
  }
  return b;
}

TranslationBundle load_translation(const std::string& path, const StudySpec& spec) {
  return parse_translation(read_json_file(path, "translation matrix"), spec);
}

std::vector<Identity> parse_identities(const json& doc) {
  std::vector<Identity> out;
  try {
    for (const auto& ji : doc.at("identities")) {
      Identity id;
      id.name = ji.at("name").get<std::string>();
      for (const auto& [dim, coeff] : ji.at("terms").items()) id.terms.emplace_back(dim, coeff.get<double>());
      id.rhs = ji.value("rhs", 0.0);
      id.adjustable = ji.at("adjustable").get<std::vector<std::string>>();
      out.push_back(std::move(id));
    }
  } catch (const json::exception& e) {
    throw ParseError("identities", e.what());
  }
  return out;
}

std::vector<Identity> load_identities(const std::string& path) { return parse_identities(read_json_file(path, "identity config")); }

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string quantified_csv(const QuantifiedPathway& qp) {
  std::string out = "dimension,unit,period,central,low,high,provenance\n";
  for (std::size_t d = 0; d < qp.dimensions.size(); ++d) {
    for (std::size_t t = 0; t < qp.periods.size(); ++t) {
      const auto& r = qp.ranges[d][t];
      out += fmt::format("{},{},{},{},{},{},{}\n", csv_field(qp.dimensions[d].id), csv_field(qp.dimensions[d].unit), qp.periods[t],
                         qp.values[d][t], r ? fmt::format("{}", r->low) : "", r ? fmt::format("{}", r->high) : "",
                         csv_field(qp.provenance[d][t].describe()));
    }
  }
  return out;
}

json quantified_bundle(const QuantifiedPathway& qp, const ExtremeSet& extremes, const StudySpec& spec) {
  json dims = json::array();
  for (const auto& d : qp.dimensions) dims.push_back({{"id", d.id}, {"unit", d.unit}, {"driver", spec.descriptors.at(d.driver).id}});
  json table = json::array();
  for (std::size_t d = 0; d < qp.dimensions.size(); ++d) {
    for (std::size_t t = 0; t < qp.periods.size(); ++t) {
      const auto& p = qp.provenance[d][t];
      json row{{"dimension", qp.dimensions[d].id},
               {"period", qp.periods[t]},
               {"central", qp.values[d][t]},
               {"state", spec.descriptors.at(qp.dimensions[d].driver).states.at(p.state).label},
               {"matrix_value", p.matrix_value},
               {"repairs", p.repairs}};
      if (qp.ranges[d][t]) {
        row["low"] = qp.ranges[d][t]->low;
        row["high"] = qp.ranges[d][t]->high;
      }
      if (p.override_note) row["override"] = *p.override_note;
      table.push_back(std::move(row));
    }
  }
  json ext = json::array();
  for (const auto& e : extremes.scenarios) {
    json values = json::object();
    for (std::size_t d = 0; d < qp.dimensions.size() && d < e.values.size(); ++d) values[qp.dimensions[d].id] = e.values[d];
    ext.push_back({{"label", e.label},
                   {"axis", to_string(e.axis)},
                   {"scenario", format_scenario(spec, e.scenario)},
                   {"occurrences", e.occurrences},
                   {"values", std::move(values)}});
  }
  return json{{"dimensions", std::move(dims)},
              {"periods", qp.periods},
              {"table", std::move(table)},
              {"extreme_scenarios", std::move(ext)},
              {"warnings", extremes.warnings}};
}

}  // namespace cib
