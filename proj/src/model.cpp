#include "cib/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cib/errors.hpp"
#include "cib/hash.hpp"

namespace cib {

using nlohmann::json;

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::reference: return "reference";
    case ErrorKind::range: return "range";
    case ErrorKind::structure: return "structure";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::tractability: return "tractability";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::empty_input: return "empty_input";
    case ErrorKind::insufficient_candidates: return "insufficient_candidates";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::unrepairable: return "unrepairable";
    case ErrorKind::input: return "input";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string path, const std::string& reason)
    : std::runtime_error(path.empty() ? reason : path + ": " + reason),
      kind_(kind),
      path_(std::move(path)),
      reason_(reason) {}

std::string to_hex(std::uint64_t value) { return fmt::format("{:016x}", value); }

const char* to_string(DescriptorKind kind) noexcept {
  switch (kind) {
    case DescriptorKind::endogenous: return "endogenous";
    case DescriptorKind::exogenous: return "exogenous";
    case DescriptorKind::cyclic: return "cyclic";
  }
  return "endogenous";
}

const char* to_string(ResamplePolicy policy) noexcept {
  return policy == ResamplePolicy::per_run ? "per_run" : "per_period";
}

const char* to_string(Severity severity) noexcept {
  return severity == Severity::error ? "error" : "warning";
}

// ---------------------------------------------------------------------------
// CrossImpactMatrix

CrossImpactMatrix::CrossImpactMatrix(std::vector<int> state_counts) : counts_(std::move(state_counts)) {
  const std::size_t n = counts_.size();
  offsets_.assign(n * n, 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      offsets_[i * n + j] = total;
      if (i != j) total += static_cast<std::size_t>(counts_[i] * counts_[j]);
    }
  }
  score_.assign(total, 0.0);
  confidence_.assign(total, 0);
  defined_.assign(total, 0);
}

bool CrossImpactMatrix::defined(std::size_t source, int source_state, std::size_t target,
                                int target_state) const {
  return defined_[offset(source, source_state, target, target_state)] != 0;
}

JudgementCell CrossImpactMatrix::cell(std::size_t source, int source_state, std::size_t target,
                                      int target_state) const {
  const auto k = offset(source, source_state, target, target_state);
  return {score_[k], confidence_[k]};
}

void CrossImpactMatrix::set(std::size_t source, int source_state, std::size_t target, int target_state,
                            JudgementCell cell) {
  if (source == target) throw StructureError("cim", "a descriptor cannot impact itself");
  if (source >= counts_.size() || target >= counts_.size() || source_state < 0 ||
      source_state >= counts_[source] || target_state < 0 || target_state >= counts_[target]) {
    throw StructureError("cim", "cell index out of range");
  }
  const auto k = offset(source, source_state, target, target_state);
  score_[k] = cell.score;
  confidence_[k] = static_cast<std::int8_t>(cell.confidence);
  defined_[k] = 1;
}

void CrossImpactMatrix::add_score(std::size_t source, int source_state, std::size_t target, int target_state,
                                  double delta) {
  score_[offset(source, source_state, target, target_state)] += delta;
}

bool CrossImpactMatrix::all_defined() const noexcept {
  return std::all_of(defined_.begin(), defined_.end(), [](std::uint8_t d) { return d != 0; });
}

std::size_t ScenarioHash::operator()(const Scenario& s) const noexcept {
  std::uint64_t h = kFnvOffset;
  for (int v : s.states) h = mix64(h ^ static_cast<std::uint64_t>(v));
  return static_cast<std::size_t>(h);
}

std::map<int, double> linear_time_scale(std::span<const int> time_grid, double first, double last) {
  std::map<int, double> out;
  if (time_grid.empty()) return out;
  const double t0 = time_grid.front();
  const double t1 = time_grid.back();
  for (int t : time_grid) {
    const double frac = t1 == t0 ? 0.0 : (t - t0) / (t1 - t0);
    out[t] = first + (last - first) * frac;
  }
  return out;
}

std::vector<int> StudySpec::state_counts() const {
  std::vector<int> out;
  out.reserve(descriptors.size());
  for (const auto& d : descriptors) out.push_back(d.state_count());
  return out;
}

std::size_t StudySpec::descriptor_index(std::string_view id) const {
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    if (descriptors[i].id == id) return i;
  }
  throw ReferenceError(std::string(id), "unknown descriptor");
}

int StudySpec::state_index(std::size_t descriptor, std::string_view label) const {
  const auto& d = descriptors.at(descriptor);
  for (const auto& s : d.states) {
    if (s.label == label) return s.index;
  }
  throw ReferenceError(d.id, fmt::format("unknown state '{}'", label));
}

std::string format_scenario(const StudySpec& spec, const Scenario& scenario) {
  std::string out = "(";
  for (std::size_t i = 0; i < scenario.size(); ++i) {
    if (i) out += ", ";
    const auto& d = spec.descriptors.at(i);
    const int s = scenario[i];
    out += d.id + "=" + (s >= 0 && s < d.state_count() ? d.states[s].label : std::to_string(s));
  }
  return out + ")";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string join(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }
std::string join(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

const json& require(const json& obj, std::string_view key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(join(path, key), "required key missing");
  return *it;
}

void expect_object(const json& node, const std::string& path) {
  if (!node.is_object()) throw ParseError(path, "expected an object");
}

void expect_array(const json& node, const std::string& path) {
  if (!node.is_array()) throw ParseError(path, "expected an array");
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError(join(path, key), "unknown key");
    }
  }
}

std::string as_string(const json& node, const std::string& path) {
  if (!node.is_string()) throw ParseError(path, "expected a string");
  return node.get<std::string>();
}

double as_number(const json& node, const std::string& path) {
  if (!node.is_number()) throw ParseError(path, "expected a number");
  return node.get<double>();
}

long long as_integer(const json& node, const std::string& path) {
  if (node.is_number_integer()) return node.get<long long>();
  if (node.is_number_float()) {
    const double v = node.get<double>();
    if (std::isfinite(v) && std::floor(v) == v) return static_cast<long long>(v);
  }
  throw ParseError(path, "expected an integer");
}

bool as_bool(const json& node, const std::string& path) {
  if (!node.is_boolean()) throw ParseError(path, "expected a boolean");
  return node.get<bool>();
}

double number_or(const json& obj, std::string_view key, double fallback, const std::string& path) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_number(*it, join(path, key));
}

class Resolver {
 public:
  explicit Resolver(const std::vector<Descriptor>& descriptors) : descriptors_(descriptors) {}

  std::size_t descriptor(const json& node, const std::string& path) const {
    const std::string id = as_string(node, path);
    for (std::size_t i = 0; i < descriptors_.size(); ++i) {
      if (descriptors_[i].id == id) return i;
    }
    throw ReferenceError(path, fmt::format("unknown descriptor '{}'", id));
  }

  int state(std::size_t descriptor, const json& node, const std::string& path) const {
    const auto& d = descriptors_[descriptor];
    if (node.is_string()) {
      const auto label = node.get<std::string>();
      for (const auto& s : d.states) {
        if (s.label == label) return s.index;
      }
      throw ReferenceError(path, fmt::format("descriptor '{}' has no state '{}'", d.id, label));
    }
    if (node.is_number()) {
      const auto index = as_integer(node, path);
      if (index < 0 || index >= d.state_count()) {
        throw ReferenceError(path, fmt::format("descriptor '{}' has no state index {}", d.id, index));
      }
      return static_cast<int>(index);
    }
    throw ParseError(path, "expected a state label or index");
  }

  StateRef state_ref(const json& node, const std::string& path) const {
    expect_object(node, path);
    reject_unknown_keys(node, {"descriptor", "state"}, path);
    const auto d = descriptor(require(node, "descriptor", path), join(path, "descriptor"));
    return {d, state(d, require(node, "state", path), join(path, "state"))};
  }

 private:
  const std::vector<Descriptor>& descriptors_;
};

Distribution parse_distribution(const json& node, const std::string& path) {
  if (node.is_string()) {
    const auto name = node.get<std::string>();
    if (name == "gaussian") return Distribution::gaussian();
    throw ParseError(path, fmt::format("unknown distribution '{}'", name));
  }
  expect_object(node, path);
  reject_unknown_keys(node, {"type", "df"}, path);
  const auto type = as_string(require(node, "type", path), join(path, "type"));
  if (type == "gaussian") return Distribution::gaussian();
  if (type == "student_t") {
    const auto df = as_integer(require(node, "df", path), join(path, "df"));
    if (df < 1) throw RangeError(join(path, "df"), "degrees of freedom must be positive");
    return Distribution::student_t(static_cast<int>(df));
  }
  throw ParseError(join(path, "type"), fmt::format("unknown distribution '{}'", type));
}

json serialize_distribution(const Distribution& d) {
  if (d.kind == Distribution::Kind::gaussian) return "gaussian";
  return json{{"type", "student_t"}, {"df", d.df}};
}

Descriptor parse_descriptor(const json& node, const std::string& path) {
  expect_object(node, path);
  reject_unknown_keys(node, {"id", "name", "kind", "states", "cyclic"}, path);
  Descriptor d;
  d.id = as_string(require(node, "id", path), join(path, "id"));
  d.name = node.contains("name") ? as_string(node["name"], join(path, "name")) : d.id;
  if (node.contains("kind")) {
    const auto kind = as_string(node["kind"], join(path, "kind"));
    if (kind == "endogenous") d.kind = DescriptorKind::endogenous;
    else if (kind == "exogenous") d.kind = DescriptorKind::exogenous;
    else if (kind == "cyclic") d.kind = DescriptorKind::cyclic;
    else throw ParseError(join(path, "kind"), fmt::format("unknown descriptor kind '{}'", kind));
  }
  const auto spath = join(path, "states");
  const auto& states = require(node, "states", path);
  expect_array(states, spath);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = states[i];
    const auto p = join(spath, i);
    StateDef def;
    def.index = static_cast<int>(i);
    if (s.is_string()) {
      def.label = s.get<std::string>();
    } else {
      expect_object(s, p);
      reject_unknown_keys(s, {"label", "definition"}, p);
      def.label = as_string(require(s, "label", p), join(p, "label"));
      if (s.contains("definition")) def.definition = as_string(s["definition"], join(p, "definition"));
    }
    d.states.push_back(std::move(def));
  }
  if (node.contains("cyclic")) {
    const auto cpath = join(path, "cyclic");
    const auto& c = node["cyclic"];
    expect_object(c, cpath);
    reject_unknown_keys(c, {"stay", "step", "step2", "drift"}, cpath);
    CyclicParams params;
    params.stay = as_number(require(c, "stay", cpath), join(cpath, "stay"));
    params.step = as_number(require(c, "step", cpath), join(cpath, "step"));
    params.step2 = as_number(require(c, "step2", cpath), join(cpath, "step2"));
    params.drift = number_or(c, "drift", 0.0, cpath);
    d.cyclic = params;
  }
  return d;
}

void parse_cim(const json& node, StudySpec& spec, const Resolver& resolve) {
  const std::string path = "/cim";
  expect_array(node, path);
  spec.cim = CrossImpactMatrix(spec.state_counts());
  for (std::size_t k = 0; k < node.size(); ++k) {
    const auto& rec = node[k];
    const auto p = join(path, k);
    expect_object(rec, p);
    reject_unknown_keys(rec, {"source", "source_state", "target", "target_state", "score", "confidence"}, p);
    const auto src = resolve.descriptor(require(rec, "source", p), join(p, "source"));
    const auto tgt = resolve.descriptor(require(rec, "target", p), join(p, "target"));
    if (src == tgt) throw ParseError(p, "source and target descriptor must differ");
    const int ss = resolve.state(src, require(rec, "source_state", p), join(p, "source_state"));
    const int ts = resolve.state(tgt, require(rec, "target_state", p), join(p, "target_state"));
    const double score = as_number(require(rec, "score", p), join(p, "score"));
    if (!std::isfinite(score) || score < kMinScore || score > kMaxScore) {
      throw RangeError(join(p, "score"), fmt::format("score {} outside [-3, +3]", score));
    }
    const auto confidence = as_integer(require(rec, "confidence", p), join(p, "confidence"));
    if (confidence < 1 || confidence > kConfidenceLevels) {
      throw RangeError(join(p, "confidence"), fmt::format("confidence {} outside 1..5", confidence));
    }
    if (spec.cim.defined(src, ss, tgt, ts)) throw ParseError(p, "duplicate cell");
    spec.cim.set(src, ss, tgt, ts, {score, static_cast<int>(confidence)});
  }
  const auto n = spec.descriptor_count();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      for (int a = 0; a < spec.cim.state_count(i); ++a) {
        for (int b = 0; b < spec.cim.state_count(j); ++b) {
          if (!spec.cim.defined(i, a, j, b)) {
            throw ParseError(path, fmt::format("missing cell {}[{}] -> {}[{}]", spec.descriptors[i].id,
                                               spec.descriptors[i].states[a].label, spec.descriptors[j].id,
                                               spec.descriptors[j].states[b].label));
          }
        }
      }
    }
  }
}

Scenario parse_baseline(const json& node, const StudySpec& spec, const Resolver& resolve) {
  const std::string path = "/baseline";
  Scenario z;
  z.states.assign(spec.descriptor_count(), -1);
  if (node.is_array()) {
    if (node.size() != spec.descriptor_count()) {
      throw ParseError(path, "baseline array must list one state per descriptor");
    }
    for (std::size_t i = 0; i < node.size(); ++i) z[i] = resolve.state(i, node[i], join(path, i));
    return z;
  }
  expect_object(node, path);
  for (const auto& [key, value] : node.items()) {
    const auto i = resolve.descriptor(json(key), join(path, key));
    z[i] = resolve.state(i, value, join(path, key));
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] < 0) throw ParseError(join(path, spec.descriptors[i].id), "baseline state missing");
  }
  return z;
}

DomainRules parse_rules(const json& node, const Resolver& resolve) {
  const std::string path = "/rules";
  expect_object(node, path);
  reject_unknown_keys(node, {"forbidden_pairs", "implications"}, path);
  DomainRules rules;
  if (node.contains("forbidden_pairs")) {
    const auto fpath = join(path, "forbidden_pairs");
    const auto& pairs = node["forbidden_pairs"];
    expect_array(pairs, fpath);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto p = join(fpath, k);
      if (!pairs[k].is_array() || pairs[k].size() != 2) throw ParseError(p, "expected a pair of state references");
      rules.forbidden_pairs.push_back(
          {resolve.state_ref(pairs[k][0], join(p, 0)), resolve.state_ref(pairs[k][1], join(p, 1))});
    }
  }
  if (node.contains("implications")) {
    const auto ipath = join(path, "implications");
    const auto& imps = node["implications"];
    expect_array(imps, ipath);
    for (std::size_t k = 0; k < imps.size(); ++k) {
      const auto p = join(ipath, k);
      expect_object(imps[k], p);
      reject_unknown_keys(imps[k], {"if", "then"}, p);
      rules.implications.push_back({resolve.state_ref(require(imps[k], "if", p), join(p, "if")),
                                    resolve.state_ref(require(imps[k], "then", p), join(p, "then"))});
    }
  }
  return rules;
}

std::vector<ThresholdRule> parse_threshold_rules(const json& node, const Resolver& resolve) {
  const std::string path = "/threshold_rules";
  expect_array(node, path);
  std::vector<ThresholdRule> out;
  for (std::size_t k = 0; k < node.size(); ++k) {
    const auto p = join(path, k);
    const auto& rec = node[k];
    expect_object(rec, p);
    reject_unknown_keys(rec, {"conditions", "effect"}, p);
    ThresholdRule rule;
    const auto cpath = join(p, "conditions");
    const auto& conds = require(rec, "conditions", p);
    expect_array(conds, cpath);
    for (std::size_t c = 0; c < conds.size(); ++c) rule.conditions.push_back(resolve.state_ref(conds[c], join(cpath, c)));
    const auto epath = join(p, "effect");
    const auto& eff = require(rec, "effect", p);
    expect_object(eff, epath);
    reject_unknown_keys(eff, {"source", "source_state", "target", "target_state", "delta"}, epath);
    rule.effect.source = resolve.descriptor(require(eff, "source", epath), join(epath, "source"));
    rule.effect.target = resolve.descriptor(require(eff, "target", epath), join(epath, "target"));
    rule.effect.source_state =
        resolve.state(rule.effect.source, require(eff, "source_state", epath), join(epath, "source_state"));
    rule.effect.target_state =
        resolve.state(rule.effect.target, require(eff, "target_state", epath), join(epath, "target_state"));
    rule.delta = as_number(require(eff, "delta", epath), join(epath, "delta"));
    out.push_back(std::move(rule));
  }
  return out;
}

ShockConfig parse_shocks(const json& node) {
  const std::string path = "/shocks";
  expect_object(node, path);
  reject_unknown_keys(node, {"structural", "dynamic"}, path);
  ShockConfig cfg;
  if (node.contains("structural")) {
    const auto p = join(path, "structural");
    const auto& s = node["structural"];
    expect_object(s, p);
    reject_unknown_keys(s, {"enabled", "scale", "distribution"}, p);
    if (s.contains("enabled")) cfg.structural.enabled = as_bool(s["enabled"], join(p, "enabled"));
    cfg.structural.scale = number_or(s, "scale", cfg.structural.scale, p);
    if (s.contains("distribution")) cfg.structural.distribution = parse_distribution(s["distribution"], join(p, "distribution"));
  }
  if (node.contains("dynamic")) {
    const auto p = join(path, "dynamic");
    const auto& d = node["dynamic"];
    expect_object(d, p);
    reject_unknown_keys(d, {"enabled", "long_run_sd", "persistence", "distribution"}, p);
    if (d.contains("enabled")) cfg.dynamic.enabled = as_bool(d["enabled"], join(p, "enabled"));
    cfg.dynamic.long_run_sd = number_or(d, "long_run_sd", cfg.dynamic.long_run_sd, p);
    cfg.dynamic.persistence = number_or(d, "persistence", cfg.dynamic.persistence, p);
    if (d.contains("distribution")) cfg.dynamic.distribution = parse_distribution(d["distribution"], join(p, "distribution"));
  }
  return cfg;
}

int parse_period_key(const std::string& key, const std::string& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(key, &used);
    if (used == key.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(path, fmt::format("'{}' is not an integer key", key));
}

UncertaintyConfig parse_uncertainty(const json* node, const std::vector<int>& grid) {
  const std::string path = "/uncertainty";
  UncertaintyConfig cfg;
  bool time_scale_given = false;
  std::optional<ResamplePolicy> resample;
  if (node) {
    expect_object(*node, path);
    reject_unknown_keys(*node, {"confidence_sigma", "time_scale", "sampling_distribution", "resample"}, path);
    if (node->contains("confidence_sigma")) {
      const auto p = join(path, "confidence_sigma");
      const auto& m = (*node)["confidence_sigma"];
      expect_object(m, p);
      for (const auto& [key, value] : m.items()) {
        const int code = parse_period_key(key, join(p, key));
        if (code < 1 || code > kConfidenceLevels) throw RangeError(join(p, key), "confidence code outside 1..5");
        cfg.confidence_sigma[code - 1] = as_number(value, join(p, key));
      }
    }
    if (node->contains("time_scale")) {
      const auto p = join(path, "time_scale");
      const auto& m = (*node)["time_scale"];
      expect_object(m, p);
      time_scale_given = true;
      for (const auto& [key, value] : m.items()) cfg.time_scale[parse_period_key(key, join(p, key))] = as_number(value, join(p, key));
    }
    if (node->contains("sampling_distribution")) {
      cfg.sampling_distribution =
          parse_distribution((*node)["sampling_distribution"], join(path, "sampling_distribution"));
    }
    if (node->contains("resample")) {
      const auto p = join(path, "resample");
      const auto name = as_string((*node)["resample"], p);
      if (name == "per_run") resample = ResamplePolicy::per_run;
      else if (name == "per_period") resample = ResamplePolicy::per_period;
      else throw ParseError(p, fmt::format("unknown resample policy '{}'", name));
    }
  }
  if (!time_scale_given) {
    cfg.time_scale = linear_time_scale(grid);
  } else {
    for (int t : grid) cfg.time_scale.try_emplace(t, 1.0);
  }
  if (resample) {
    cfg.resample = *resample;
  } else {
    bool constant = true;
    for (int t : grid) constant = constant && cfg.time_scale.at(t) == cfg.time_scale.at(grid.front());
    cfg.resample = constant ? ResamplePolicy::per_run : ResamplePolicy::per_period;
  }
  return cfg;
}

json state_ref_json(const StateRef& r, const StudySpec& spec) {
  return json{{"descriptor", spec.descriptors.at(r.descriptor).id}, {"state", r.state}};
}

}  // namespace

StudySpec parse_study_spec(const json& document) {
  expect_object(document, "");
  reject_unknown_keys(document,
                      {"descriptors", "cim", "baseline", "rules", "threshold_rules", "shocks", "uncertainty", "time_grid"},
                      "");
  StudySpec spec;

  const auto& descs = require(document, "descriptors", "");
  expect_array(descs, "/descriptors");
  for (std::size_t i = 0; i < descs.size(); ++i) spec.descriptors.push_back(parse_descriptor(descs[i], join("/descriptors", i)));

  const auto& grid = require(document, "time_grid", "");
  expect_array(grid, "/time_grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    spec.time_grid.push_back(static_cast<int>(as_integer(grid[i], join("/time_grid", i))));
  }

  const Resolver resolve(spec.descriptors);
  parse_cim(require(document, "cim", ""), spec, resolve);
  spec.baseline = parse_baseline(require(document, "baseline", ""), spec, resolve);
  if (document.contains("rules")) spec.rules = parse_rules(document["rules"], resolve);
  if (document.contains("threshold_rules")) spec.threshold_rules = parse_threshold_rules(document["threshold_rules"], resolve);
  if (document.contains("shocks")) spec.shocks = parse_shocks(document["shocks"]);
  spec.uncertainty = parse_uncertainty(document.contains("uncertainty") ? &document["uncertainty"] : nullptr, spec.time_grid);
  return spec;
}

StudySpec parse_study_spec_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", fmt::format("malformed document: {}", e.what()));
  }
  return parse_study_spec(doc);
}

StudySpec load_study_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open study spec");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_study_spec_text(buf.str());
}

json serialize_study_spec(const StudySpec& spec) {
  json doc;
  json descs = json::array();
  for (const auto& d : spec.descriptors) {
    json jd{{"id", d.id}, {"name", d.name}, {"kind", to_string(d.kind)}};
    json states = json::array();
    for (const auto& s : d.states) states.push_back({{"label", s.label}, {"definition", s.definition}});
    jd["states"] = std::move(states);
    if (d.cyclic) {
      jd["cyclic"] = {{"stay", d.cyclic->stay}, {"step", d.cyclic->step}, {"step2", d.cyclic->step2},
                      {"drift", d.cyclic->drift}};
    }
    descs.push_back(std::move(jd));
  }
  doc["descriptors"] = std::move(descs);

  json cells = json::array();
  const auto n = spec.descriptor_count();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      for (int a = 0; a < spec.cim.state_count(i); ++a) {
        for (int b = 0; b < spec.cim.state_count(j); ++b) {
          if (!spec.cim.defined(i, a, j, b)) continue;
          const auto c = spec.cim.cell(i, a, j, b);
          cells.push_back({{"source", spec.descriptors[i].id},
                           {"source_state", a},
                           {"target", spec.descriptors[j].id},
                           {"target_state", b},
                           {"score", c.score},
                           {"confidence", c.confidence}});
        }
      }
    }
  }
  doc["cim"] = std::move(cells);

  json baseline = json::object();
  for (std::size_t i = 0; i < spec.baseline.size() && i < n; ++i) baseline[spec.descriptors[i].id] = spec.baseline[i];
  doc["baseline"] = std::move(baseline);

  json pairs = json::array();
  for (const auto& fp : spec.rules.forbidden_pairs) pairs.push_back({state_ref_json(fp.first, spec), state_ref_json(fp.second, spec)});
  json imps = json::array();
  for (const auto& im : spec.rules.implications) {
    imps.push_back({{"if", state_ref_json(im.antecedent, spec)}, {"then", state_ref_json(im.consequent, spec)}});
  }
  doc["rules"] = {{"forbidden_pairs", std::move(pairs)}, {"implications", std::move(imps)}};

  json rules = json::array();
  for (const auto& r : spec.threshold_rules) {
    json conds = json::array();
    for (const auto& c : r.conditions) conds.push_back(state_ref_json(c, spec));
    rules.push_back({{"conditions", std::move(conds)},
                     {"effect",
                      {{"source", spec.descriptors.at(r.effect.source).id},
                       {"source_state", r.effect.source_state},
                       {"target", spec.descriptors.at(r.effect.target).id},
                       {"target_state", r.effect.target_state},
                       {"delta", r.delta}}}});
  }
  doc["threshold_rules"] = std::move(rules);

  doc["shocks"] = {
      {"structural",
       {{"enabled", spec.shocks.structural.enabled},
        {"scale", spec.shocks.structural.scale},
        {"distribution", serialize_distribution(spec.shocks.structural.distribution)}}},
      {"dynamic",
       {{"enabled", spec.shocks.dynamic.enabled},
        {"long_run_sd", spec.shocks.dynamic.long_run_sd},
        {"persistence", spec.shocks.dynamic.persistence},
        {"distribution", serialize_distribution(spec.shocks.dynamic.distribution)}}}};

  json sigma = json::object();
  for (int c = 1; c <= kConfidenceLevels; ++c) sigma[std::to_string(c)] = spec.uncertainty.confidence_sigma[c - 1];
  json scale = json::object();
  for (const auto& [t, f] : spec.uncertainty.time_scale) scale[std::to_string(t)] = f;
  doc["uncertainty"] = {{"confidence_sigma", std::move(sigma)},
                        {"time_scale", std::move(scale)},
                        {"sampling_distribution", serialize_distribution(spec.uncertainty.sampling_distribution)},
                        {"resample", to_string(spec.uncertainty.resample)}};
  doc["time_grid"] = spec.time_grid;
  return doc;
}

std::string spec_digest(const StudySpec& spec) { return content_hash(serialize_study_spec(spec).dump()); }

// ---------------------------------------------------------------------------
// Validation

namespace {

class FindingSink {
 public:
  void error(std::string path, std::string message) {
    out.push_back({Severity::error, std::move(path), std::move(message)});
  }
  void warning(std::string path, std::string message) {
    out.push_back({Severity::warning, std::move(path), std::move(message)});
  }
  std::vector<Finding> out;
};

bool valid_ref(const StudySpec& spec, const StateRef& r) {
  return r.descriptor < spec.descriptor_count() && r.state >= 0 &&
         r.state < spec.descriptors[r.descriptor].state_count();
}

void check_distribution(const Distribution& d, const std::string& path, FindingSink& sink) {
  if (d.kind == Distribution::Kind::student_t && d.df <= 2) {
    sink.error(path, fmt::format("student_t requires df > 2 for a finite standard deviation (got {})", d.df));
  }
}

}  // namespace

std::vector<Finding> validate_study_spec(const StudySpec& spec) {
  FindingSink sink;
  const auto n = spec.descriptor_count();

  if (n < 2) sink.error("/descriptors", "at least two descriptors are required");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = spec.descriptors[i];
    const auto p = join("/descriptors", i);
    if (d.id.empty()) sink.error(join(p, "id"), "descriptor id is empty");
    if (!ids.insert(d.id).second) sink.error(join(p, "id"), fmt::format("duplicate descriptor id '{}'", d.id));
    if (d.state_count() < kMinStates || d.state_count() > kMaxStates) {
      sink.error(join(p, "states"), fmt::format("descriptor '{}' has {} states; expected 2..5", d.id, d.state_count()));
    }
    std::set<std::string> labels;
    for (std::size_t s = 0; s < d.states.size(); ++s) {
      const auto& st = d.states[s];
      if (st.index != static_cast<int>(s)) {
        sink.error(join(join(p, "states"), s), fmt::format("state index {} does not match position {}", st.index, s));
      }
      if (!labels.insert(st.label).second) {
        sink.error(join(join(p, "states"), s), fmt::format("duplicate state label '{}' in '{}'", st.label, d.id));
      }
    }
    const bool is_cyclic = d.kind == DescriptorKind::cyclic;
    if (is_cyclic && !d.cyclic) sink.error(join(p, "cyclic"), fmt::format("cyclic descriptor '{}' lacks transition parameters", d.id));
    if (!is_cyclic && d.cyclic) sink.error(join(p, "cyclic"), fmt::format("non-cyclic descriptor '{}' carries transition parameters", d.id));
    if (d.cyclic) {
      const auto& c = *d.cyclic;
      const auto cp = join(p, "cyclic");
      for (auto [name, v] : {std::pair{"stay", c.stay}, std::pair{"step", c.step}, std::pair{"step2", c.step2}}) {
        if (!(v >= 0.0 && v <= 1.0)) sink.error(join(cp, name), fmt::format("probability {} outside [0, 1]", v));
      }
      const double sum = c.stay + c.step + c.step2;
      if (!(std::abs(sum - 1.0) <= 1e-9)) {
        sink.error(cp, fmt::format("stay + step + step2 = {} for '{}'; probabilities must sum to 1", sum, d.id));
      }
      if (!(c.drift >= -1.0 && c.drift <= 1.0)) sink.error(join(cp, "drift"), fmt::format("drift {} outside [-1, +1]", c.drift));
    }
  }

  // Cross-impact matrix.
  const bool shape_ok = spec.cim.state_counts() == spec.state_counts();
  if (!shape_ok) {
    sink.error("/cim", "matrix shape does not match the descriptor state counts");
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        for (int a = 0; a < spec.cim.state_count(i); ++a) {
          for (int b = 0; b < spec.cim.state_count(j); ++b) {
            const auto p = fmt::format("/cim/{}[{}]->{}[{}]", spec.descriptors[i].id, a, spec.descriptors[j].id, b);
            if (!spec.cim.defined(i, a, j, b)) {
              sink.error(p, "cell missing");
              continue;
            }
            const auto c = spec.cim.cell(i, a, j, b);
            if (!std::isfinite(c.score) || c.score < kMinScore || c.score > kMaxScore) {
              sink.error(p + "/score", fmt::format("score {} outside [-3, +3]", c.score));
            }
            if (c.confidence < 1 || c.confidence > kConfidenceLevels) {
              sink.error(p + "/confidence", fmt::format("confidence {} outside 1..5", c.confidence));
            }
          }
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      bool outgoing = false;
      bool incoming = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        for (int a = 0; a < spec.cim.state_count(i); ++a) {
          for (int b = 0; b < spec.cim.state_count(j); ++b) {
            outgoing = outgoing || spec.cim.score(i, a, j, b) != 0.0;
            incoming = incoming || spec.cim.score(j, b, i, a) != 0.0;
          }
        }
      }
      if (n > 1 && !outgoing) sink.warning("/cim", fmt::format("descriptor '{}' exerts no impact (all-zero rows)", spec.descriptors[i].id));
      if (n > 1 && !incoming) sink.warning("/cim", fmt::format("descriptor '{}' receives no impact (all-zero columns)", spec.descriptors[i].id));
    }
  }

  // Domain rules.
  for (std::size_t k = 0; k < spec.rules.forbidden_pairs.size(); ++k) {
    const auto& fp = spec.rules.forbidden_pairs[k];
    const auto p = join("/rules/forbidden_pairs", k);
    if (!valid_ref(spec, fp.first) || !valid_ref(spec, fp.second)) sink.error(p, "reference to an unknown descriptor or state");
    else if (fp.first.descriptor == fp.second.descriptor) sink.error(p, "forbidden pair references the same descriptor twice");
  }
  for (std::size_t k = 0; k < spec.rules.implications.size(); ++k) {
    const auto& im = spec.rules.implications[k];
    const auto p = join("/rules/implications", k);
    if (!valid_ref(spec, im.antecedent) || !valid_ref(spec, im.consequent)) sink.error(p, "reference to an unknown descriptor or state");
    else if (im.antecedent.descriptor == im.consequent.descriptor) sink.warning(p, "implication within a single descriptor");
  }
  for (std::size_t k = 0; k < spec.threshold_rules.size(); ++k) {
    const auto& r = spec.threshold_rules[k];
    const auto p = join("/threshold_rules", k);
    for (const auto& c : r.conditions) {
      if (!valid_ref(spec, c)) sink.error(join(p, "conditions"), "reference to an unknown descriptor or state");
    }
    const auto& e = r.effect;
    if (!valid_ref(spec, {e.source, e.source_state}) || !valid_ref(spec, {e.target, e.target_state})) {
      sink.error(join(p, "effect"), "effect references an unknown descriptor or state");
    } else if (e.source == e.target) {
      sink.error(join(p, "effect"), "effect cell has identical source and target");
    }
    if (!std::isfinite(r.delta)) sink.error(join(p, "effect/delta"), "delta must be finite");
  }

  // Shocks.
  const auto& st = spec.shocks.structural;
  if (!(st.scale >= 0.0) || !std::isfinite(st.scale)) sink.error("/shocks/structural/scale", "scale must be non-negative");
  check_distribution(st.distribution, "/shocks/structural/distribution", sink);
  const auto& dy = spec.shocks.dynamic;
  if (!(dy.long_run_sd >= 0.0) || !std::isfinite(dy.long_run_sd)) sink.error("/shocks/dynamic/long_run_sd", "long-run sd must be non-negative");
  if (dy.enabled && !(std::abs(dy.persistence) < 1.0)) {
    sink.error("/shocks/dynamic/persistence", fmt::format("|rho| = {} must be below 1", std::abs(dy.persistence)));
  }
  check_distribution(dy.distribution, "/shocks/dynamic/distribution", sink);

  // Uncertainty.
  const auto& u = spec.uncertainty;
  for (int c = 0; c < kConfidenceLevels; ++c) {
    const auto p = fmt::format("/uncertainty/confidence_sigma/{}", c + 1);
    if (!(u.confidence_sigma[c] >= 0.0) || !std::isfinite(u.confidence_sigma[c])) sink.error(p, "sigma must be non-negative");
    if (c > 0 && u.confidence_sigma[c] > u.confidence_sigma[c - 1]) {
      sink.error(p, "sigma must be non-increasing in the confidence code");
    }
  }
  for (int t : spec.time_grid) {
    auto it = u.time_scale.find(t);
    if (it == u.time_scale.end()) sink.error("/uncertainty/time_scale", fmt::format("no factor for period {}", t));
    else if (!(it->second >= 0.0) || !std::isfinite(it->second)) {
      sink.error(fmt::format("/uncertainty/time_scale/{}", t), "factor must be non-negative");
    }
  }
  for (const auto& [t, f] : u.time_scale) {
    if (std::find(spec.time_grid.begin(), spec.time_grid.end(), t) == spec.time_grid.end()) {
      sink.warning(fmt::format("/uncertainty/time_scale/{}", t), "period not in the time grid");
    }
  }
  check_distribution(u.sampling_distribution, "/uncertainty/sampling_distribution", sink);

  // Time grid.
  if (spec.time_grid.size() < 2) sink.error("/time_grid", "at least two periods are required");
  for (std::size_t k = 1; k < spec.time_grid.size(); ++k) {
    if (spec.time_grid[k] <= spec.time_grid[k - 1]) sink.error(join("/time_grid", k), "periods must be strictly increasing");
  }

  // Baseline.
  if (spec.baseline.size() != n) {
    sink.error("/baseline", fmt::format("baseline lists {} states for {} descriptors", spec.baseline.size(), n));
  } else {
    bool refs_ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (spec.baseline[i] < 0 || spec.baseline[i] >= spec.descriptors[i].state_count()) {
        sink.error(join("/baseline", spec.descriptors[i].id), fmt::format("invalid state index {}", spec.baseline[i]));
        refs_ok = false;
      }
    }
    if (refs_ok) {
      for (std::size_t k = 0; k < spec.rules.forbidden_pairs.size(); ++k) {
        const auto& fp = spec.rules.forbidden_pairs[k];
        if (!valid_ref(spec, fp.first) || !valid_ref(spec, fp.second)) continue;
        if (spec.baseline[fp.first.descriptor] == fp.first.state && spec.baseline[fp.second.descriptor] == fp.second.state) {
          const auto& a = spec.descriptors[fp.first.descriptor];
          const auto& b = spec.descriptors[fp.second.descriptor];
          sink.error("/baseline", fmt::format("baseline contains forbidden pair ({}={}, {}={})", a.id,
                                              a.states[fp.first.state].label, b.id, b.states[fp.second.state].label));
        }
      }
    }
  }
  return std::move(sink.out);
}

bool has_errors(std::span<const Finding> findings) noexcept {
  return std::any_of(findings.begin(), findings.end(), [](const Finding& f) { return f.severity == Severity::error; });
}

}  // namespace cib
