#ifndef ABSTAIN_RECORDS_HPP_
#define ABSTAIN_RECORDS_HPP_

// Labeled path-pool datasets: data model, JSON-lines ingestion, validation and
// seeded calibration/test splitting.
//
// Record format, one JSON object per line:
//   {"id": "p1", "truth": "42",
//    "paths": [{"answer": "42", "scores": {"reward": 1.5}}, ...]}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "abstain/errors.hpp"
#include "abstain/rng.hpp"
#include "json.hpp"

namespace abstain {

// Score-name -> value, kept sorted by name. Pools carry a handful of score
// channels at most, so a flat vector beats a node-based map here.
class ScoreMap {
 public:
  using value_type = std::pair<std::string, double>;

  ScoreMap() = default;
  ScoreMap(std::initializer_list<value_type> init) {
    for (const auto &[name, value] : init) set(name, value);
  }

  void set(std::string name, double value) {
    auto it = lower_bound(name);
    if (it != entries_.end() && it->first == name) {
      it->second = value;
    } else {
      entries_.emplace(it, std::move(name), value);
    }
  }

  std::optional<double> find(std::string_view name) const {
    auto it = std::lower_bound(
        entries_.begin(), entries_.end(), name,
        [](const value_type &e, std::string_view n) { return e.first < n; });
    if (it == entries_.end() || it->first != name) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view name) const { return find(name).has_value(); }
  std::size_t size() const { return entries_.size(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto &e : entries_) out.push_back(e.first);
    return out;
  }

  bool operator==(const ScoreMap &) const = default;

 private:
  std::vector<value_type>::iterator lower_bound(const std::string &name) {
    return std::lower_bound(
        entries_.begin(), entries_.end(), name,
        [](const value_type &e, const std::string &n) { return e.first < n; });
  }

  std::vector<value_type> entries_;
};

struct PathRecord {
  std::string answer_id;
  ScoreMap scores;

  bool operator==(const PathRecord &) const = default;
};

struct PromptInstance {
  std::string id;
  std::string truth;
  std::vector<PathRecord> paths;

  std::size_t m() const { return paths.size(); }
  bool operator==(const PromptInstance &) const = default;
};

// Checks the per-instance invariants; throws ValidationError naming the
// instance.
inline void validate_instance(const PromptInstance &inst) {
  if (inst.id.empty()) throw ValidationError(inst.id, "empty prompt id");
  if (inst.truth.empty()) throw ValidationError(inst.id, "empty truth answer");
  if (inst.paths.empty()) throw ValidationError(inst.id, "pool has no paths");
  const auto &reference = inst.paths.front().scores;
  for (std::size_t j = 0; j < inst.paths.size(); ++j) {
    const auto &path = inst.paths[j];
    if (path.answer_id.empty()) {
      throw ValidationError(inst.id,
                            "path " + std::to_string(j) + " has empty answer");
    }
    for (const auto &[name, value] : path.scores) {
      if (!std::isfinite(value)) {
        throw ValidationError(inst.id, "path " + std::to_string(j) +
                                           " score '" + name +
                                           "' is not finite");
      }
    }
    if (j > 0) {
      bool same = path.scores.size() == reference.size();
      auto a = path.scores.begin();
      for (auto b = reference.begin(); same && b != reference.end(); ++a, ++b) {
        same = a->first == b->first;
      }
      if (!same) {
        throw ValidationError(inst.id, "path " + std::to_string(j) +
                                           " exposes a different score-name set");
      }
    }
  }
}

// A validated collection of prompt instances. The only ways to obtain one run
// the full set of invariant checks, so a Dataset in hand is always well formed.
class Dataset {
 public:
  Dataset() = default;

  static Dataset from_instances(std::vector<PromptInstance> instances) {
    Dataset ds;
    std::unordered_set<std::string> ids;
    ids.reserve(instances.size());
    std::optional<std::size_t> common_m;
    bool m_warned = false;
    for (const auto &inst : instances) {
      validate_instance(inst);
      if (!ids.insert(inst.id).second) {
        throw ValidationError(inst.id, "duplicate prompt id");
      }
      auto names = inst.paths.front().scores.names();
      if (&inst == &instances.front()) {
        ds.score_names_ = std::move(names);
      } else if (names != ds.score_names_) {
        throw ValidationError(inst.id,
                              "score-name set differs from the dataset's");
      }
      if (!common_m) {
        common_m = inst.m();
      } else if (*common_m != inst.m() && !m_warned) {
        ds.warnings_.push_back("pool size varies across instances (first " +
                               std::to_string(*common_m) + ", instance '" +
                               inst.id + "' has " + std::to_string(inst.m()) +
                               ")");
        m_warned = true;
      }
    }
    ds.instances_ = std::move(instances);
    return ds;
  }

  const std::vector<PromptInstance> &instances() const { return instances_; }
  const std::vector<std::string> &score_names() const { return score_names_; }
  const std::vector<std::string> &warnings() const { return warnings_; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  const PromptInstance &operator[](std::size_t i) const { return instances_[i]; }

  bool has_score(std::string_view name) const {
    return std::find(score_names_.begin(), score_names_.end(), name) !=
           score_names_.end();
  }

  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  // Sub-dataset in the given index order. Invariants are inherited.
  Dataset subset(const std::vector<std::size_t> &indices) const {
    Dataset ds;
    ds.score_names_ = score_names_;
    ds.instances_.reserve(indices.size());
    for (auto i : indices) ds.instances_.push_back(instances_.at(i));
    return ds;
  }

  bool operator==(const Dataset &other) const {
    return instances_ == other.instances_ && score_names_ == other.score_names_;
  }

 private:
  std::vector<PromptInstance> instances_;
  std::vector<std::string> score_names_;
  std::vector<std::string> warnings_;
};

namespace detail {

inline PromptInstance instance_from_json(const nlohmann::json &j,
                                         std::size_t line,
                                         std::vector<std::string> &warnings) {
  if (!j.is_object()) throw ParseError(line, "record is not a JSON object");
  auto require_string = [&](const char *key) -> std::string {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(line, std::string("missing key '") + key + "'");
    if (!it->is_string()) {
      throw ParseError(line, std::string("key '") + key + "' is not a string");
    }
    return it->get<std::string>();
  };

  PromptInstance inst;
  inst.id = require_string("id");
  inst.truth = require_string("truth");
  for (const auto &[key, _] : j.items()) {
    if (key != "id" && key != "truth" && key != "paths") {
      warnings.push_back("line " + std::to_string(line) + ": unknown key '" +
                         key + "' ignored");
    }
  }

  auto paths = j.find("paths");
  if (paths == j.end()) throw ParseError(line, "missing key 'paths'");
  if (!paths->is_array()) throw ParseError(line, "key 'paths' is not an array");
  inst.paths.reserve(paths->size());
  for (const auto &p : *paths) {
    if (!p.is_object()) throw ParseError(line, "path entry is not an object");
    PathRecord rec;
    auto answer = p.find("answer");
    if (answer == p.end() || !answer->is_string()) {
      throw ParseError(line, "path entry needs a string 'answer'");
    }
    rec.answer_id = answer->get<std::string>();
    auto scores = p.find("scores");
    if (scores == p.end() || !scores->is_object()) {
      throw ParseError(line, "path entry needs an object 'scores'");
    }
    for (const auto &[name, value] : scores->items()) {
      if (!value.is_number()) {
        throw ValidationError(inst.id, "score '" + name +
                                           "' is not a finite number");
      }
      rec.scores.set(name, value.get<double>());
    }
    for (const auto &[key, _] : p.items()) {
      if (key != "answer" && key != "scores") {
        warnings.push_back("line " + std::to_string(line) +
                           ": unknown path key '" + key + "' ignored");
      }
    }
    inst.paths.push_back(std::move(rec));
  }
  return inst;
}

}  // namespace detail

inline Dataset parse_dataset(std::istream &in) {
  std::vector<PromptInstance> instances;
  std::vector<std::string> warnings;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
      throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    instances.push_back(detail::instance_from_json(j, line, warnings));
  }
  auto ds = Dataset::from_instances(std::move(instances));
  for (auto &w : warnings) ds.add_warning(std::move(w));
  return ds;
}

inline Dataset parse_dataset_string(const std::string &text) {
  std::istringstream in(text);
  return parse_dataset(in);
}

// `format` is the record-format tag; only "jsonl" exists today.
inline Dataset parse_dataset(const std::string &path,
                             std::string_view format = "jsonl") {
  if (format != "jsonl") {
    throw ConfigError("unknown record format '" + std::string(format) + "'");
  }
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file '" + path + "'");
  return parse_dataset(in);
}

inline nlohmann::ordered_json to_json(const PromptInstance &inst) {
  nlohmann::ordered_json paths = nlohmann::ordered_json::array();
  for (const auto &p : inst.paths) {
    nlohmann::ordered_json scores = nlohmann::ordered_json::object();
    for (const auto &[name, value] : p.scores) scores[name] = value;
    paths.push_back({{"answer", p.answer_id}, {"scores", std::move(scores)}});
  }
  return {{"id", inst.id}, {"truth", inst.truth}, {"paths", std::move(paths)}};
}

inline void write_dataset(std::ostream &out, const Dataset &ds) {
  for (const auto &inst : ds.instances()) out << to_json(inst).dump() << '\n';
}

inline std::string serialize_dataset(const Dataset &ds) {
  std::ostringstream out;
  write_dataset(out, ds);
  return out.str();
}

struct SplitPlan {
  std::uint64_t seed = 0;
  std::size_t n_cal = 0;
  std::vector<std::size_t> permutation;
  std::string algorithm{kPermutationAlgorithm};
};

struct SplitResult {
  Dataset calibration;
  Dataset test;
  SplitPlan plan;
};

// Seeded Fisher-Yates permutation; the first n_cal permuted instances form the
// calibration set and the remainder the test set.
inline SplitResult split(const Dataset &ds, std::size_t n_cal,
                         std::uint64_t seed) {
  if (n_cal < 1 || n_cal >= ds.size()) {
    throw RangeError("n_cal must satisfy 1 <= n_cal < " +
                     std::to_string(ds.size()) + ", got " +
                     std::to_string(n_cal));
  }
  Rng rng(seed);
  SplitPlan plan{seed, n_cal, random_permutation(ds.size(), rng)};
  std::vector<std::size_t> cal(plan.permutation.begin(),
                               plan.permutation.begin() + n_cal);
  std::vector<std::size_t> test(plan.permutation.begin() + n_cal,
                                plan.permutation.end());
  return {ds.subset(cal), ds.subset(test), std::move(plan)};
}

inline nlohmann::ordered_json to_json(const SplitPlan &plan) {
  return {{"algorithm", plan.algorithm},
          {"seed", plan.seed},
          {"n_cal", plan.n_cal},
          {"permutation", plan.permutation}};
}

}  // namespace abstain

#endif  // ABSTAIN_RECORDS_HPP_
