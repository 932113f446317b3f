#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "audit.hpp"
#include "config.hpp"

namespace pea {

using ojson = nlohmann::ordered_json;

namespace detail {

inline ojson ext(double x) {
  if (is_inf(x)) return "inf";
  if (x == -kInf) return "-inf";
  return x;
}

inline ojson ext_array(const std::vector<double>& v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(ext(x));
  return a;
}

inline double read_ext(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j == "inf") return kInf;
    if (j == "-inf") return -kInf;
    throw ConfigError("bad extended real " + j.dump());
  }
  return j.get<double>();
}

inline std::vector<double> read_ext_array(const nlohmann::json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(read_ext(x));
  return v;
}

}  // namespace detail

// Field order is part of the file format.
inline ojson to_json(const StepRecord& s) {
  using detail::ext;
  using detail::ext_array;
  ojson j;
  j["step"] = s.step;
  ojson adv = ojson::array();
  for (const auto& a : s.advice) adv.push_back(ext_array(a));
  j["advice"] = adv;
  j["pi"] = s.pi;
  j["decision"] = s.decision;
  j["outcome"] = s.outcome;
  j["outcome_point"] = s.outcome_point;
  j["learner_loss"] = ext_array(s.learner_loss);
  j["learner_cumulative"] = ext_array(s.learner_cumulative);
  j["expert_loss"] = ext_array(s.expert_loss);
  j["expert_cumulative"] = ext_array(s.expert_cumulative);
  j["log_value"] = ext(s.log_value);
  j["slack"] = s.slack;
  j["cumulative_log_slack"] = s.cumulative_log_slack;
  j["violated"] = s.violated;
  j["bound_margins"] = ext_array(s.bound_margins);
  return j;
}

inline StepRecord step_from_json(const nlohmann::json& j) {
  using detail::read_ext;
  using detail::read_ext_array;
  StepRecord s;
  s.step = j.at("step").get<std::size_t>();
  for (const auto& a : j.at("advice")) s.advice.push_back(read_ext_array(a));
  s.pi = j.at("pi").get<std::vector<double>>();
  s.decision = j.at("decision").get<std::vector<double>>();
  s.outcome = j.at("outcome").get<std::size_t>();
  s.outcome_point = j.at("outcome_point").get<std::vector<double>>();
  s.learner_loss = read_ext_array(j.at("learner_loss"));
  s.learner_cumulative = read_ext_array(j.at("learner_cumulative"));
  s.expert_loss = read_ext_array(j.at("expert_loss"));
  s.expert_cumulative = read_ext_array(j.at("expert_cumulative"));
  s.log_value = read_ext(j.at("log_value"));
  s.slack = j.at("slack").get<double>();
  s.cumulative_log_slack = j.at("cumulative_log_slack").get<double>();
  s.violated = j.at("violated").get<bool>();
  s.bound_margins = read_ext_array(j.at("bound_margins"));
  return s;
}

inline std::string to_jsonl(const std::vector<StepRecord>& traj) {
  std::string out;
  for (const auto& s : traj) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<StepRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<StepRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(step_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

inline std::string csv_number(double x) {
  if (is_inf(x)) return "inf";
  if (x == -kInf) return "-inf";
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace pea
