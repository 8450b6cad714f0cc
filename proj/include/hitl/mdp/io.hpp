#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "hitl/mdp/mdp.hpp"

namespace hitl {

inline void to_json(nlohmann::json& j, const MdpSpec& mdp) {
  j = nlohmann::json{{"n_states", mdp.n_states},
                     {"n_actions", mdp.n_actions},
                     {"gamma", mdp.gamma},
                     {"transition", mdp.transition},
                     {"reward", mdp.reward},
                     {"terminal", mdp.terminal},
                     {"start", mdp.start}};
}

inline void from_json(const nlohmann::json& j, MdpSpec& mdp) {
  j.at("n_states").get_to(mdp.n_states);
  j.at("n_actions").get_to(mdp.n_actions);
  j.at("gamma").get_to(mdp.gamma);
  j.at("transition").get_to(mdp.transition);
  j.at("reward").get_to(mdp.reward);
  j.at("terminal").get_to(mdp.terminal);
  j.at("start").get_to(mdp.start);
}

/// Parses and validates an MDP document.
inline MdpSpec load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open MDP file " + path);
  MdpSpec mdp;
  try {
    mdp = nlohmann::json::parse(in).get<MdpSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError("malformed MDP file " + path + ": " + e.what());
  }
  mdp.validate();
  return mdp;
}

inline void save_mdp(const MdpSpec& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write MDP file " + path);
  out << nlohmann::json(mdp).dump() << '\n';
}

}  // namespace hitl
