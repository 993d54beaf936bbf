#include <cctype>

#include "auditflow/blocks.hpp"
#include "auditflow/scoring/scoring.hpp"
#include "auditflow/util.hpp"

namespace auditflow::scoring {

std::string_view component_name(Component c) {
  switch (c) {
    case Component::Functions: return "functions";
    case Component::Variables: return "variables";
    case Component::Modifiers: return "modifiers";
    case Component::Events: return "events";
    case Component::Questions: return "questions";
  }
  return "";
}

const std::set<std::string>& ComponentSets::get(Component c) const {
  switch (c) {
    case Component::Functions: return functions;
    case Component::Variables: return variables;
    case Component::Modifiers: return modifiers;
    case Component::Events: return events;
    case Component::Questions: return questions;
  }
  return questions;
}

std::set<std::string>& ComponentSets::get(Component c) {
  return const_cast<std::set<std::string>&>(std::as_const(*this).get(c));
}

bool ComponentSets::all_empty() const {
  for (Component c : kAllComponents) {
    if (!get(c).empty()) return false;
  }
  return true;
}

namespace {

std::string squeeze(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::string strip_keyword(std::string s, std::string_view keyword) {
  const std::string t = trim(s);
  if (starts_with_ci(t, keyword) && t.size() > keyword.size() &&
      std::isspace(static_cast<unsigned char>(t[keyword.size()]))) {
    return trim(std::string_view(t).substr(keyword.size()));
  }
  return t;
}

// name + "/" + number of parameters inside the first parenthesized list.
std::string callable_key(std::string_view signature, std::string_view keyword) {
  const std::string sig = strip_keyword(std::string(signature), keyword);
  const auto open = sig.find('(');
  if (open == std::string::npos) return squeeze(sig) + "/0";
  const auto close = sig.find(')', open);
  const std::string params =
      sig.substr(open + 1, (close == std::string::npos ? sig.size() : close) - open - 1);
  int arity = 0;
  if (!trim(params).empty()) {
    arity = 1;
    for (char c : params) {
      if (c == ',') ++arity;
    }
  }
  return squeeze(sig.substr(0, open)) + "/" + std::to_string(arity);
}

}  // namespace

std::string component_key(Component c, std::string_view signature) {
  switch (c) {
    case Component::Functions: return callable_key(signature, "function");
    case Component::Events: return callable_key(signature, "event");
    case Component::Modifiers: {
      std::string sig = strip_keyword(std::string(signature), "modifier");
      const auto open = sig.find('(');
      if (open != std::string::npos) sig.resize(open);
      return squeeze(sig);
    }
    case Component::Variables: return squeeze(signature);
    case Component::Questions: return normalize_text(signature);
  }
  return {};
}

ComponentSets extract_components(std::string_view analysis) {
  ComponentSets sets;
  for (const auto& block : find_fenced_blocks(analysis)) {
    std::optional<Component> which;
    for (Component c : kAllComponents) {
      if (block.info == component_name(c)) which = c;
    }
    if (!which) continue;
    for (const auto& raw : split_lines(block.body)) {
      std::string line = trim(raw);
      if (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0) line = trim(line.substr(2));
      if (line.empty()) continue;
      std::string signature = line;
      std::string description;
      if (*which != Component::Questions) {
        const auto bar = line.find('|');
        if (bar != std::string::npos) {
          signature = trim(std::string_view(line).substr(0, bar));
          description = trim(std::string_view(line).substr(bar + 1));
        }
      }
      const std::string key = component_key(*which, signature);
      if (key.empty() || key == "/0") continue;
      if (sets.get(*which).insert(key).second && !description.empty()) {
        sets.descriptions[std::string(component_name(*which)) + "/" + key] = description;
      }
    }
  }
  return sets;
}

double CoverageWeights::of(Component c) const {
  switch (c) {
    case Component::Functions: return functions;
    case Component::Variables: return variables;
    case Component::Modifiers: return modifiers;
    case Component::Events: return events;
    case Component::Questions: return questions;
  }
  return 0.0;
}

PrfScore prf(std::size_t overlap, std::size_t out_size, std::size_t gold_size) {
  PrfScore s;
  if (out_size > 0) s.precision = static_cast<double>(overlap) / static_cast<double>(out_size);
  if (gold_size > 0) s.recall = static_cast<double>(overlap) / static_cast<double>(gold_size);
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

double coverage_f1(const ComponentSets& out, const ComponentSets& gold,
                   const CoverageWeights& weights) {
  double weighted = 0.0;
  double weight_total = 0.0;
  for (Component c : kAllComponents) {
    const double w = weights.of(c);
    const auto& g = gold.get(c);
    if (w <= 0.0 || g.empty()) continue;
    const auto& o = out.get(c);
    std::size_t overlap = 0;
    for (const auto& k : o) overlap += g.count(k);
    weighted += w * prf(overlap, o.size(), g.size()).f1;
    weight_total += w;
  }
  return weight_total > 0.0 ? weighted / weight_total : 0.0;
}

}  // namespace auditflow::scoring
