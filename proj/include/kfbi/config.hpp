#ifndef KFBI_CONFIG_HPP
#define KFBI_CONFIG_HPP

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kfbi/level_set.hpp"
#include "kfbi/types.hpp"

namespace kfbi {

struct ComponentSpec {
  std::string type;          // circle | ellipse | star
  std::vector<Real> params;
};

// Flat key = value run description. `component` may repeat; every other key
// may appear at most once. Lines starting with # are comments.
struct RunConfig {
  std::string problem; // dirichlet | neumann | interface_single | interface_two
  Real box_lo = -1, box_hi = 1;
  std::vector<ComponentSpec> components;
  std::string solution_interior;
  std::string solution_exterior;
  Real sigma_int = 1, sigma_ext = 1;
  Real kappa_int = 0, kappa_ext = 0;
  std::vector<int> grids;
  Real tol = 1e-10;
  int max_iterations = 200;
  Real alpha_deg = 60;

  bool is_interface() const {
    return problem == "interface_single" || problem == "interface_two";
  }
};

inline LevelSet make_component(const ComponentSpec& c) {
  const auto& p = c.params;
  auto need = [&](std::size_t n) {
    if (p.size() != n)
      throw std::invalid_argument("component " + c.type + ": expected " +
                                  std::to_string(n) + " parameters, got " +
                                  std::to_string(p.size()));
  };
  if (c.type == "circle") {
    need(3);
    return make_circle(p[0], p[1], p[2]);
  }
  if (c.type == "ellipse") {
    need(5);
    return make_ellipse(p[0], p[1], p[2], p[3], p[4]);
  }
  if (c.type == "star") {
    need(6);
    return make_star(p[0], p[1], p[2], static_cast<int>(p[3]), p[4], p[5]);
  }
  throw std::invalid_argument("unknown component type: " + c.type);
}

inline std::vector<LevelSet> make_components(const RunConfig& cfg) {
  std::vector<LevelSet> out;
  out.reserve(cfg.components.size());
  for (const auto& c : cfg.components) out.push_back(make_component(c));
  return out;
}

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> tokens(const std::string& s) {
  std::istringstream ss(s);
  std::vector<std::string> out;
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

inline Real to_real(const std::string& s, const std::string& key) {
  std::size_t pos = 0;
  Real v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number '" + s + "' for " + key);
  }
  if (pos != s.size())
    throw std::invalid_argument("config: bad number '" + s + "' for " + key);
  return v;
}

inline int to_int(const std::string& s, const std::string& key) {
  Real v = to_real(s, key);
  int i = static_cast<int>(v);
  if (static_cast<Real>(i) != v)
    throw std::invalid_argument("config: expected integer for " + key);
  return i;
}

} // namespace detail

inline void validate(const RunConfig& cfg);

inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::map<std::string, std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key or value");

    if (key == "component") {
      auto t = detail::tokens(val);
      if (t.empty())
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": empty component");
      ComponentSpec c{t[0], {}};
      for (std::size_t i = 1; i < t.size(); ++i)
        c.params.push_back(detail::to_real(t[i], key));
      cfg.components.push_back(std::move(c));
      continue;
    }
    if (!seen.emplace(key, val).second)
      throw std::invalid_argument("config: duplicate key " + key);

    if (key == "problem") {
      cfg.problem = val;
    } else if (key == "box") {
      auto t = detail::tokens(val);
      if (t.size() != 2)
        throw std::invalid_argument("config: box expects 'lo hi'");
      cfg.box_lo = detail::to_real(t[0], key);
      cfg.box_hi = detail::to_real(t[1], key);
    } else if (key == "solution_interior") {
      cfg.solution_interior = val;
    } else if (key == "solution_exterior") {
      cfg.solution_exterior = val;
    } else if (key == "sigma" || key == "sigma_interior") {
      cfg.sigma_int = detail::to_real(val, key);
    } else if (key == "sigma_exterior") {
      cfg.sigma_ext = detail::to_real(val, key);
    } else if (key == "kappa" || key == "kappa_interior") {
      cfg.kappa_int = detail::to_real(val, key);
    } else if (key == "kappa_exterior") {
      cfg.kappa_ext = detail::to_real(val, key);
    } else if (key == "grids") {
      for (const auto& t : detail::tokens(val))
        cfg.grids.push_back(detail::to_int(t, key));
    } else if (key == "tol") {
      cfg.tol = detail::to_real(val, key);
    } else if (key == "max_iterations") {
      cfg.max_iterations = detail::to_int(val, key);
    } else if (key == "alpha_deg") {
      cfg.alpha_deg = detail::to_real(val, key);
    } else {
      throw std::invalid_argument("config: unknown key " + key);
    }
  }
  validate(cfg);
  return cfg;
}

inline void validate(const RunConfig& cfg) {
  static const std::vector<std::string> kinds = {
      "dirichlet", "neumann", "interface_single", "interface_two"};
  if (std::find(kinds.begin(), kinds.end(), cfg.problem) == kinds.end())
    throw std::invalid_argument("config: problem must be one of dirichlet, "
                                "neumann, interface_single, interface_two");
  if (!(cfg.box_lo < cfg.box_hi))
    throw std::invalid_argument("config: box lo must be below hi");
  if (cfg.components.empty())
    throw std::invalid_argument("config: at least one component required");
  for (const auto& c : cfg.components) make_component(c); // shape check
  if (cfg.solution_interior.empty())
    throw std::invalid_argument("config: solution_interior required");
  if (cfg.is_interface() && cfg.solution_exterior.empty())
    throw std::invalid_argument(
        "config: solution_exterior required for interface problems");
  if (cfg.sigma_int <= 0 || cfg.sigma_ext <= 0)
    throw std::invalid_argument("config: sigma must be positive");
  if (cfg.kappa_int < 0 || cfg.kappa_ext < 0)
    throw std::invalid_argument("config: kappa must be nonnegative");
  if (cfg.grids.empty())
    throw std::invalid_argument("config: grids required");
  for (int n : cfg.grids)
    if (n < 8) throw std::invalid_argument("config: grid size below 8");
  if (cfg.tol <= 0) throw std::invalid_argument("config: tol must be positive");
  if (cfg.max_iterations < 1)
    throw std::invalid_argument("config: max_iterations must be positive");
  if (!(cfg.alpha_deg > 45 && cfg.alpha_deg < 90))
    throw std::invalid_argument("config: alpha_deg must lie in (45, 90)");
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in);
}

} // namespace kfbi

#endif
