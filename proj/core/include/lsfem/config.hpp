#pragma once

// Line-oriented run configuration:
//
//   # comment
//   [problem]
//   name = poisson-sine
//   kappa2 = 30
//
// Keys are case-sensitive; values run to the end of the line with surrounding
// whitespace removed. Coefficient values in a custom [problem] are expressions
// (see parse_expr).

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "lsfem/coefficients.hpp"

namespace lsfem {

class ConfigFile {
 public:
  using Section = std::map<std::string, std::string>;

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> find(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key, const std::string& fallback) const;
  /// Throws InvalidArgument naming section.key when the value is not a number.
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  /// Registers a (possibly empty) section.
  void add_section(const std::string& name) { sections_[name]; }
  const Section& section(const std::string& name) const;
  const std::map<std::string, Section>& sections() const { return sections_; }

 private:
  std::map<std::string, Section> sections_;
};

/// Recognized sections: problem, method, mesh, adapt, output. Unknown sections,
/// keys outside a section and lines without '=' raise ParseError (byte offset of the line).
ConfigFile parse_config(std::string_view text);
ConfigFile load_config(const std::string& path);

/// [problem] name = <preset> uses builtin_problem with every other numeric key as
/// a parameter. name = custom reads the expression keys
///   diffusion (scalar a(x,y), A = a I) or diffusion_matrix = "a11 a12 a22" (constants),
///   bx, by, c, f, and optionally u, ux, uy for an exact solution,
/// plus dirichlet = sides, discontinuous = bool.
/// Both forms accept regime = coercive|general and weights = "r s t".
ProblemSpec problem_from_config(const ConfigFile& cfg);

}  // namespace lsfem
