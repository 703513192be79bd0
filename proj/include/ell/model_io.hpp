// Text format for manifold models and orbifold data (see docs/formats.md).
#ifndef ELL_MODEL_IO_HPP
#define ELL_MODEL_IO_HPP

#include "ell/geom.hpp"

#include <string>
#include <variant>
#include <vector>

namespace ell {

using ParsedModel = std::variant<ManifoldModel, OrbifoldDatum>;

// Shared line reader: sections of key = value pairs with line numbers.
struct IniEntry {
    std::string key, value;
    int line = 0;
};
struct IniSection {
    std::string name;
    int line = 0;
    std::vector<IniEntry> entries;
};
std::vector<IniSection> read_sections(const std::string& text, const std::string& source);

ParsedModel parse_model_text(const std::string& text, const std::string& source = "<text>");
ParsedModel parse_model_file(const std::string& path);
ManifoldModel parse_manifold_file(const std::string& path);

std::string serialize(const ManifoldModel& m);
std::string serialize(const OrbifoldDatum& d);

std::string read_file(const std::string& path);
// "(a, b)" with rationals a, b.
std::pair<Rational, Rational> parse_rational_pair(const std::string& s);
std::string trim(const std::string& s);

}  // namespace ell

#endif
