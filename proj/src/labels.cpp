#include "finforge/labels.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace finforge {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool is_kebab(const std::string& id) {
  if (id.empty()) return false;
  for (unsigned char c : id) {
    if (!(std::islower(c) || std::isdigit(c) || c == '-')) return false;
  }
  return true;
}

}  // namespace

Label Label::parse(const std::string& key) {
  auto slash = key.find('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == key.size()) {
    throw ParseError("malformed label key '" + key + "' (expected scene/attribute)");
  }
  return Label{key.substr(0, slash), key.substr(slash + 1)};
}

void LabelCatalog::add_scene(Scene s) {
  if (!is_kebab(s.id)) throw ConfigError("scene id '" + s.id + "' is not lowercase-kebab");
  if (!scenes_.emplace(s.id, s).second) throw ConfigError("duplicate scene id '" + s.id + "'");
}

void LabelCatalog::add_attribute(TaskAttribute a) {
  if (!is_kebab(a.id)) throw ConfigError("attribute id '" + a.id + "' is not lowercase-kebab");
  if (!attributes_.emplace(a.id, a).second)
    throw ConfigError("duplicate attribute id '" + a.id + "'");
}

void LabelCatalog::add_pair(const std::string& scene_id, const std::string& attr_id) {
  if (!scenes_.count(scene_id))
    throw ConfigError("pair references unknown scene '" + scene_id + "'");
  if (!attributes_.count(attr_id))
    throw ConfigError("pair references unknown attribute '" + attr_id + "'");
  if (!allowed_pairs_.emplace(scene_id, attr_id).second)
    throw ConfigError("duplicate pair '" + scene_id + "/" + attr_id + "'");
}

bool LabelCatalog::validate(const Label& label) const {
  return allowed_pairs_.count({label.scene, label.attribute}) > 0;
}

bool LabelCatalog::validate_key(const std::string& label_key) const {
  auto slash = label_key.find('/');
  if (slash == std::string::npos) return false;
  return allowed_pairs_.count({label_key.substr(0, slash), label_key.substr(slash + 1)}) > 0;
}

void LabelCatalog::check_nonempty() const {
  if (allowed_pairs_.empty()) throw ConfigError("catalog declares no allowed pairs");
}

LabelCatalog parse_catalog(const std::string& text, const std::string& origin) {
  LabelCatalog catalog;
  std::istringstream in(text);
  std::string line;
  enum class Section { none, scenes, attributes, pairs } section = Section::none;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t == "[scenes]") { section = Section::scenes; continue; }
    if (t == "[attributes]") { section = Section::attributes; continue; }
    if (t == "[pairs]") { section = Section::pairs; continue; }
    auto where = origin + ":" + std::to_string(lineno);
    try {
      switch (section) {
        case Section::none:
          throw ParseError("content before any section header");
        case Section::scenes:
        case Section::attributes: {
          auto ws = t.find_first_of(" \t");
          std::string id = (ws == std::string::npos) ? t : t.substr(0, ws);
          std::string name = (ws == std::string::npos) ? id : trim(t.substr(ws));
          if (section == Section::scenes)
            catalog.add_scene({id, name});
          else
            catalog.add_attribute({id, name});
          break;
        }
        case Section::pairs: {
          Label l = Label::parse(t);
          catalog.add_pair(l.scene, l.attribute);
          break;
        }
      }
    } catch (const std::runtime_error& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  catalog.check_nonempty();
  return catalog;
}

LabelCatalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open catalog file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_catalog(buf.str(), path);
}

std::string serialize_catalog(const LabelCatalog& catalog) {
  std::ostringstream out;
  out << "[scenes]\n";
  for (const auto& [id, s] : catalog.scenes()) out << id << "\t" << s.display_name << "\n";
  out << "[attributes]\n";
  for (const auto& [id, a] : catalog.attributes()) out << id << "\t" << a.display_name << "\n";
  out << "[pairs]\n";
  for (const auto& [scene, attr] : catalog.allowed_pairs()) out << scene << "/" << attr << "\n";
  return out.str();
}

void save_catalog(const LabelCatalog& catalog, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write catalog file '" + path + "'");
  out << serialize_catalog(catalog);
}

}  // namespace finforge
