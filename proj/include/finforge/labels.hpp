#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

namespace finforge {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Scene {
  std::string id;
  std::string display_name;

  bool operator==(const Scene&) const = default;
};

struct TaskAttribute {
  std::string id;
  std::string display_name;

  bool operator==(const TaskAttribute&) const = default;
};

// Composite label: one scene paired with one task attribute.
// Referenced everywhere by the canonical string "scene/attribute".
struct Label {
  std::string scene;
  std::string attribute;

  std::string key() const { return scene + "/" + attribute; }
  static Label parse(const std::string& key);

  bool operator==(const Label&) const = default;
  auto operator<=>(const Label&) const = default;
};

// Scenes x attributes with an explicit, sparse set of allowed pairs.
// Immutable after load; safe to share across threads.
class LabelCatalog {
 public:
  void add_scene(Scene s);
  void add_attribute(TaskAttribute a);
  void add_pair(const std::string& scene_id, const std::string& attr_id);

  bool validate(const Label& label) const;
  bool validate_key(const std::string& label_key) const;

  std::size_t pair_count() const { return allowed_pairs_.size(); }
  const std::set<std::pair<std::string, std::string>>& allowed_pairs() const {
    return allowed_pairs_;
  }
  const std::map<std::string, Scene>& scenes() const { return scenes_; }
  const std::map<std::string, TaskAttribute>& attributes() const { return attributes_; }

  void check_nonempty() const;

  bool operator==(const LabelCatalog&) const = default;

 private:
  std::map<std::string, Scene> scenes_;
  std::map<std::string, TaskAttribute> attributes_;
  std::set<std::pair<std::string, std::string>> allowed_pairs_;
};

// Catalog file: plain text, three sections ([scenes], [attributes], [pairs]).
// Scene/attribute lines are "<id>\t<display name>" (any whitespace works);
// pair lines are "<scene>/<attribute>". Lines starting with '#' are comments.
LabelCatalog load_catalog(const std::string& path);
LabelCatalog parse_catalog(const std::string& text, const std::string& origin = "<string>");
std::string serialize_catalog(const LabelCatalog& catalog);
void save_catalog(const LabelCatalog& catalog, const std::string& path);

}  // namespace finforge
