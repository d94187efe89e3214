#include <algorithm>
#include <fstream>
#include <set>

#include "limescope/augment.hpp"
#include "limescope/datakit.hpp"
#include "limescope/error.hpp"

namespace limescope {

std::filesystem::path DatasetManifest::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return (p.is_absolute() ? p : root / p).lexically_normal();
}

int DatasetManifest::class_index(const std::string& label) const {
  const auto it = std::find(classes.begin(), classes.end(), label);
  return it == classes.end() ? -1 : static_cast<int>(it - classes.begin());
}

std::vector<std::size_t> DatasetManifest::class_counts() const {
  std::vector<std::size_t> counts(classes.size(), 0);
  for (const auto& item : items) {
    const int c = class_index(item.label);
    if (c >= 0) ++counts[static_cast<std::size_t>(c)];
  }
  return counts;
}

void validate(const DatasetManifest& m) {
  std::set<std::string> seen;
  for (const auto& c : m.classes) {
    if (c.empty()) fail(ErrorKind::BadParameter, "class names must be non-empty");
    if (!seen.insert(c).second) fail(ErrorKind::BadParameter, "duplicate class '" + c + "'");
  }
  for (const auto& item : m.items) {
    if (item.path.empty()) fail(ErrorKind::BadParameter, "manifest item with empty path");
    if (!seen.contains(item.label)) {
      fail(ErrorKind::BadParameter, "item '" + item.path + "' has undeclared label '" + item.label + "'");
    }
    if (item.origin.augmented) {
      if (item.origin.source.empty()) fail(ErrorKind::BadParameter, "augmented item '" + item.path + "' lacks a source");
      parse_augmentation(item.origin.op);
    }
  }
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  auto items = nlohmann::json::array();
  for (const auto& item : m.items) {
    nlohmann::json origin = item.origin.augmented
                                ? nlohmann::json{{"type", "augmented"}, {"source", item.origin.source}, {"op", item.origin.op}}
                                : nlohmann::json{{"type", "original"}};
    items.push_back({{"path", item.path}, {"label", item.label}, {"origin", std::move(origin)}});
  }
  j = {{"classes", m.classes}, {"items", std::move(items)}};
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
  try {
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.items.clear();
    for (const auto& entry : j.at("items")) {
      ManifestItem item{entry.at("path").get<std::string>(), entry.at("label").get<std::string>(), {}};
      if (entry.contains("origin")) {
        const auto& origin = entry.at("origin");
        const auto type = origin.at("type").get<std::string>();
        if (type == "augmented") {
          item.origin = {true, origin.at("source").get<std::string>(), origin.at("op").get<std::string>()};
        } else if (type != "original") {
          fail(ErrorKind::BadParameter, "unknown origin type '" + type + "'");
        }
      }
      m.items.push_back(std::move(item));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::BadParameter, std::string("malformed manifest: ") + e.what());
  }
  validate(m);
}

DatasetManifest read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::Io, "cannot open manifest " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::BadParameter, "manifest " + file.string() + " is not JSON: " + e.what());
  }
  auto m = j.get<DatasetManifest>();
  m.root = file.parent_path();
  return m;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) fail(ErrorKind::Io, "cannot write manifest " + file.string());
  out << nlohmann::json(m).dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "write failed for " + file.string());
}

DatasetManifest rebase(const DatasetManifest& m, const std::filesystem::path& new_root) {
  const auto target = std::filesystem::absolute(new_root).lexically_normal();
  const auto move = [&](const std::string& path) {
    const std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    const auto full = std::filesystem::absolute(m.root / p).lexically_normal();
    return full.lexically_relative(target).generic_string();
  };
  DatasetManifest out = m;
  out.root = new_root;
  for (auto& item : out.items) {
    item.path = move(item.path);
    if (!item.origin.augmented) continue;
    item.origin.source = move(item.origin.source);
    auto op = parse_augmentation(item.origin.op);
    if (auto* mix = std::get_if<aug::Mix>(&op.params)) {
      mix->partner_id = move(mix->partner_id);
      item.origin.op = to_string(op);
    }
  }
  return out;
}

}  // namespace limescope
