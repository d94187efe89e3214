#include <algorithm>
#include <filesystem>
#include <numeric>
#include <optional>

#include "limescope/augment.hpp"
#include "limescope/datakit.hpp"
#include "limescope/error.hpp"
#include "limescope/rng.hpp"

namespace limescope {

DatasetManifest balance(const DatasetManifest& m, std::size_t target, std::uint64_t seed) {
  if (target < 1) fail(ErrorKind::BadTarget, "balance target must be >= 1");
  validate(m);

  std::vector<std::vector<std::size_t>> members(m.classes.size());
  for (std::size_t i = 0; i < m.items.size(); ++i) {
    members[static_cast<std::size_t>(m.class_index(m.items[i].label))].push_back(i);
  }

  DatasetManifest out;
  out.classes = m.classes;
  out.root = m.root;
  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& idx = members[c];
    if (idx.empty()) fail(ErrorKind::EmptyClass, "class '" + m.classes[c] + "' has no items");
    Rng rng(derive_seed(seed, c));

    if (idx.size() >= target) {
      // Uniform subset, kept in manifest order.
      auto keep = idx;
      rng.shuffle(keep);
      keep.resize(target);
      std::sort(keep.begin(), keep.end());
      for (std::size_t i : keep) out.items.push_back(m.items[i]);
      continue;
    }

    for (std::size_t i : idx) out.items.push_back(m.items[i]);
    for (std::size_t k = 0; k < target - idx.size(); ++k) {
      const std::size_t slot = k % idx.size();
      const auto& source = m.items[idx[slot]];
      const auto family = static_cast<int>(rng.below(kAugmentationFamilies));
      const std::string& partner =
          idx.size() > 1 ? m.items[idx[(slot + 1 + rng.below(idx.size() - 1)) % idx.size()]].path : source.path;
      const auto op = random_augmentation(family, derive_seed(rng.next(), k), partner);
      const auto stem = std::filesystem::path(source.path).stem().string();
      ManifestItem item;
      item.path = "augmented/" + m.classes[c] + "/" + stem + "_aug" + std::to_string(k) + ".png";
      item.label = source.label;
      item.origin = {true, source.path, to_string(op)};
      out.items.push_back(std::move(item));
    }
  }
  return out;
}

std::size_t materialize(const DatasetManifest& out, const DatasetManifest& src) {
  std::size_t written = 0;
  for (const auto& item : out.items) {
    if (!item.origin.augmented) continue;
    const auto dest = out.resolve(item.path);
    if (std::filesystem::exists(dest)) continue;
    const auto op = parse_augmentation(item.origin.op);
    const Image source = read_image(src.resolve(item.origin.source));
    std::optional<Image> partner;
    if (const auto* mix = std::get_if<aug::Mix>(&op.params)) partner = read_image(src.resolve(mix->partner_id));
    const Image result = apply_augmentation(source, op, partner ? &*partner : nullptr);
    std::filesystem::create_directories(dest.parent_path());
    write_png(dest, result);
    ++written;
  }
  return written;
}

}  // namespace limescope
