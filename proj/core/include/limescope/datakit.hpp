#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace limescope {

struct ItemOrigin {
  bool augmented = false;
  std::string source;  // path of the original, empty for originals
  std::string op;      // canonical augmentation text, empty for originals

  bool operator==(const ItemOrigin&) const = default;
};

struct ManifestItem {
  std::string path;
  std::string label;
  ItemOrigin origin;

  bool operator==(const ManifestItem&) const = default;
};

/// Labeled image inventory. Item paths are stored as written in the manifest
/// file and resolved against `root` (the manifest's directory) on access.
struct DatasetManifest {
  std::vector<std::string> classes;
  std::vector<ManifestItem> items;
  std::filesystem::path root;

  std::filesystem::path resolve(const std::string& path) const;
  int class_index(const std::string& label) const;  // -1 when unknown
  std::vector<std::size_t> class_counts() const;

  bool operator==(const DatasetManifest& other) const {
    return classes == other.classes && items == other.items;
  }
};

/// Throws BadParameter when an invariant does not hold: unique classes,
/// labels drawn from classes, non-empty paths, augmented items with a source.
void validate(const DatasetManifest& m);

DatasetManifest read_manifest(const std::filesystem::path& file);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& file);

/// Rewrites relative item, source and mix-partner paths so they resolve the
/// same way from `new_root`.
DatasetManifest rebase(const DatasetManifest& m, const std::filesystem::path& new_root);

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

enum class SplitStrategy { Random, Stratified };

struct SplitConfig {
  std::array<double, 3> ratios{0.70, 0.15, 0.15};
  SplitStrategy strategy = SplitStrategy::Stratified;
  std::uint64_t seed = 0;
};

struct SplitResult {
  DatasetManifest train;
  DatasetManifest val;
  DatasetManifest test;
  std::vector<std::string> warnings;
};

/// Bucket totals for n items: held = ceil(n*(val+test)),
/// test = ceil(held*test/(val+test)), val = held - test, train = n - held.
std::array<std::size_t, 3> split_totals(std::size_t n, const std::array<double, 3>& ratios);

/// Per-class bucket counts. Every cell is floor or ceil of n_c*ratio_k and
/// the column sums equal split_totals(sum n_c). Rounding units go to larger
/// fractional parts first, then lower class index.
std::vector<std::array<std::size_t, 3>> stratified_counts(const std::vector<std::size_t>& class_sizes,
                                                          const std::array<double, 3>& ratios);

/// Throws EmptyManifest when fewer than 3 items are present. In stratified
/// mode a class with fewer than 3 items goes to train whole, with a warning.
SplitResult split(const DatasetManifest& m, const SplitConfig& cfg);

/// Undersamples classes above `target` to a seeded uniform subset and tops up
/// classes below it with augmented copies of their originals. Augmented item
/// paths live under `augmented/<class>/`. Throws BadTarget when target < 1 and
/// EmptyClass when a declared class has no items.
DatasetManifest balance(const DatasetManifest& m, std::size_t target, std::uint64_t seed);

/// Renders every augmented item whose file does not yet exist under
/// `out.root`, reading sources through `src`. Returns the number written.
std::size_t materialize(const DatasetManifest& out, const DatasetManifest& src);

struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::uint64_t> counts;  // rows = truth, cols = prediction

  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts[truth * classes + pred]; }
  std::uint64_t total() const;
};

ConfusionMatrix confusion(const std::vector<int>& pred, const std::vector<int>& truth, std::size_t classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::uint64_t support = 0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  double overall_accuracy = 0.0;
  std::uint64_t total = 0;
};

/// One-vs-rest metrics per class; 0/0 cells are reported as 0 and flagged.
MetricsReport report(const ConfusionMatrix& cm);

/// Names default to the class index when `names` is empty.
nlohmann::json report_json(const MetricsReport& r, const ConfusionMatrix& cm,
                           const std::vector<std::string>& names = {});
std::string report_table(const MetricsReport& r, const std::vector<std::string>& names = {});

}  // namespace limescope
