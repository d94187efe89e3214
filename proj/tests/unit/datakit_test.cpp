#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "limescope/augment.hpp"
#include "limescope/datakit.hpp"
#include "limescope/error.hpp"
#include "limescope/image.hpp"
#include "limescope/rng.hpp"
#include "support.hpp"

namespace limescope {
namespace {

std::set<std::string> paths(const DatasetManifest& m) {
  std::set<std::string> out;
  for (const auto& item : m.items) out.insert(item.path);
  return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no limescope::Error thrown";
  return ErrorKind::Io;
}

void expect_partition(const DatasetManifest& m, const SplitResult& r) {
  const auto a = paths(r.train);
  const auto b = paths(r.val);
  const auto c = paths(r.test);
  EXPECT_EQ(a.size() + b.size() + c.size(), m.items.size());
  std::set<std::string> all = a;
  all.insert(b.begin(), b.end());
  all.insert(c.begin(), c.end());
  EXPECT_EQ(all, paths(m));
}

TEST(SplitTotalsTest, ReferenceTotals) {
  EXPECT_EQ(split_totals(2988, {0.7, 0.15, 0.15}), (std::array<std::size_t, 3>{2091, 448, 449}));
  EXPECT_EQ(split_totals(2989, {0.7, 0.15, 0.15}), (std::array<std::size_t, 3>{2092, 448, 449}));
  EXPECT_EQ(split_totals(10, {0.7, 0.15, 0.15}), (std::array<std::size_t, 3>{7, 1, 2}));
  EXPECT_EQ(split_totals(100, {0.8, 0.1, 0.1}), (std::array<std::size_t, 3>{80, 10, 10}));
}

TEST(SplitTest, StratifiedBalancedTotals) {
  const auto m = test::synthetic_manifest(std::vector<std::size_t>(6, 498));
  const auto r = split(m, {});
  EXPECT_EQ(r.train.items.size(), 2091u);
  EXPECT_EQ(r.val.items.size(), 448u);
  EXPECT_EQ(r.test.items.size(), 449u);
  expect_partition(m, r);
  const auto tr = r.train.class_counts();
  const auto va = r.val.class_counts();
  const auto te = r.test.class_counts();
  for (std::size_t c = 0; c < 6; ++c) {
    EXPECT_TRUE(tr[c] == 348 || tr[c] == 349) << c;
    EXPECT_TRUE(va[c] == 74 || va[c] == 75) << c;
    EXPECT_TRUE(te[c] == 74 || te[c] == 75) << c;
    EXPECT_EQ(tr[c] + va[c] + te[c], 498u);
  }
}

TEST(SplitTest, RandomUnbalancedTotals) {
  const auto m = test::synthetic_manifest({1334, 34, 167, 123, 578, 753});
  SplitConfig cfg;
  cfg.strategy = SplitStrategy::Random;
  const auto r = split(m, cfg);
  EXPECT_EQ(r.train.items.size(), 2092u);
  EXPECT_EQ(r.val.items.size(), 448u);
  EXPECT_EQ(r.test.items.size(), 449u);
  expect_partition(m, r);
}

TEST(SplitTest, SingleClassOfTen) {
  const auto r = split(test::synthetic_manifest({10}), {});
  EXPECT_EQ(r.train.items.size(), 7u);
  EXPECT_EQ(r.val.items.size(), 1u);
  EXPECT_EQ(r.test.items.size(), 2u);
}

TEST(SplitTest, StratifiedRatiosWithinOneItem) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> counts;
    for (int c = 0; c < 5; ++c) counts.push_back(3 + rng.below(200));
    const std::array<double, 3> ratios{0.6, 0.25, 0.15};
    SplitConfig cfg;
    cfg.ratios = ratios;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto m = test::synthetic_manifest(counts);
    const auto r = split(m, cfg);
    expect_partition(m, r);
    const std::vector<std::size_t> got[3] = {r.train.class_counts(), r.val.class_counts(), r.test.class_counts()};
    for (std::size_t c = 0; c < counts.size(); ++c) {
      const double n = double(counts[c]);
      for (int k = 0; k < 3; ++k) EXPECT_LE(std::abs(double(got[k][c]) / n - ratios[k]), 1.0 / n);
    }
    const auto totals = split_totals(m.items.size(), ratios);
    EXPECT_EQ(r.train.items.size(), totals[0]);
    EXPECT_EQ(r.val.items.size(), totals[1]);
    EXPECT_EQ(r.test.items.size(), totals[2]);
  }
}

TEST(SplitTest, DeterministicAndSeedSensitive) {
  const auto m = test::synthetic_manifest({40, 25, 31});
  SplitConfig cfg;
  cfg.seed = 5;
  const auto a = split(m, cfg);
  const auto b = split(m, cfg);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  cfg.seed = 6;
  EXPECT_NE(split(m, cfg).train, a.train);
}

TEST(SplitTest, SmallClassGoesToTrainWithWarning) {
  const auto m = test::synthetic_manifest({2, 30});
  const auto r = split(m, {});
  EXPECT_EQ(r.train.class_counts()[0], 2u);
  EXPECT_EQ(r.val.class_counts()[0], 0u);
  EXPECT_EQ(r.warnings.size(), 1u);
  expect_partition(m, r);
}

TEST(SplitTest, Errors) {
  EXPECT_EQ(kind_of([] { split(test::synthetic_manifest({2}), {}); }), ErrorKind::EmptyManifest);
  SplitConfig bad;
  bad.ratios = {0.7, 0.2, 0.2};
  EXPECT_EQ(kind_of([&] { split(test::synthetic_manifest({10}), bad); }), ErrorKind::BadParameter);
  bad.ratios = {1.0, 0.0, 0.0};
  EXPECT_EQ(kind_of([&] { split(test::synthetic_manifest({10}), bad); }), ErrorKind::BadParameter);
}

TEST(StratifiedCountsTest, ColumnsMatchTotals) {
  const auto cells = stratified_counts({498, 498, 498, 498, 498, 498}, {0.7, 0.15, 0.15});
  std::array<std::size_t, 3> sums{};
  for (const auto& row : cells) {
    for (int k = 0; k < 3; ++k) sums[static_cast<std::size_t>(k)] += row[static_cast<std::size_t>(k)];
  }
  EXPECT_EQ(sums, (std::array<std::size_t, 3>{2091, 448, 449}));
}

TEST(BalanceTest, ReferenceClassCounts) {
  const std::vector<std::size_t> counts{1334, 34, 167, 123, 578, 753};
  const auto m = test::synthetic_manifest(counts);
  const auto out = balance(m, 498, 0);
  EXPECT_EQ(out.class_counts(), std::vector<std::size_t>(6, 498));
  EXPECT_EQ(out.items.size(), 2988u);
  const auto originals = paths(m);
  std::size_t augmented = 0;
  for (const auto& item : out.items) {
    if (item.origin.augmented) {
      ++augmented;
      EXPECT_TRUE(originals.count(item.origin.source)) << item.origin.source;
      EXPECT_NO_THROW(parse_augmentation(item.origin.op));
    } else {
      EXPECT_TRUE(originals.count(item.path));
    }
  }
  EXPECT_EQ(augmented, 464u + 331u + 375u);
  // Under-target classes keep every original.
  const auto out_paths = paths(out);
  for (const auto& item : m.items) {
    const int c = m.class_index(item.label);
    if (counts[static_cast<std::size_t>(c)] < 498) {
      EXPECT_TRUE(out_paths.count(item.path)) << item.path;
    }
  }
}

TEST(BalanceTest, ClassAtTargetIsUnchanged) {
  const auto m = test::synthetic_manifest({5, 9});
  const auto out = balance(m, 5, 3);
  std::vector<ManifestItem> first;
  for (const auto& item : out.items) {
    if (item.label == "class0") first.push_back(item);
  }
  std::vector<ManifestItem> expected(m.items.begin(), m.items.begin() + 5);
  EXPECT_EQ(first, expected);
  EXPECT_EQ(out.class_counts(), (std::vector<std::size_t>{5, 5}));
}

TEST(BalanceTest, SmallClassTopUp) {
  const auto m = test::synthetic_manifest({34});
  const auto out = balance(m, 498, 1);
  ASSERT_EQ(out.items.size(), 498u);
  std::map<std::string, int> per_source;
  for (std::size_t i = 0; i < out.items.size(); ++i) {
    const auto& item = out.items[i];
    if (i < 34) {
      EXPECT_FALSE(item.origin.augmented);
      continue;
    }
    ASSERT_TRUE(item.origin.augmented);
    EXPECT_EQ(item.path.rfind("augmented/class0/", 0), 0u) << item.path;
    ++per_source[item.origin.source];
  }
  // 464 copies cycled over 34 sources: 13 or 14 each.
  EXPECT_EQ(per_source.size(), 34u);
  for (const auto& [src, n] : per_source) EXPECT_TRUE(n == 13 || n == 14) << src;
  EXPECT_EQ(balance(m, 498, 1), out);
  EXPECT_EQ(std::set<std::string>(paths(out)).size(), 498u);
}

TEST(BalanceTest, Errors) {
  EXPECT_EQ(kind_of([] { balance(test::synthetic_manifest({3}), 0, 0); }), ErrorKind::BadTarget);
  auto m = test::synthetic_manifest({3});
  m.classes.push_back("ghost");
  EXPECT_EQ(kind_of([&] { balance(m, 3, 0); }), ErrorKind::EmptyClass);
}

TEST(BalanceTest, MaterializeWritesAugmentedFiles) {
  test::TempDir dir;
  DatasetManifest src;
  src.root = dir.path();
  src.classes = {"a"};
  for (int i = 0; i < 2; ++i) {
    const std::string rel = "a/" + std::to_string(i) + ".png";
    std::filesystem::create_directories(dir / "a");
    write_png(dir / rel, test::random_image(16, 16, static_cast<std::uint64_t>(i)));
    src.items.push_back({rel, "a", {}});
  }
  auto out = balance(src, 6, 2);
  out.root = dir.path();
  EXPECT_EQ(materialize(out, src), 4u);
  for (const auto& item : out.items) {
    const Image img = read_image(out.resolve(item.path));
    EXPECT_EQ(img.width(), 16);
  }
  EXPECT_EQ(materialize(out, src), 0u);
}

TEST(ManifestTest, JsonRoundTripAndValidation) {
  test::TempDir dir;
  auto m = balance(test::synthetic_manifest({2, 4}), 4, 9);
  write_manifest(m, dir / "m.json");
  const auto back = read_manifest(dir / "m.json");
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.root, dir.path());
  auto bad = m;
  bad.items[0].label = "nope";
  EXPECT_EQ(kind_of([&] { validate(bad); }), ErrorKind::BadParameter);
  bad = m;
  bad.classes.push_back(bad.classes[0]);
  EXPECT_EQ(kind_of([&] { validate(bad); }), ErrorKind::BadParameter);
  {
    std::ofstream out(dir / "broken.json");
    out << "{\"classes\": [\"a\"], \"items\": [{\"path\": \"\", \"label\": \"a\"}]}";
  }
  EXPECT_THROW(read_manifest(dir / "broken.json"), Error);
}

TEST(ManifestTest, RebaseKeepsResolution) {
  test::TempDir dir;
  auto m = balance(test::synthetic_manifest({2, 4}), 4, 9);
  m.root = dir / "data";
  const auto moved = rebase(m, dir / "splits");
  ASSERT_EQ(moved.items.size(), m.items.size());
  for (std::size_t i = 0; i < m.items.size(); ++i) {
    EXPECT_EQ(moved.resolve(moved.items[i].path).lexically_normal(), m.resolve(m.items[i].path).lexically_normal());
    if (m.items[i].origin.augmented) {
      EXPECT_EQ(moved.resolve(moved.items[i].origin.source).lexically_normal(),
                m.resolve(m.items[i].origin.source).lexically_normal());
    }
  }
}

TEST(MetricsTest, ConfusionExamples) {
  const auto cm = confusion({1, 1, 1}, {0, 1, 1}, 2);
  EXPECT_EQ(cm.counts, (std::vector<std::uint64_t>{0, 1, 0, 2}));
  const auto diag = confusion({0, 1, 2, 2}, {0, 1, 2, 2}, 3);
  EXPECT_EQ(diag.at(2, 2), 2u);
  EXPECT_EQ(diag.at(0, 1), 0u);
  Rng rng(1);
  std::vector<int> p;
  std::vector<int> t;
  for (int i = 0; i < 1000; ++i) {
    p.push_back(static_cast<int>(rng.below(4)));
    t.push_back(static_cast<int>(rng.below(4)));
  }
  EXPECT_EQ(confusion(p, t, 4).total(), 1000u);
  EXPECT_EQ(kind_of([] { confusion({0}, {0, 1}, 2); }), ErrorKind::LengthMismatch);
  EXPECT_EQ(kind_of([] { confusion({}, {}, 2); }), ErrorKind::LengthMismatch);
  EXPECT_EQ(kind_of([] { confusion({2}, {0}, 2); }), ErrorKind::IndexOutOfRange);
  EXPECT_EQ(kind_of([] { confusion({-1}, {0}, 2); }), ErrorKind::IndexOutOfRange);
}

TEST(MetricsTest, HandComputedReport) {
  ConfusionMatrix cm{2, {5, 5, 0, 10}};
  const auto r = report(cm);
  EXPECT_NEAR(r.per_class[0].precision, 1.0, 1e-9);
  EXPECT_NEAR(r.per_class[0].recall, 0.5, 1e-9);
  EXPECT_NEAR(r.per_class[0].f1, 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.per_class[1].precision, 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.per_class[1].recall, 1.0, 1e-9);
  EXPECT_NEAR(r.per_class[1].f1, 0.8, 1e-9);
  EXPECT_NEAR(r.per_class[0].accuracy, 0.75, 1e-9);
  EXPECT_NEAR(r.overall_accuracy, 0.75, 1e-9);
  EXPECT_EQ(r.per_class[0].support, 10u);
  const auto j = report_json(r, cm, {"fish", "ship"});
  EXPECT_NEAR(j.at("overall_accuracy").get<double>(), 0.75, 1e-12);
  const auto table = report_table(r, {"fish", "ship"});
  EXPECT_NE(table.find("Precision"), std::string::npos);
  EXPECT_NE(table.find("F1-Score"), std::string::npos);
  EXPECT_NE(table.find("ship"), std::string::npos);
}

TEST(MetricsTest, UndefinedCellsAreFlagged) {
  ConfusionMatrix cm{3, {4, 1, 0, 2, 3, 0, 0, 0, 0}};
  const auto r = report(cm);
  EXPECT_EQ(r.per_class[2].precision, 0.0);
  EXPECT_EQ(r.per_class[2].recall, 0.0);
  EXPECT_EQ(r.per_class[2].f1, 0.0);
  EXPECT_TRUE(r.per_class[2].precision_undefined);
  EXPECT_TRUE(r.per_class[2].recall_undefined);
  EXPECT_TRUE(r.per_class[2].f1_undefined);
  EXPECT_FALSE(r.per_class[0].precision_undefined);
  EXPECT_EQ(kind_of([] { report(ConfusionMatrix{2, {0, 0, 0, 0}}); }), ErrorKind::EmptyMatrix);
}

TEST(MetricsTest, PerfectPredictionAndMicroIdentity) {
  const auto perfect = report(confusion({0, 1, 2, 1}, {0, 1, 2, 1}, 3));
  for (const auto& c : perfect.per_class) {
    EXPECT_EQ(c.precision, 1.0);
    EXPECT_EQ(c.recall, 1.0);
    EXPECT_EQ(c.f1, 1.0);
    EXPECT_EQ(c.accuracy, 1.0);
  }
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t classes = 2 + rng.below(5);
    ConfusionMatrix cm{classes, std::vector<std::uint64_t>(classes * classes)};
    for (auto& v : cm.counts) v = rng.below(20);
    cm.counts[0] += 1;
    const auto r = report(cm);
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      tp += cm.at(k, k);
      for (std::size_t o = 0; o < classes; ++o) {
        if (o == k) continue;
        fp += cm.at(o, k);
        fn += cm.at(k, o);
      }
    }
    EXPECT_NEAR(double(tp) / double(tp + fp), r.overall_accuracy, 1e-12);
    EXPECT_NEAR(double(tp) / double(tp + fn), r.overall_accuracy, 1e-12);
    for (const auto& c : r.per_class) {
      EXPECT_GE(c.f1, 0.0);
      EXPECT_LE(c.f1, (c.precision + c.recall) / 2.0 + 1e-12);
    }
  }
}

}  // namespace
}  // namespace limescope
