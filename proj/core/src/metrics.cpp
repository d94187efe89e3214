#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "limescope/datakit.hpp"
#include "limescope/error.hpp"

namespace limescope {

namespace {

// 0/0 reports 0 and raises the flag.
double ratio(std::uint64_t num, std::uint64_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string name_of(const std::vector<std::string>& names, std::size_t c) {
  return c < names.size() ? names[c] : std::to_string(c);
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

ConfusionMatrix confusion(const std::vector<int>& pred, const std::vector<int>& truth, std::size_t classes) {
  if (pred.size() != truth.size()) fail(ErrorKind::LengthMismatch, "prediction and truth lengths differ");
  if (pred.empty()) fail(ErrorKind::LengthMismatch, "no predictions given");
  if (classes == 0) fail(ErrorKind::BadParameter, "class count must be positive");
  ConfusionMatrix cm{classes, std::vector<std::uint64_t>(classes * classes, 0)};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int p = pred[i];
    const int t = truth[i];
    if (p < 0 || t < 0 || static_cast<std::size_t>(p) >= classes || static_cast<std::size_t>(t) >= classes) {
      fail(ErrorKind::IndexOutOfRange, "class index out of range at position " + std::to_string(i));
    }
    ++cm.counts[static_cast<std::size_t>(t) * classes + static_cast<std::size_t>(p)];
  }
  return cm;
}

MetricsReport report(const ConfusionMatrix& cm) {
  if (cm.counts.size() != cm.classes * cm.classes) fail(ErrorKind::ShapeError, "confusion matrix is not square");
  const std::uint64_t total = cm.total();
  if (cm.classes == 0 || total == 0) fail(ErrorKind::EmptyMatrix, "confusion matrix has no samples");

  MetricsReport r;
  r.total = total;
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < cm.classes; ++c) {
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (std::size_t k = 0; k < cm.classes; ++k) {
      row += cm.at(c, k);
      col += cm.at(k, c);
    }
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t fp = col - tp;
    const std::uint64_t fn = row - tp;
    const std::uint64_t tn = total - tp - fp - fn;
    trace += tp;

    ClassMetrics m;
    m.support = row;
    m.precision = ratio(tp, tp + fp, m.precision_undefined);
    m.recall = ratio(tp, tp + fn, m.recall_undefined);
    const double pr = m.precision + m.recall;
    m.f1_undefined = pr == 0.0;
    m.f1 = m.f1_undefined ? 0.0 : 2.0 * m.precision * m.recall / pr;
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
    r.per_class.push_back(m);
  }
  r.overall_accuracy = static_cast<double>(trace) / static_cast<double>(total);
  return r;
}

nlohmann::json report_json(const MetricsReport& r, const ConfusionMatrix& cm, const std::vector<std::string>& names) {
  auto classes = nlohmann::json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    classes.push_back({{"class", name_of(names, c)},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"accuracy", m.accuracy},
                       {"support", m.support},
                       {"undefined", {{"precision", m.precision_undefined},
                                      {"recall", m.recall_undefined},
                                      {"f1", m.f1_undefined}}}});
  }
  auto matrix = nlohmann::json::array();
  for (std::size_t t = 0; t < cm.classes; ++t) {
    auto row = nlohmann::json::array();
    for (std::size_t p = 0; p < cm.classes; ++p) row.push_back(cm.at(t, p));
    matrix.push_back(std::move(row));
  }
  return {{"classes", std::move(classes)},
          {"overall_accuracy", r.overall_accuracy},
          {"total", r.total},
          {"confusion", std::move(matrix)}};
}

std::string report_table(const MetricsReport& r, const std::vector<std::string>& names) {
  std::size_t width = 5;
  for (std::size_t c = 0; c < r.per_class.size(); ++c) width = std::max(width, name_of(names, c).size());
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %10s %10s %10s %10s %8s\n", static_cast<int>(width), "Class", "Precision",
                "Recall", "F1-Score", "Accuracy", "Support");
  os << line;
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    std::snprintf(line, sizeof line, "%-*s %10.4f %10.4f %10.4f %10.4f %8llu\n", static_cast<int>(width),
                  name_of(names, c).c_str(), m.precision, m.recall, m.f1, m.accuracy,
                  static_cast<unsigned long long>(m.support));
    os << line;
  }
  std::snprintf(line, sizeof line, "\n%-*s %10.4f %8llu\n", static_cast<int>(width) + 33, "overall accuracy",
                r.overall_accuracy, static_cast<unsigned long long>(r.total));
  os << line;
  return os.str();
}

}  // namespace limescope
