#include "limescope/classify.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include <boost/program_options/parsers.hpp>

#include "limescope/error.hpp"

namespace limescope {

namespace {

std::vector<double> parse_numbers(std::string_view text) {
  std::vector<double> values;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto token = text.substr(0, comma);
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
      fail(ErrorKind::BadParameter, "bad number '" + std::string(token) + "' in model spec");
    }
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return values;
}

}  // namespace

RegionBrightnessClassifier::RegionBrightnessClassifier(Rect rect, double threshold, double steepness)
    : rect_(rect), threshold_(threshold), steepness_(steepness) {
  if (rect.x0 < 0 || rect.y0 < 0 || rect.x1 <= rect.x0 || rect.y1 <= rect.y0) {
    fail(ErrorKind::BadParameter, "region rectangle must be non-empty with x0,y0 >= 0");
  }
  if (!(steepness > 0.0)) fail(ErrorKind::BadParameter, "region steepness must be positive");
}

std::vector<ProbabilityVector> RegionBrightnessClassifier::predict(std::span<const Image> batch) const {
  if (batch.empty()) fail(ErrorKind::ShapeError, "predict needs a non-empty batch");
  std::vector<ProbabilityVector> out;
  out.reserve(batch.size());
  for (const Image& img : batch) {
    if (rect_.x1 > img.width() || rect_.y1 > img.height()) {
      fail(ErrorKind::ShapeError, "region rectangle exceeds image bounds");
    }
    double sum = 0.0;
    for (int y = rect_.y0; y < rect_.y1; ++y) {
      for (int x = rect_.x0; x < rect_.x1; ++x) {
        for (float v : img.pixel(x, y)) sum += v;
      }
    }
    const double count = static_cast<double>(rect_.x1 - rect_.x0) * (rect_.y1 - rect_.y0) * img.channels();
    const double z = steepness_ * (sum / count - threshold_);
    // numerically stable logistic
    const double positive = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    out.push_back({1.0 - positive, positive});
  }
  return out;
}

std::unique_ptr<Classifier> make_classifier(std::string_view spec, int timeout_ms) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    fail(ErrorKind::BadParameter, "model spec must look like kind:arguments");
  }
  const auto kind = spec.substr(0, colon);
  const auto args = spec.substr(colon + 1);
  if (kind == "region") {
    const auto v = parse_numbers(args);
    if (v.size() < 4 || v.size() > 6) {
      fail(ErrorKind::BadParameter, "region spec is region:x0,y0,x1,y1[,threshold[,steepness]]");
    }
    const Rect rect{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
                    static_cast<int>(v[3])};
    return std::make_unique<RegionBrightnessClassifier>(rect, v.size() > 4 ? v[4] : 0.5,
                                                        v.size() > 5 ? v[5] : 20.0);
  }
  if (kind == "softmax" || kind == "file") {
    return std::make_unique<SoftmaxPixelClassifier>(load_softmax(std::string(args)));
  }
  if (kind == "external") {
    const auto argv = boost::program_options::split_unix(std::string(args));
    if (argv.empty()) fail(ErrorKind::BadParameter, "external spec needs a command");
    return connect_external(argv, timeout_ms);
  }
  fail(ErrorKind::BadParameter, "unknown model kind '" + std::string(kind) + "'");
}

}  // namespace limescope
