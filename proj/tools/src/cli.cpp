#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "limescope/classify.hpp"
#include "limescope/datakit.hpp"
#include "limescope/error.hpp"
#include "limescope/explain.hpp"
#include "limescope/image.hpp"
#include "limescope/pick.hpp"
#include "limescope/segment.hpp"

namespace limescope::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct SegFlags {
  std::string algo = "quickshift";
  double kernel_size = 2.0;
  double max_dist = 100.0;
  double ratio = 0.1;
  int k = 100;
  double compactness = 10.0;
  int max_iters = 10;
  bool no_connectivity = false;
  int cell_size = 4;

  SegmentationMode mode() const {
    if (algo == "slic") return SlicParams{k, compactness, max_iters, !no_connectivity};
    if (algo == "grid") return PixelGridParams{cell_size};
    return QuickshiftParams{kernel_size, max_dist, ratio};
  }

  json resolved() const {
    json j{{"algo", algo}};
    if (algo == "slic") {
      j.update({{"k", k}, {"compactness", compactness}, {"max_iters", max_iters}, {"enforce_connectivity", !no_connectivity}});
    } else if (algo == "grid") {
      j["cell_size"] = cell_size;
    } else {
      j.update({{"kernel_size", kernel_size}, {"max_dist", max_dist}, {"ratio", ratio}});
    }
    return j;
  }
};

struct SegmentArgs {
  std::string in, out_map, out_png, out_boundaries;
  SegFlags seg;
};

struct ExplainArgs {
  std::string model, in, out, overlay, target;
  int features = 10;
  int samples = 300;
  SegFlags seg;
  double sigma = 0.25;
  std::string distance = "cosine";
  double lambda = 1.0;
  std::string fill = "segment-mean";
  double gray = 0.5;
  int top_k = -1;
  bool positive_only = false;
  bool hide_rest = false;
  int timeout_ms = 10000;
};

struct PickArgs {
  std::vector<std::string> explanations;
  int budget = 5;
  std::string out;
};

struct SplitArgs {
  std::string manifest, ratios = "0.7,0.15,0.15", strategy = "stratified", out_dir;
};

struct BalanceArgs {
  std::string manifest, out;
  int target = 0;
  bool no_materialize = false;
};

struct TrainArgs {
  std::string manifest, out, loss_out;
  int epochs = 50;
  double lr = 0.1;
  double l2 = 1e-4;
  int batch_size = 32;
  int input_width = 16;
  int input_height = 16;
};

struct EvaluateArgs {
  std::string model, manifest, out, table;
  int timeout_ms = 10000;
};

struct State {
  Common common;
  SegmentArgs segment;
  ExplainArgs explain;
  PickArgs pick;
  SplitArgs split;
  BalanceArgs balance;
  TrainArgs train;
  EvaluateArgs evaluate;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON file of flag defaults; explicit flags win");
  sub->add_option("--seed", c.seed, "Seed for every random choice");
  sub->add_option("--threads", c.threads, "Worker threads (0: LIMESCOPE_THREADS or all cores)")->check(CLI::NonNegativeNumber);
}

void add_seg(CLI::App* sub, SegFlags& s) {
  sub->add_option("--algo", s.algo, "Segmentation algorithm")->check(CLI::IsMember({"quickshift", "slic", "grid"}));
  sub->add_option("--kernel-size", s.kernel_size, "Quickshift density bandwidth")->check(CLI::PositiveNumber);
  sub->add_option("--max-dist", s.max_dist, "Quickshift link cutoff")->check(CLI::PositiveNumber);
  sub->add_option("--ratio", s.ratio, "Quickshift colour weight")->check(CLI::NonNegativeNumber);
  sub->add_option("--k", s.k, "SLIC target segment count")->check(CLI::PositiveNumber);
  sub->add_option("--compactness", s.compactness, "SLIC compactness")->check(CLI::PositiveNumber);
  sub->add_option("--max-iters", s.max_iters, "SLIC iteration cap")->check(CLI::PositiveNumber);
  sub->add_flag("--no-connectivity", s.no_connectivity, "Skip SLIC connectivity enforcement");
  sub->add_option("--cell-size", s.cell_size, "Grid cell side in pixels")->check(CLI::PositiveNumber);
}

std::unique_ptr<CLI::App> build(State& st) {
  auto app = std::make_unique<CLI::App>("Superpixel explanations, dataset splitting and evaluation", "limescope");
  app->require_subcommand(1);
  app->option_defaults()->always_capture_default();

  auto* seg = app->add_subcommand("segment", "Segment an image into superpixels");
  add_common(seg, st.common);
  add_seg(seg, st.segment.seg);
  seg->add_option("--in", st.segment.in, "Input image (PNG or JPEG)")->required();
  seg->add_option("--out-map", st.segment.out_map, "Segment map JSON")->required();
  seg->add_option("--out-png", st.segment.out_png, "False-colour segment rendering");
  seg->add_option("--out-boundaries", st.segment.out_boundaries, "Image with segment boundaries drawn");

  auto* exp = app->add_subcommand("explain", "Explain one prediction with a sparse superpixel surrogate");
  auto& e = st.explain;
  add_common(exp, st.common);
  add_seg(exp, e.seg);
  exp->add_option("--model", e.model, "region:x0,y0,x1,y1 | softmax:<json> | file:<json> | external:<cmd>")->required();
  exp->add_option("--in", e.in, "Input image")->required();
  exp->add_option("--out", e.out, "Explanation JSON")->required();
  exp->add_option("--overlay", e.overlay, "Rendered explanation PNG");
  exp->add_option("--features", e.features, "Features kept in the explanation")->check(CLI::PositiveNumber);
  exp->add_option("--samples", e.samples, "Perturbation samples")->check(CLI::Range(2, 1 << 24));
  exp->add_option("--sigma", e.sigma, "Kernel width")->check(CLI::PositiveNumber);
  exp->add_option("--distance", e.distance, "Locality distance")->check(CLI::IsMember({"cosine", "euclidean"}));
  exp->add_option("--lambda", e.lambda, "Ridge penalty")->check(CLI::NonNegativeNumber);
  exp->add_option("--fill", e.fill, "Replacement for hidden segments")
      ->check(CLI::IsMember({"segment-mean", "global-mean", "gray"}));
  exp->add_option("--gray", e.gray, "Gray level used by --fill gray")->check(CLI::Range(0.0, 1.0));
  exp->add_option("--target", e.target, "Class index or label to explain (default: predicted)");
  exp->add_option("--top-k", e.top_k, "Segments drawn in the overlay (default: --features)");
  exp->add_flag("--positive-only", e.positive_only, "Draw only positively weighted segments");
  exp->add_flag("--hide-rest", e.hide_rest, "Gray out segments not drawn");
  exp->add_option("--timeout-ms", e.timeout_ms, "External classifier handshake timeout")->check(CLI::PositiveNumber);

  auto* pk = app->add_subcommand("pick", "Choose representative explanations by submodular coverage");
  add_common(pk, st.common);
  pk->add_option("--explanations", st.pick.explanations, "Explanation JSON files")->required()->expected(1, -1);
  pk->add_option("--budget", st.pick.budget, "Instances to pick")->check(CLI::NonNegativeNumber);
  pk->add_option("--out", st.pick.out, "Pick result JSON")->required();

  auto* sp = app->add_subcommand("split", "Split a manifest into train/val/test");
  add_common(sp, st.common);
  sp->add_option("--manifest", st.split.manifest, "Input manifest")->required();
  sp->add_option("--ratios", st.split.ratios, "train,val,test fractions");
  sp->add_option("--strategy", st.split.strategy, "Sampling strategy")->check(CLI::IsMember({"random", "stratified"}));
  sp->add_option("--out-dir", st.split.out_dir, "Directory for train.json, val.json, test.json (default: manifest dir)");

  auto* bl = app->add_subcommand("balance", "Under/oversample every class to a common count");
  add_common(bl, st.common);
  bl->add_option("--manifest", st.balance.manifest, "Input manifest")->required();
  bl->add_option("--target", st.balance.target, "Items per class")->required();
  bl->add_option("--out", st.balance.out, "Output manifest")->required();
  bl->add_flag("--no-materialize", st.balance.no_materialize, "Write the manifest without rendering augmented images");

  auto* tr = app->add_subcommand("train", "Train the built-in softmax pixel classifier");
  auto& t = st.train;
  add_common(tr, st.common);
  tr->add_option("--manifest", t.manifest, "Training manifest")->required();
  tr->add_option("--out", t.out, "Model weights JSON")->required();
  tr->add_option("--loss-out", t.loss_out, "Per-epoch loss trace JSON");
  tr->add_option("--epochs", t.epochs, "Training epochs")->check(CLI::PositiveNumber);
  tr->add_option("--lr", t.lr, "Learning rate")->check(CLI::PositiveNumber);
  tr->add_option("--l2", t.l2, "L2 penalty")->check(CLI::NonNegativeNumber);
  tr->add_option("--batch-size", t.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  tr->add_option("--input-width", t.input_width, "Model input width")->check(CLI::PositiveNumber);
  tr->add_option("--input-height", t.input_height, "Model input height")->check(CLI::PositiveNumber);

  auto* ev = app->add_subcommand("evaluate", "Score a classifier on a manifest");
  add_common(ev, st.common);
  ev->add_option("--model", st.evaluate.model, "Classifier specifier")->required();
  ev->add_option("--manifest", st.evaluate.manifest, "Evaluation manifest")->required();
  ev->add_option("--out", st.evaluate.out, "Report JSON")->required();
  ev->add_option("--table", st.evaluate.table, "Plain-text report (default: stdout)");
  ev->add_option("--timeout-ms", st.evaluate.timeout_ms, "External classifier handshake timeout")->check(CLI::PositiveNumber);
  return app;
}

void parse(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<const char*> argv{"limescope"};
  for (const auto& a : args) argv.push_back(a.c_str());
  app.parse(static_cast<int>(argv.size()), argv.data());
}

CLI::App* active(CLI::App& app) {
  for (auto* sub : app.get_subcommands()) return sub;
  throw UsageError("no subcommand given");
}

// Config values become extra tokens for options the command line left unset.
std::vector<std::string> config_tokens(CLI::App& sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& ex) {
    throw UsageError("config " + path + " is not JSON: " + ex.what());
  }
  if (!cfg.is_object()) throw UsageError("config must be a JSON object");
  if (cfg.contains(sub.get_name()) && cfg[sub.get_name()].is_object()) cfg = cfg[sub.get_name()];

  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (flag == "--config") throw UsageError("config files cannot nest");
    const CLI::Option* opt = sub.get_option_no_throw(flag);
    if (opt == nullptr) throw UsageError("unknown config key '" + key + "'");
    if (opt->count() > 0) continue;
    const auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (opt->get_type_size() == 0) {
      if (!value.is_boolean()) throw UsageError("config key '" + key + "' must be a boolean");
      if (value.get<bool>()) tokens.push_back(flag);
    } else if (value.is_array()) {
      if (opt->get_items_expected_max() > 1) {
        tokens.push_back(flag);
        for (const auto& v : value) tokens.push_back(text(v));
      } else {
        std::string joined;
        for (const auto& v : value) joined += (joined.empty() ? "" : ",") + text(v);
        tokens.insert(tokens.end(), {flag, joined});
      }
    } else {
      tokens.insert(tokens.end(), {flag, text(value)});
    }
  }
  return tokens;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    fail(ErrorKind::BadParameter, path.string() + " is not JSON: " + ex.what());
  }
}

std::array<double, 3> parse_ratios(const std::string& text) {
  std::array<double, 3> r{};
  std::stringstream ss(text);
  std::string part;
  std::size_t n = 0;
  while (std::getline(ss, part, ',')) {
    if (n == 3) throw UsageError("--ratios takes exactly three values");
    try {
      std::size_t used = 0;
      r[n] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("--ratios value '" + part + "' is not a number");
    }
    ++n;
  }
  if (n != 3) throw UsageError("--ratios takes exactly three values");
  return r;
}

std::optional<int> parse_target(const std::string& text, const Classifier& model) {
  if (text.empty()) return std::nullopt;
  int index = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), index);
  if (ec == std::errc{} && end == text.data() + text.size()) return index;
  const auto& labels = model.labels();
  const auto it = std::find(labels.begin(), labels.end(), text);
  if (it == labels.end()) fail(ErrorKind::BadParameter, "unknown target label '" + text + "'");
  return static_cast<int>(it - labels.begin());
}

int run_segment(const State& st, int threads, std::ostream& out) {
  const auto& a = st.segment;
  const Image img = to_rgb(read_image(a.in));
  const SuperpixelMap map = segment_image(img, a.seg.mode(), threads);
  write_json(a.out_map, map);
  if (!a.out_png.empty()) write_png(a.out_png, render_segments(map));
  if (!a.out_boundaries.empty()) {
    constexpr float kYellow[3] = {1.0f, 1.0f, 0.0f};
    write_png(a.out_boundaries, draw_boundaries(img, map, kYellow));
  }
  out << json{{"segments", map.num_segments}, {"width", map.width}, {"height", map.height}}.dump() << '\n';
  return kExitOk;
}

int run_explain(const State& st, int threads, std::ostream& out) {
  const auto& a = st.explain;
  const auto model = make_classifier(a.model, a.timeout_ms);
  const Image img = to_rgb(read_image(a.in));

  ExplainConfig cfg;
  cfg.num_features = a.features;
  cfg.num_samples = a.samples;
  cfg.kernel = {a.sigma, a.distance == "euclidean" ? DistanceMetric::Euclidean : DistanceMetric::Cosine};
  cfg.ridge_lambda = a.lambda;
  cfg.fill = a.fill == "gray"          ? Fill::gray_level(static_cast<float>(a.gray))
             : a.fill == "global-mean" ? Fill::global_mean()
                                       : Fill::segment_mean();
  cfg.mode = a.seg.mode();
  cfg.seed = st.common.seed;

  const SuperpixelMap map = segment_image(img, cfg.mode, threads);
  const Explanation e = explain_instance(img, *model, map, cfg, parse_target(a.target, *model), threads);
  json j = e;
  j["labels"] = model->labels();
  write_json(a.out, j);
  if (!a.overlay.empty()) {
    const RenderOptions opts{a.top_k < 0 ? a.features : a.top_k, a.positive_only, a.hide_rest};
    write_png(a.overlay, render_explanation(img, e, opts));
  }
  out << json{{"target_class", e.target_class},
              {"label", model->labels().at(static_cast<std::size_t>(e.target_class))},
              {"segments", map.num_segments},
              {"selected", e.selected},
              {"r2", e.r2}}
             .dump()
      << '\n';
  return kExitOk;
}

int run_pick(const State& st, std::ostream& out) {
  const auto& a = st.pick;
  std::vector<Explanation> explanations;
  for (const auto& path : a.explanations) {
    try {
      explanations.push_back(read_json(path).get<Explanation>());
    } catch (const json::exception& ex) {
      fail(ErrorKind::BadParameter, path + " is not an explanation: " + ex.what());
    }
  }
  const auto w = explanation_matrix(explanations, a.explanations);
  const auto result = submodular_pick(w, static_cast<std::size_t>(a.budget));
  std::vector<std::string> ids;
  for (auto i : result.chosen) ids.push_back(w.instance_ids[i]);
  const json j{{"chosen", ids},
               {"indices", result.chosen},
               {"coverage", result.coverage},
               {"marginal_gains", result.marginal_gains},
               {"importance", feature_importance(w)}};
  write_json(a.out, j);
  out << json{{"chosen", ids}, {"coverage", result.coverage}}.dump() << '\n';
  return kExitOk;
}

int run_split(const State& st, std::ostream& out, std::ostream& err) {
  const auto& a = st.split;
  const auto m = read_manifest(a.manifest);
  const SplitConfig cfg{parse_ratios(a.ratios),
                        a.strategy == "random" ? SplitStrategy::Random : SplitStrategy::Stratified, st.common.seed};
  const auto result = split(m, cfg);
  for (const auto& w : result.warnings) err << json{{"warning", w}}.dump() << '\n';
  const fs::path dir = a.out_dir.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.out_dir);
  write_manifest(rebase(result.train, dir), dir / "train.json");
  write_manifest(rebase(result.val, dir), dir / "val.json");
  write_manifest(rebase(result.test, dir), dir / "test.json");

  json per_class = json::object();
  for (const auto& c : m.classes) per_class[c] = json::array({0, 0, 0});
  const std::array<const DatasetManifest*, 3> parts{&result.train, &result.val, &result.test};
  for (std::size_t k = 0; k < 3; ++k) {
    for (const auto& item : parts[k]->items) per_class[item.label][k] = per_class[item.label][k].get<int>() + 1;
  }
  out << json{{"train", result.train.items.size()},
              {"val", result.val.items.size()},
              {"test", result.test.items.size()},
              {"per_class", per_class}}
             .dump()
      << '\n';
  return kExitOk;
}

int run_balance(const State& st, std::ostream& out) {
  const auto& a = st.balance;
  if (a.target < 1) fail(ErrorKind::BadTarget, "balance target must be >= 1");
  const fs::path dest(a.out);
  const fs::path dir = dest.has_parent_path() ? dest.parent_path() : fs::path(".");
  fs::create_directories(dir);
  const auto source = rebase(read_manifest(a.manifest), dir);
  const auto result = balance(source, static_cast<std::size_t>(a.target), st.common.seed);
  const std::size_t written = a.no_materialize ? 0 : materialize(result, source);
  write_manifest(result, dest);
  json counts = json::object();
  const auto sizes = result.class_counts();
  for (std::size_t c = 0; c < result.classes.size(); ++c) counts[result.classes[c]] = sizes[c];
  out << json{{"total", result.items.size()}, {"per_class", counts}, {"rendered", written}}.dump() << '\n';
  return kExitOk;
}

std::vector<Image> load_images(const DatasetManifest& m, std::vector<int>& targets) {
  std::vector<Image> images;
  images.reserve(m.items.size());
  targets.clear();
  for (const auto& item : m.items) {
    images.push_back(to_rgb(read_image(m.resolve(item.path))));
    targets.push_back(m.class_index(item.label));
  }
  return images;
}

int run_train(const State& st, std::ostream& out) {
  const auto& a = st.train;
  const auto m = read_manifest(a.manifest);
  std::vector<int> targets;
  const auto images = load_images(m, targets);
  const TrainConfig cfg{a.lr, a.epochs, a.l2, a.batch_size, st.common.seed, a.input_width, a.input_height};
  const auto result = train_softmax(images, targets, m.classes, cfg);
  write_json(a.out, json(result.model));
  if (!a.loss_out.empty()) write_json(a.loss_out, json{{"loss", result.loss_trace}});
  out << json{{"items", images.size()}, {"epochs", a.epochs}, {"final_loss", result.loss_trace.back()}}.dump() << '\n';
  return kExitOk;
}

int run_evaluate(const State& st, std::ostream& out) {
  const auto& a = st.evaluate;
  const auto model = make_classifier(a.model, a.timeout_ms);
  const auto m = read_manifest(a.manifest);

  // Classifier outputs are matched to manifest classes by label name.
  std::vector<int> to_manifest;
  for (const auto& label : model->labels()) to_manifest.push_back(m.class_index(label));

  std::vector<int> truth;
  const auto images = load_images(m, truth);
  std::vector<int> pred;
  constexpr std::size_t kBatch = 64;
  for (std::size_t i = 0; i < images.size(); i += kBatch) {
    const auto n = std::min(kBatch, images.size() - i);
    for (const auto& p : model->predict(std::span<const Image>(images).subspan(i, n))) {
      const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      const int c = to_manifest.at(best);
      if (c < 0) fail(ErrorKind::BadParameter, "model label '" + model->labels()[best] + "' is not a manifest class");
      pred.push_back(c);
    }
  }
  const auto cm = confusion(pred, truth, m.classes.size());
  const auto r = report(cm);
  write_json(a.out, report_json(r, cm, m.classes));
  const auto table = report_table(r, m.classes);
  if (a.table.empty()) {
    out << table;
  } else {
    std::ofstream t(a.table);
    if (!t) fail(ErrorKind::Io, "cannot write " + a.table);
    t << table;
  }
  return kExitOk;
}

json resolved(const State& st, const std::string& cmd, int threads) {
  json j{{"command", cmd}, {"seed", st.common.seed}, {"threads", threads}};
  if (!st.common.config.empty()) j["config"] = st.common.config;
  if (cmd == "segment") {
    const auto& a = st.segment;
    j.update({{"in", a.in}, {"out_map", a.out_map}, {"out_png", a.out_png}, {"out_boundaries", a.out_boundaries},
              {"segmentation", a.seg.resolved()}});
  } else if (cmd == "explain") {
    const auto& a = st.explain;
    j.update({{"model", a.model}, {"in", a.in}, {"out", a.out}, {"overlay", a.overlay}, {"features", a.features},
              {"samples", a.samples}, {"segmentation", a.seg.resolved()}, {"sigma", a.sigma}, {"distance", a.distance},
              {"lambda", a.lambda}, {"fill", a.fill}, {"gray", a.gray}, {"target", a.target},
              {"top_k", a.top_k < 0 ? a.features : a.top_k}, {"positive_only", a.positive_only},
              {"hide_rest", a.hide_rest}, {"timeout_ms", a.timeout_ms}});
  } else if (cmd == "pick") {
    j.update({{"explanations", st.pick.explanations}, {"budget", st.pick.budget}, {"out", st.pick.out}});
  } else if (cmd == "split") {
    const auto& a = st.split;
    j.update({{"manifest", a.manifest}, {"ratios", a.ratios}, {"strategy", a.strategy}, {"out_dir", a.out_dir}});
  } else if (cmd == "balance") {
    const auto& a = st.balance;
    j.update({{"manifest", a.manifest}, {"target", a.target}, {"out", a.out}, {"materialize", !a.no_materialize}});
  } else if (cmd == "train") {
    const auto& a = st.train;
    j.update({{"manifest", a.manifest}, {"out", a.out}, {"loss_out", a.loss_out}, {"epochs", a.epochs}, {"lr", a.lr},
              {"l2", a.l2}, {"batch_size", a.batch_size}, {"input_width", a.input_width},
              {"input_height", a.input_height}});
  } else if (cmd == "evaluate") {
    const auto& a = st.evaluate;
    j.update({{"model", a.model}, {"manifest", a.manifest}, {"out", a.out}, {"table", a.table},
              {"timeout_ms", a.timeout_ms}});
  }
  return j;
}

void report_error(std::ostream& err, std::string_view kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("LIMESCOPE_THREADS"); env != nullptr && *env != '\0') {
    int value = 0;
    const std::string_view text(env);
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || value < 1) {
      throw std::invalid_argument("LIMESCOPE_THREADS must be a positive integer");
    }
    return value;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  State st;
  std::unique_ptr<CLI::App> app;
  try {
    app = build(st);
    parse(*app, args);
    CLI::App* sub = active(*app);
    if (!st.common.config.empty()) {
      auto extended = args;
      const auto extra = config_tokens(*sub, st.common.config);
      extended.insert(extended.end(), extra.begin(), extra.end());
      st = State{};
      app = build(st);
      parse(*app, extended);
      sub = active(*app);
    }
    int threads = 0;
    try {
      threads = resolve_threads(st.common.threads);
    } catch (const std::invalid_argument& ex) {
      throw UsageError(ex.what());
    }

    const std::string cmd = sub->get_name();
    err << resolved(st, cmd, threads).dump() << '\n';
    if (cmd == "segment") return run_segment(st, threads, out);
    if (cmd == "explain") return run_explain(st, threads, out);
    if (cmd == "pick") return run_pick(st, out);
    if (cmd == "split") return run_split(st, out, err);
    if (cmd == "balance") return run_balance(st, out);
    if (cmd == "train") return run_train(st, out);
    return run_evaluate(st, out);
  } catch (const CLI::ParseError& ex) {
    if (ex.get_exit_code() == 0) return app->exit(ex, out, err);
    report_error(err, "UsageError", ex.what());
    return kExitUsage;
  } catch (const UsageError& ex) {
    report_error(err, "UsageError", ex.what());
    return kExitUsage;
  } catch (const Error& ex) {
    report_error(err, to_string(ex.kind()), ex.what());
    return kExitDomain;
  } catch (const fs::filesystem_error& ex) {
    report_error(err, "Io", ex.what());
    return kExitDomain;
  } catch (const std::exception& ex) {
    report_error(err, "Internal", ex.what());
    return kExitDomain;
  }
}

}  // namespace limescope::cli
