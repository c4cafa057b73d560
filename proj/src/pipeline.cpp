#include "algaeid/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>

#include "algaeid/error.hpp"
#include "algaeid/features.hpp"
#include "algaeid/io.hpp"
#include "algaeid/model_io.hpp"
#include "algaeid/standardize.hpp"

namespace fs = std::filesystem;

namespace algaeid {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

ClassifierConfig PipelineConfig::classifier_config() const {
  if (classifier == ClassifierKind::Svm) return svm;
  AnnConfig a = ann;
  a.seed = seed;
  return a;
}

SfsOptions PipelineConfig::sfs_options() const {
  SfsOptions o;
  if (sfs_criterion == ClassifierKind::Ann) {
    AnnConfig a = ann;
    a.seed = seed;
    o.criterion = a;
  }
  o.folds = sfs_folds;
  o.seed = seed;
  return o;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::ConfigOutOfRange, "bad value for " + key + ": '" + value + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) bad_value(key, s);
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad_value(key, s);
}

std::string bool_text(bool b) { return b ? "true" : "false"; }
std::string kind_text(ClassifierKind k) { return k == ClassifierKind::Svm ? "svm" : "ann"; }

ClassifierKind parse_kind(const std::string& key, const std::string& s) {
  if (s == "svm") return ClassifierKind::Svm;
  if (s == "ann") return ClassifierKind::Ann;
  bad_value(key, s);
}

template <typename T>
ConfigKey number_key(std::string name, std::string help, T PipelineConfig::*field) {
  return {name, std::move(help),
          [field](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*field);
            else return std::to_string(c.*field);
          },
          [field, name](PipelineConfig& c, const std::string& v) { c.*field = parse_number<T>(name, v); }};
}

template <typename S, typename T>
ConfigKey nested_number(std::string name, std::string help, S PipelineConfig::*outer, T S::*field) {
  return {name, std::move(help),
          [outer, field](const PipelineConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*outer.*field);
            else return std::to_string(c.*outer.*field);
          },
          [outer, field, name](PipelineConfig& c, const std::string& v) { c.*outer.*field = parse_number<T>(name, v); }};
}

ConfigKey bool_key(std::string name, std::string help, std::function<bool&(PipelineConfig&)> ref) {
  return {name, std::move(help), [ref](const PipelineConfig& c) { return bool_text(ref(const_cast<PipelineConfig&>(c))); },
          [ref, name](PipelineConfig& c, const std::string& v) { ref(c) = parse_bool(name, v); }};
}

template <typename T>
ConfigKey ref_number(std::string name, std::string help, std::function<T&(PipelineConfig&)> ref) {
  return {name, std::move(help),
          [ref](const PipelineConfig& c) {
            const T v = ref(const_cast<PipelineConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) return format_double(v);
            else return std::to_string(v);
          },
          [ref, name](PipelineConfig& c, const std::string& v) { ref(c) = parse_number<T>(name, v); }};
}

std::vector<ConfigKey> make_keys() {
  using C = PipelineConfig;
  std::vector<ConfigKey> k;
  k.push_back(number_key("seed", "master seed; every random stream derives from it", &C::seed));
  k.push_back({"input.manifest", "CSV manifest (path,label) of input images",
               [](const C& c) { return c.manifest.string(); }, [](C& c, const std::string& v) { c.manifest = v; }});
  k.push_back({"output.dir", "directory for reports and the model", [](const C& c) { return c.out_dir.string(); },
               [](C& c, const std::string& v) {
                 if (v.empty()) bad_value("output.dir", v);
                 c.out_dir = v;
               }});

  k.push_back(number_key("synth.per_class", "synthetic frames per class; 0 reads input.manifest", &C::synth_per_class));
  k.push_back(nested_number("synth.width", "synthetic frame width", &C::synth, &SynthConfig::width));
  k.push_back(nested_number("synth.height", "synthetic frame height", &C::synth, &SynthConfig::height));
  k.push_back(nested_number("synth.background", "background intensity", &C::synth, &SynthConfig::background));
  k.push_back(nested_number("synth.body", "cell body intensity", &C::synth, &SynthConfig::body));
  k.push_back(nested_number("synth.wall", "cell wall intensity", &C::synth, &SynthConfig::wall));
  k.push_back(nested_number("synth.noise_sigma", "Gaussian noise sigma", &C::synth, &SynthConfig::noise_sigma));
  k.push_back(bool_key("synth.grid_lines", "draw faint chamber grid lines",
                       [](C& c) -> bool& { return c.synth.grid_lines; }));

  k.push_back(bool_key("preprocess.clahe", "apply CLAHE before quantization",
                       [](C& c) -> bool& { return c.segment.use_clahe; }));
  k.push_back({"preprocess.clahe_tiles", "CLAHE tile grid X,Y",
               [](const C& c) {
                 return std::to_string(c.segment.clahe.tiles_x) + "," + std::to_string(c.segment.clahe.tiles_y);
               },
               [](C& c, const std::string& v) {
                 const auto comma = v.find(',');
                 if (comma == std::string::npos) bad_value("preprocess.clahe_tiles", v);
                 c.segment.clahe.tiles_x = parse_number<int>("preprocess.clahe_tiles", v.substr(0, comma));
                 c.segment.clahe.tiles_y = parse_number<int>("preprocess.clahe_tiles", v.substr(comma + 1));
               }});
  k.push_back(ref_number<double>("preprocess.clahe_clip", "CLAHE clip limit",
                                 [](C& c) -> double& { return c.segment.clahe.clip_limit; }));
  k.push_back(ref_number<int>("preprocess.levels", "quantization steps (levels - 1)",
                              [](C& c) -> int& { return c.segment.levels.steps; }));

  k.push_back(ref_number<double>("segment.min_area", "smallest candidate area, pixels",
                                 [](C& c) -> double& { return c.segment.filter.min_area; }));
  k.push_back(ref_number<double>("segment.max_area", "largest candidate area, pixels",
                                 [](C& c) -> double& { return c.segment.filter.max_area; }));
  k.push_back(bool_key("segment.require_child", "keep only contours with an inner contour",
                       [](C& c) -> bool& { return c.segment.filter.require_child; }));
  k.push_back(bool_key("segment.align", "rotate patches to the dominant orientation",
                       [](C& c) -> bool& { return c.segment.align; }));
  k.push_back(bool_key("segment.refine", "refine outlines with the active contour",
                       [](C& c) -> bool& { return c.segment.refine; }));
  k.push_back(ref_number<double>("snake.alpha", "continuity weight", [](C& c) -> double& { return c.segment.snake.alpha; }));
  k.push_back(ref_number<double>("snake.beta", "curvature weight", [](C& c) -> double& { return c.segment.snake.beta; }));
  k.push_back(ref_number<double>("snake.external", "image energy weight",
                                 [](C& c) -> double& { return c.segment.snake.external; }));
  k.push_back(ref_number<int>("snake.max_iters", "sweep limit", [](C& c) -> int& { return c.segment.snake.max_iters; }));
  k.push_back(ref_number<int>("snake.points", "contour points", [](C& c) -> int& { return c.segment.snake.n_points; }));
  k.push_back(ref_number<double>("snake.sigma", "smoothing of the edge map",
                                 [](C& c) -> double& { return c.segment.snake.smoothing_sigma; }));

  k.push_back({"classifier", "svm or ann", [](const C& c) { return kind_text(c.classifier); },
               [](C& c, const std::string& v) { c.classifier = parse_kind("classifier", v); }});
  k.push_back({"svm.kernel", "rbf or linear",
               [](const C& c) { return std::string(c.svm.kernel == KernelKind::Rbf ? "rbf" : "linear"); },
               [](C& c, const std::string& v) {
                 if (v == "rbf") c.svm.kernel = KernelKind::Rbf;
                 else if (v == "linear") c.svm.kernel = KernelKind::Linear;
                 else bad_value("svm.kernel", v);
               }});
  k.push_back(nested_number("svm.C", "soft-margin complexity", &C::svm, &SvmConfig::C));
  k.push_back(nested_number("svm.gamma", "rbf bandwidth", &C::svm, &SvmConfig::gamma));
  k.push_back(nested_number("svm.tol", "KKT tolerance", &C::svm, &SvmConfig::tol));
  k.push_back(nested_number("svm.max_iter", "SMO iteration cap", &C::svm, &SvmConfig::max_iter));
  k.push_back(nested_number("ann.tau", "neurons per hidden layer", &C::ann, &AnnConfig::tau));
  k.push_back(nested_number("ann.learning_rate", "step size", &C::ann, &AnnConfig::learning_rate));
  k.push_back(nested_number("ann.momentum", "momentum", &C::ann, &AnnConfig::momentum));
  k.push_back(nested_number("ann.epochs", "training epochs", &C::ann, &AnnConfig::epochs));
  k.push_back(nested_number("ann.batch", "mini-batch size", &C::ann, &AnnConfig::batch));

  k.push_back(bool_key("select.sfs", "run forward selection and keep the best prefix",
                       [](C& c) -> bool& { return c.sfs; }));
  k.push_back({"select.criterion", "svm (linear, C=1) or ann (the ann.* settings)",
               [](const C& c) { return kind_text(c.sfs_criterion); },
               [](C& c, const std::string& v) { c.sfs_criterion = parse_kind("select.criterion", v); }});
  k.push_back(number_key("select.folds", "internal CV folds of the selection criterion", &C::sfs_folds));
  k.push_back(bool_key("train.grid", "grid-search the classifier hyperparameters", [](C& c) -> bool& { return c.grid; }));
  k.push_back(number_key("evaluate.folds", "cross-validation folds", &C::cv_folds));
  k.push_back(number_key("evaluate.tolerance", "Hoover tolerance quoted in the report", &C::report_tolerance));
  return k;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = make_keys();
  return keys;
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : config_keys()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw Error(ErrorCode::ConfigOutOfRange, "unknown configuration key '" + key + "'");
}

void load_config_file(const fs::path& path, PipelineConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigOutOfRange, "cannot read config file " + path.string());
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigOutOfRange, path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::ConfigOutOfRange, what);
}

}  // namespace

void validate(const PipelineConfig& c) {
  validate_settings(c);
  require(c.synth_per_class > 0 || !c.manifest.empty(), "no input: give a manifest or synth.per_class > 0");
}

void validate_settings(const PipelineConfig& c) {
  require(c.synth_per_class >= 0, "synth.per_class must be >= 0");
  require(c.segment.clahe.tiles_x >= 1 && c.segment.clahe.tiles_y >= 1, "preprocess.clahe_tiles must be >= 1");
  require(c.segment.clahe.clip_limit > 0.0, "preprocess.clahe_clip must be > 0");
  require(c.segment.levels.steps >= 1 && c.segment.levels.steps <= 255, "preprocess.levels must be in [1, 255]");
  require(c.segment.filter.min_area >= 0.0 && c.segment.filter.max_area > c.segment.filter.min_area,
          "segment.max_area must exceed segment.min_area >= 0");
  require(c.segment.snake.n_points >= 3, "snake.points must be >= 3");
  require(c.segment.snake.max_iters >= 0, "snake.max_iters must be >= 0");
  require(c.segment.snake.smoothing_sigma >= 0.0, "snake.sigma must be >= 0");
  require(c.svm.C > 0.0, "svm.C must be > 0");
  require(c.svm.gamma > 0.0, "svm.gamma must be > 0");
  require(c.svm.tol > 0.0, "svm.tol must be > 0");
  require(c.svm.max_iter > 0, "svm.max_iter must be > 0");
  require(c.ann.tau >= 1, "ann.tau must be >= 1");
  require(c.ann.learning_rate > 0.0, "ann.learning_rate must be > 0");
  require(c.ann.momentum >= 0.0 && c.ann.momentum < 1.0, "ann.momentum must be in [0, 1)");
  require(c.ann.epochs >= 1 && c.ann.batch >= 1, "ann.epochs and ann.batch must be >= 1");
  require(c.sfs_folds >= 2, "select.folds must be >= 2");
  require(c.cv_folds >= 2, "evaluate.folds must be >= 2");
  require(c.report_tolerance > 0.5 && c.report_tolerance <= 1.0, "evaluate.tolerance must be in (0.5, 1]");
}

nlohmann::json config_to_json(const PipelineConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : config_keys()) j[k.name] = k.get(cfg);
  return j;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigOutOfRange:
      return 1;
    case ErrorCode::FileNotFound:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::CorruptHeader:
    case ErrorCode::MalformedRow:
    case ErrorCode::BadLabel:
    case ErrorCode::IoFailure:
    case ErrorCode::ImageSmallerThanTile:
    case ErrorCode::AllSameIntensity:
    case ErrorCode::TooFewSamples:
    case ErrorCode::DegenerateData:
    case ErrorCode::SingleClassInput:
    case ErrorCode::NonFiniteFeature:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::LengthMismatch:
    case ErrorCode::ClassTooSmall:
    case ErrorCode::TooFewPatches:
    case ErrorCode::BadModelFile:
      return 2;
    default:
      return 3;
  }
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

std::vector<Frame> load_frames(const fs::path& manifest) {
  const auto rows = read_manifest(manifest);
  const fs::path base = manifest.parent_path();
  std::vector<Frame> frames;
  frames.reserve(rows.size());
  for (const auto& r : rows) {
    Frame f;
    const auto rel = base.empty() ? r.path : r.path.lexically_relative(base);
    f.id = (!rel.empty() && *rel.begin() != "..") ? rel.generic_string() : r.path.generic_string();
    f.image = load_image(r.path);
    f.label = r.label;
    if (const auto gt = truth_path_for(r.path); !gt.empty() && fs::exists(gt)) f.truth = load_mask(gt);
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<Frame> synth_frames(int per_class, const SynthConfig& base, std::uint64_t seed) {
  auto gen = generate_frames(per_class, base, seed);
  std::vector<Frame> frames;
  frames.reserve(gen.size());
  for (std::size_t i = 0; i < gen.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%04zu.pgm", i);
    frames.push_back({name, std::move(gen[i].image), gen[i].label, std::move(gen[i].truth)});
  }
  return frames;
}

std::vector<SegmentResult> segment_frames(const std::vector<Frame>& frames, const SegmentConfig& cfg) {
  std::vector<SegmentResult> out(frames.size());
  std::vector<std::exception_ptr> errors(frames.size());
  const long n = static_cast<long>(frames.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = segment_image(frames[k].image, cfg, frames[k].id);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<SegmentResult> segment_frames_serial(const std::vector<Frame>& frames, const SegmentConfig& cfg) {
  std::vector<SegmentResult> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(segment_image(f.image, cfg, f.id));
  return out;
}

namespace {

std::string stem_of(const std::string& id) {
  std::string s = fs::path(id).replace_extension().generic_string();
  for (char& c : s) {
    if (c == '/' || c == ',' || c == ' ') c = '_';
  }
  return s;
}

}  // namespace

void collect_patches(const std::vector<Frame>& frames, const std::vector<SegmentResult>& segs,
                     std::vector<PatchRecord>& kept, std::vector<PatchDrop>& dropped) {
  if (frames.size() != segs.size()) throw Error(ErrorCode::LengthMismatch, "frames and segmentations differ in count");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string stem = stem_of(frames[i].id);
    for (std::size_t k = 0; k < segs[i].patches.size(); ++k) {
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "_%02zu", k);
      kept.push_back({stem + suffix, frames[i].id, frames[i].label, segs[i].patches[k]});
    }
    for (const auto& [reason, count] : segs[i].drops) {
      for (int c = 0; c < count; ++c) dropped.push_back({frames[i].id, frames[i].label, reason});
    }
  }
}

std::vector<FeatureRow> compute_features(const std::vector<PatchRecord>& patches, std::vector<std::size_t>* failed) {
  std::vector<RegionPatch> raw;
  raw.reserve(patches.size());
  for (const auto& p : patches) raw.push_back(p.patch);
  const BatchResult batch = extract_batch(raw);
  std::vector<FeatureRow> rows;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (!batch.errors[i].empty()) {
      if (failed) failed->push_back(i);
      continue;
    }
    rows.push_back({patches[i].sample_id, patches[i].label, batch.features[i]});
  }
  return rows;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

BinaryMask foreground_of(const LabelMap& labels) {
  BinaryMask m(labels.width(), labels.height());
  auto src = labels.pixels();
  auto dst = m.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0;
  return m;
}

}  // namespace

SegmentationEval evaluate_segmentation(const std::vector<Frame>& frames, const std::vector<SegmentResult>& segs,
                                       const std::vector<double>& tolerances) {
  if (frames.size() != segs.size()) throw Error(ErrorCode::LengthMismatch, "frames and segmentations differ in count");
  SegmentationEval e;
  const std::size_t nt = tolerances.size();
  std::vector<HooverCounts> pooled(nt);
  std::vector<std::array<double, 5>> sums(nt, std::array<double, 5>{});
  std::vector<double> ps, rs, fs_;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!frames[i].truth) continue;
    const BinaryMask& truth = *frames[i].truth;
    const LabelMap ms = patches_to_label_map(segs[i].patches, truth.width(), truth.height());
    const HooverCurves c = hoover_curves(label_components(truth), ms, tolerances);
    for (std::size_t t = 0; t < nt; ++t) {
      pooled[t] += c.counts[t];
      sums[t][0] += c.correct[t];
      sums[t][1] += c.over_segmented[t];
      sums[t][2] += c.under_segmented[t];
      sums[t][3] += c.missed[t];
      sums[t][4] += c.noise[t];
    }
    const Prf prf = pixel_prf(truth, foreground_of(ms));
    ps.push_back(prf.precision);
    rs.push_back(prf.recall);
    fs_.push_back(prf.f_measure);
    ++e.frames;
  }
  e.pooled = curves_from_counts(tolerances, pooled);
  e.per_image.tolerances = tolerances;
  const double n = e.frames > 0 ? static_cast<double>(e.frames) : 1.0;
  for (std::size_t t = 0; t < nt; ++t) {
    e.per_image.correct.push_back(sums[t][0] / n);
    e.per_image.over_segmented.push_back(sums[t][1] / n);
    e.per_image.under_segmented.push_back(sums[t][2] / n);
    e.per_image.missed.push_back(sums[t][3] / n);
    e.per_image.noise.push_back(sums[t][4] / n);
  }
  e.per_image.counts = pooled;
  std::tie(e.precision_mean, e.precision_std) = mean_std(ps);
  std::tie(e.recall_mean, e.recall_std) = mean_std(rs);
  std::tie(e.f_mean, e.f_std) = mean_std(fs_);
  return e;
}

TimingReport time_per_alga(const std::vector<Frame>& frames, const SegmentConfig& cfg, const TrainedModel& model) {
  using clock = std::chrono::steady_clock;
  std::vector<double> per;
  for (const auto& f : frames) {
    const auto t0 = clock::now();
    const SegmentResult seg = segment_image(f.image, cfg, f.id);
    const double seg_s = std::chrono::duration<double>(clock::now() - t0).count();
    for (const auto& p : seg.patches) {
      const auto t1 = clock::now();
      try {
        (void)model.predict(extract_all(p));
      } catch (const FeatureError&) {
        // Still an alga the pipeline had to process.
      }
      const double patch_s = std::chrono::duration<double>(clock::now() - t1).count();
      per.push_back(seg_s / static_cast<double>(seg.patches.size()) + patch_s);
    }
  }
  if (per.size() < 30) {
    throw Error(ErrorCode::TooFewPatches, "timing needs at least 30 patches, got " + std::to_string(per.size()));
  }
  TimingReport r;
  r.patches = static_cast<int>(per.size());
  std::tie(r.mean_s, r.std_s) = mean_std(per);
  return r;
}

// ---------------------------------------------------------------------------
// Experiment
// ---------------------------------------------------------------------------

ExperimentResult run_experiment(const LabeledDataset& data, const PipelineConfig& cfg) {
  validate(cfg);
  if (data.size() < 2) throw Error(ErrorCode::TooFewSamples, "need labelled samples to train");
  const Eigen::MatrixXd x = to_matrix(data);
  const std::vector<LabelClass> y = labels_of(data);
  ExperimentResult r;
  if (cfg.sfs) {
    const Standardizer s = Standardizer::fit(x);
    r.ranking = sfs_rank(s.apply_rows(x), y, cfg.sfs_options());
    r.choice = choose_l(*r.ranking);
    r.selected.assign(r.ranking->order.begin(), r.ranking->order.begin() + r.choice->l);
  } else {
    r.selected.resize(kFeatureDim);
    std::iota(r.selected.begin(), r.selected.end(), 0);
  }
  const Eigen::MatrixXd xs = select_columns(x, r.selected);
  r.final_config = cfg.classifier_config();
  if (cfg.grid) {
    r.grid = grid_search(xs, y, r.final_config, cfg.cv_folds, cfg.seed);
    r.final_config = r.grid->best;
  }
  r.cv = kfold_cv(xs, y, cfg.cv_folds, r.final_config, cfg.seed);
  r.model = train_full(x, y, r.selected, r.final_config);
  return r;
}

namespace {

template <typename M>
nlohmann::json matrix_json(const M& m) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& row : m) j.push_back(row);
  return j;
}

nlohmann::json curves_json(const HooverCurves& c, double tolerance) {
  std::size_t t = 0;
  for (std::size_t i = 0; i < c.tolerances.size(); ++i) {
    if (std::abs(c.tolerances[i] - tolerance) < std::abs(c.tolerances[t] - tolerance)) t = i;
  }
  nlohmann::json j;
  if (c.tolerances.empty()) return j;
  j["tolerance"] = c.tolerances[t];
  j["correct"] = c.correct[t];
  j["over_segmented"] = c.over_segmented[t];
  j["under_segmented"] = c.under_segmented[t];
  j["missed"] = c.missed[t];
  j["noise"] = c.noise[t];
  return j;
}

}  // namespace

nlohmann::json cv_to_json(const CVReport& r) {
  nlohmann::json j;
  j["k"] = r.k;
  j["class_order"] = {1, 2, 4, 8};
  j["fold_accuracies"] = r.fold_accuracies;
  j["mean_accuracy"] = r.mean;
  j["std_accuracy"] = r.std;
  j["confusion_mean_percent"] = matrix_json(r.confusion_mean);
  j["confusion_std_percent"] = matrix_json(r.confusion_std);
  j["confusion_total"] = matrix_json(r.confusion_total);
  j["total_correct"] = r.total_correct;
  j["total"] = r.total;
  j["max_train_mean"] = r.max_train_mean;
  return j;
}

nlohmann::json grid_to_json(const GridResult& g) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : g.points) pts.push_back({{"config", describe(p.config)}, {"mean", p.mean}, {"std", p.std}});
  return {{"points", pts}, {"best_index", g.best_index}, {"best", describe(g.best)}};
}

nlohmann::json segmentation_to_json(const SegmentationEval& e, double tolerance) {
  nlohmann::json j;
  j["frames"] = e.frames;
  j["hoover_pooled"] = curves_json(e.pooled, tolerance);
  j["hoover_per_image_mean"] = curves_json(e.per_image, tolerance);
  j["precision"] = {{"mean", e.precision_mean}, {"std", e.precision_std}};
  j["recall"] = {{"mean", e.recall_mean}, {"std", e.recall_std}};
  j["f_measure"] = {{"mean", e.f_mean}, {"std", e.f_std}};
  return j;
}

PipelineOutputs run_pipeline(const PipelineConfig& cfg) {
  validate(cfg);
  const std::vector<Frame> frames =
      cfg.synth_per_class > 0 ? synth_frames(cfg.synth_per_class, cfg.synth, cfg.seed) : load_frames(cfg.manifest);
  if (frames.empty()) throw Error(ErrorCode::TooFewSamples, "no input frames");
  const std::vector<SegmentResult> segs = segment_frames(frames, cfg.segment);

  std::vector<PatchRecord> kept;
  std::vector<PatchDrop> dropped;
  collect_patches(frames, segs, kept, dropped);
  std::vector<std::size_t> failed;
  const std::vector<FeatureRow> rows = compute_features(kept, &failed);
  const LabeledDataset data = to_dataset(rows, cfg.synth_per_class > 0 ? "synth" : cfg.manifest.generic_string());

  PipelineOutputs out;
  out.experiment = run_experiment(data, cfg);
  const ExperimentResult& ex = out.experiment;

  // Per-frame tallies of the final model's predictions.
  std::unordered_map<std::string, std::size_t> frame_of;
  out.counts.resize(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    frame_of[frames[i].id] = i;
    out.counts[i].source = frames[i].id;
  }
  for (std::size_t i : failed) ++out.counts[frame_of.at(kept[i].source)].failed;
  {
    std::size_t r = 0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (r < rows.size() && rows[r].sample_id == kept[i].sample_id) {
        const LabelClass c = ex.model.predict(rows[r].features);
        ++out.counts[frame_of.at(kept[i].source)].per_class[static_cast<std::size_t>(class_index(c))];
        ++r;
      }
    }
  }

  nlohmann::json& rep = out.report;
  rep["format_version"] = 1;
  rep["timestamp"] = utc_timestamp();
  rep["seed"] = cfg.seed;
  rep["config"] = config_to_json(cfg);

  std::map<std::string, int> drops;
  for (const auto& d : dropped) ++drops[d.reason];
  const auto cc = data.class_counts();
  rep["input"] = {{"source", cfg.synth_per_class > 0 ? "synth" : "manifest"},
                  {"frames", frames.size()},
                  {"patches", kept.size()},
                  {"dropped", drops},
                  {"feature_failures", failed.size()},
                  {"labelled_samples", data.size()},
                  {"class_counts", {{"1", cc[0]}, {"2", cc[1]}, {"4", cc[2]}, {"8", cc[3]}}}};

  const SegmentationEval seg_eval = evaluate_segmentation(frames, segs, default_tolerances());
  if (seg_eval.frames > 0) {
    rep["segmentation"] = segmentation_to_json(seg_eval, cfg.report_tolerance);
    out.hoover = seg_eval.pooled;
  } else {
    rep["segmentation"] = nullptr;
  }

  if (ex.choice) {
    std::map<std::string, int> split;
    for (int f : ex.selected) ++split[std::string(feature_block_of(static_cast<std::size_t>(f)))];
    rep["selection"] = {{"l", ex.choice->l},
                        {"accuracy", ex.choice->accuracy},
                        {"std", ex.choice->std},
                        {"selected", ex.selected},
                        {"block_split", split}};
  } else {
    rep["selection"] = nullptr;
  }
  rep["grid"] = ex.grid ? grid_to_json(*ex.grid) : nlohmann::json(nullptr);
  rep["classifier"] = describe(ex.final_config);
  rep["classification"] = cv_to_json(ex.cv);
  rep["mean_accuracy"] = ex.cv.mean;
  rep["std_accuracy"] = ex.cv.std;
  return out;
}

PipelineOutputs run_pipeline_to_disk(const PipelineConfig& cfg) {
  PipelineOutputs out = run_pipeline(cfg);
  fs::create_directories(cfg.out_dir);
  write_json(cfg.out_dir / "report.json", out.report);
  write_hoover_csv(cfg.out_dir / "hoover.csv", out.hoover);
  save_model(out.experiment.model, cfg.out_dir / "model.bin");
  write_counts_csv(cfg.out_dir / "counts.csv", out.counts);
  if (out.experiment.ranking) {
    write_json(cfg.out_dir / "ranking.json", ranking_to_json(*out.experiment.ranking, *out.experiment.choice));
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace algaeid
