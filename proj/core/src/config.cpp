#include "focal/config.hpp"

#include <set>
#include <string>

#include "focal/errors.hpp"
#include "fs_util.hpp"

namespace focal {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and remembers which were consumed so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& parent, const std::string& key, const std::string& path)
      : path_(path.empty() ? key : path + "." + key) {
    if (!parent.contains(key)) return;
    obj_ = &parent.at(key);
    if (!obj_->is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }
  explicit Section(const json& root) : obj_(&root) {
    if (!root.is_object()) throw ConfigError("config root must be an object");
  }

  const std::string& path() const { return path_; }
  const json* object() const { return obj_; }

  const json* find(const char* key) {
    if (!obj_) return nullptr;
    seen_.insert(key);
    const auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  void number(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  void integer(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      const auto x = v->get<long long>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) fail(key, "a 32-bit integer");
      out = static_cast<int>(x);
    }
  }
  void unsigned_integer(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void boolean(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "a boolean");
      out = v->get<bool>();
    }
  }
  void string(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& expected) const {
    throw ConfigError("'" + qualified(key) + "' must be " + expected);
  }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    if (!obj_) return;
    for (const auto& [key, value] : obj_->items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + qualified(key) + "'");
    }
  }

 private:
  const json* obj_ = nullptr;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

std::vector<int> int_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError("'" + path + "' must be an array of integers");
  std::vector<int> out;
  for (const auto& x : v) {
    if (!x.is_number_integer()) throw ConfigError("'" + path + "' must be an array of integers");
    out.push_back(x.get<int>());
  }
  return out;
}

void read_interval(Section& s, IntervalConfig& out) {
  s.integer("interval_len", out.interval_len);
  s.number("overlap", out.overlap);
}

void read_data(const json& root, DataSection& d) {
  Section s(root, "data", "");
  auto& c = d.synth;
  s.integer("n_sequences", c.n_sequences);
  s.integer("sequence_length", c.sequence_length);
  s.integer("modalities", c.modalities);
  s.integer("channels", c.channels);
  s.integer("window_length", c.window_length);
  s.number("sample_rate_hz", c.sample_rate_hz);
  s.integer("classes", c.classes);
  std::string mode(to_string(c.info_mode));
  s.string("info_mode", mode);
  try {
    c.info_mode = parse_info_mode(mode);
  } catch (const ConfigError&) {
    s.fail("info_mode", "one of shared_only, private_only, mixed");
  }
  s.number("drift_strength", c.drift_strength);
  s.number("drift_step", c.drift_step);
  s.number("noise_std", c.noise_std);
  s.number("shared_amplitude", c.shared_amplitude);
  s.number("private_amplitude", c.private_amplitude);
  if (const json* v = s.find("shared_bins")) c.shared_bins = int_list(*v, s.qualified("shared_bins"));
  if (const json* v = s.find("private_bins")) {
    if (!v->is_array()) s.fail("private_bins", "an array of integer arrays");
    c.private_bins.clear();
    for (const auto& bank : *v) c.private_bins.push_back(int_list(bank, s.qualified("private_bins")));
  }
  if (const json* v = s.find("split")) {
    if (!v->is_array() || v->size() != 3) s.fail("split", "an array of three numbers");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(*v)[i].is_number()) s.fail("split", "an array of three numbers");
      d.split[i] = (*v)[i].get<double>();
    }
  }
  s.boolean("allow_empty_split", d.allow_empty_split);
  s.integer("batch_sequences", d.batch_sequences);
  s.finish();
}

void read_pipeline(const json& root, PipelineSection& p) {
  Section s(root, "pipeline", "");
  read_interval(s, p.defaults);
  if (const json* v = s.find("overrides")) {
    if (!v->is_object()) s.fail("overrides", "an object keyed by modality id");
    p.overrides.clear();
    for (const auto& [id, body] : v->items()) {
      Section o(*v, id, s.qualified("overrides"));
      IntervalConfig ic = p.defaults;
      read_interval(o, ic);
      o.finish();
      p.overrides[id] = ic;
    }
  }
  s.finish();
}

void read_augmentation(const json& root, AugmentationPolicy& a) {
  Section s(root, "augmentation", "");
  s.number("apply_prob", a.apply_prob);
  s.boolean("force_same_view", a.force_same_view);
  if (const json* v = s.find("catalog")) {
    if (!v->is_array()) s.fail("catalog", "an array of augmentation names");
    a.catalog.clear();
    for (const auto& name : *v) {
      if (!name.is_string()) s.fail("catalog", "an array of augmentation names");
      a.catalog.push_back(parse_augmentation(name.get<std::string>()));
    }
  }
  auto& p = a.params;
  s.number("scale_sigma", p.scale_sigma);
  s.number("jitter_ratio", p.jitter_ratio);
  s.number("magwarp_sigma", p.magwarp_sigma);
  s.integer("magwarp_knots", p.magwarp_knots);
  s.number("timewarp_sigma", p.timewarp_sigma);
  s.integer("timewarp_knots", p.timewarp_knots);
  s.number("time_mask_ratio", p.time_mask_ratio);
  s.number("freq_mask_ratio", p.freq_mask_ratio);
  s.finish();
}

void read_encoder(const json& root, EncoderConfig& e) {
  Section s(root, "encoder", "");
  s.integer("interval_hidden", e.interval_hidden);
  std::string agg = e.aggregate == Aggregate::Mean ? "mean" : "last";
  s.string("aggregate", agg);
  if (agg == "mean") {
    e.aggregate = Aggregate::Mean;
  } else if (agg == "last") {
    e.aggregate = Aggregate::Last;
  } else {
    s.fail("aggregate", "\"mean\" or \"last\"");
  }
  s.integer("embed_dim", e.embed_dim);
  s.integer("proj_hidden", e.proj_hidden);
  s.integer("proj_dim", e.proj_dim);
  s.number("input_scale", e.input_scale);
  s.finish();
}

void read_loss(const json& root, LossConfig& l) {
  Section s(root, "loss", "");
  s.number("tau", l.tau);
  s.number("lambda_p", l.lambda_p);
  s.number("lambda_o", l.lambda_o);
  s.number("lambda_t", l.lambda_t);
  s.number("margin", l.margin);
  s.boolean("no_private", l.no_private);
  s.boolean("no_orth", l.no_orth);
  s.boolean("no_temp", l.no_temp);
  s.boolean("temporal_contrastive", l.temporal_contrastive);
  s.boolean("temporal_plugin_only", l.temporal_plugin_only);
  s.finish();
}

void read_optimizer(const json& root, OptimizerSection& o) {
  Section s(root, "optimizer", "");
  s.number("beta1", o.pretrain.beta1);
  s.number("beta2", o.pretrain.beta2);
  s.number("eps", o.pretrain.eps);
  s.number("weight_decay", o.pretrain.weight_decay);
  s.boolean("decoupled", o.pretrain.decoupled);
  s.number("finetune_lr", o.finetune_lr);
  s.number("finetune_weight_decay", o.finetune_weight_decay);
  s.integer("finetune_batch_size", o.finetune_batch_size);
  s.finish();
}

void read_schedule(const json& root, ScheduleSection& c) {
  Section s(root, "schedule", "");
  s.integer("epochs", c.epochs);
  s.number("max_lr", c.max_lr);
  s.number("min_lr", c.min_lr);
  s.integer("finetune_epochs", c.finetune_epochs);
  s.number("finetune_decay", c.finetune_decay);
  s.integer("finetune_period", c.finetune_period);
  s.finish();
}

void read_eval(const json& root, EvalSection& e) {
  Section s(root, "eval", "");
  s.integer("knn_k", e.knn_k);
  s.integer("eval_every", e.eval_every);
  s.number("label_ratio", e.label_ratio);
  s.integer("finetune_runs", e.finetune_runs);
  s.integer("kmeans_restarts", e.kmeans.restarts);
  s.integer("kmeans_max_iter", e.kmeans.max_iter);
  std::string space(to_string(e.cluster_features));
  s.string("cluster_features", space);
  try {
    e.cluster_features = parse_feature_space(space);
  } catch (const ConfigError&) {
    s.fail("cluster_features", "one of concat, shared, private");
  }
  s.finish();
}

void read_seeds(const json& root, SeedSection& z) {
  Section s(root, "seeds", "");
  s.unsigned_integer("data", z.data);
  s.unsigned_integer("split", z.split);
  s.unsigned_integer("train", z.train);
  s.unsigned_integer("finetune", z.finetune);
  s.unsigned_integer("eval", z.eval);
  s.finish();
}

json interval_json(const IntervalConfig& ic) { return {{"interval_len", ic.interval_len}, {"overlap", ic.overlap}}; }

}  // namespace

std::string_view to_string(FeatureSpace space) {
  switch (space) {
    case FeatureSpace::Concat:
      return "concat";
    case FeatureSpace::Shared:
      return "shared";
    case FeatureSpace::Private:
      return "private";
  }
  return "concat";
}

FeatureSpace parse_feature_space(std::string_view name) {
  if (name == "concat") return FeatureSpace::Concat;
  if (name == "shared") return FeatureSpace::Shared;
  if (name == "private") return FeatureSpace::Private;
  throw ConfigError("unknown feature space '" + std::string(name) + "'");
}

IntervalConfig PipelineSection::for_modality(const std::string& id) const {
  const auto it = overrides.find(id);
  return it == overrides.end() ? defaults : it->second;
}

SynthConfig RunConfig::synth_config() const {
  SynthConfig c = data.synth;
  c.interval_len = pipeline.defaults.interval_len;
  c.seed = seeds.data;
  return c;
}

std::vector<IntervalConfig> RunConfig::intervals(const SignalSet& signals) const {
  std::vector<IntervalConfig> out;
  for (const auto& m : signals.modalities) out.push_back(pipeline.for_modality(m.id));
  return out;
}

PretrainConfig RunConfig::pretrain_config(const SignalSet& signals) const {
  PretrainConfig p;
  p.intervals = intervals(signals);
  p.augmentation = augmentation;
  p.encoder = encoder;
  p.loss = loss;
  p.optimizer = optimizer.pretrain;
  p.schedule = {schedule.max_lr, schedule.min_lr, schedule.epochs};
  p.sequence_length = data.synth.sequence_length;
  p.batch_sequences = data.batch_sequences;
  p.eval_every = eval.eval_every;
  return p;
}

FinetuneConfig RunConfig::finetune_config() const {
  FinetuneConfig f;
  f.schedule = {optimizer.finetune_lr, schedule.finetune_decay, schedule.finetune_period};
  f.epochs = schedule.finetune_epochs;
  f.batch_size = optimizer.finetune_batch_size;
  f.weight_decay = optimizer.finetune_weight_decay;
  return f;
}

void RunConfig::reseed(std::uint64_t seed) {
  seeds = {seed, seed + 1, seed + 2, seed + 3, seed + 4};
}

void RunConfig::validate() const {
  synth_config().validate();
  for (double r : data.split) {
    if (r < 0.0 || r > 1.0) throw ConfigError("data.split ratios must lie in [0, 1]");
  }
  if (std::abs(data.split[0] + data.split[1] + data.split[2] - 1.0) > 1e-9) {
    throw ConfigError("data.split ratios must sum to 1");
  }
  if (data.batch_sequences < 2) throw ConfigError("data.batch_sequences must be at least 2");
  (void)pipeline.defaults.hop();
  for (const auto& [id, ic] : pipeline.overrides) (void)ic.hop();
  augmentation.validate();
  encoder.validate();
  loss.validate();
  CosineSchedule{schedule.max_lr, schedule.min_lr, schedule.epochs}.validate();
  finetune_config().validate();
  if (eval.knn_k < 1) throw ConfigError("eval.knn_k must be positive");
  if (eval.eval_every < 0) throw ConfigError("eval.eval_every must be non-negative");
  if (!(eval.label_ratio > 0.0 && eval.label_ratio <= 1.0)) throw ConfigError("eval.label_ratio must be in (0, 1]");
  if (eval.finetune_runs < 1) throw ConfigError("eval.finetune_runs must be positive");
  if (eval.kmeans.restarts < 1 || eval.kmeans.max_iter < 1) throw ConfigError("eval.kmeans_* must be positive");
}

RunConfig config_from_json(const json& j) {
  Section root(j);
  RunConfig cfg;
  for (const char* key : {"data", "pipeline", "augmentation", "encoder", "loss", "optimizer", "schedule", "eval", "seeds"}) {
    root.find(key);
  }
  root.finish();
  read_data(j, cfg.data);
  read_pipeline(j, cfg.pipeline);
  read_augmentation(j, cfg.augmentation);
  read_encoder(j, cfg.encoder);
  read_loss(j, cfg.loss);
  read_optimizer(j, cfg.optimizer);
  read_schedule(j, cfg.schedule);
  read_eval(j, cfg.eval);
  read_seeds(j, cfg.seeds);
  cfg.validate();
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  const auto& c = cfg.data.synth;
  json data = {{"n_sequences", c.n_sequences},
               {"sequence_length", c.sequence_length},
               {"modalities", c.modalities},
               {"channels", c.channels},
               {"window_length", c.window_length},
               {"sample_rate_hz", c.sample_rate_hz},
               {"classes", c.classes},
               {"info_mode", to_string(c.info_mode)},
               {"drift_strength", c.drift_strength},
               {"drift_step", c.drift_step},
               {"noise_std", c.noise_std},
               {"shared_amplitude", c.shared_amplitude},
               {"private_amplitude", c.private_amplitude},
               {"shared_bins", c.shared_bins},
               {"private_bins", c.private_bins},
               {"split", cfg.data.split},
               {"allow_empty_split", cfg.data.allow_empty_split},
               {"batch_sequences", cfg.data.batch_sequences}};
  json pipeline = interval_json(cfg.pipeline.defaults);
  pipeline["overrides"] = json::object();
  for (const auto& [id, ic] : cfg.pipeline.overrides) pipeline["overrides"][id] = interval_json(ic);

  const auto& a = cfg.augmentation;
  json catalog = json::array();
  for (auto kind : a.catalog) catalog.push_back(to_string(kind));
  json augmentation = {{"apply_prob", a.apply_prob},
                       {"force_same_view", a.force_same_view},
                       {"catalog", catalog},
                       {"scale_sigma", a.params.scale_sigma},
                       {"jitter_ratio", a.params.jitter_ratio},
                       {"magwarp_sigma", a.params.magwarp_sigma},
                       {"magwarp_knots", a.params.magwarp_knots},
                       {"timewarp_sigma", a.params.timewarp_sigma},
                       {"timewarp_knots", a.params.timewarp_knots},
                       {"time_mask_ratio", a.params.time_mask_ratio},
                       {"freq_mask_ratio", a.params.freq_mask_ratio}};
  const auto& e = cfg.encoder;
  json encoder = {{"interval_hidden", e.interval_hidden},
                  {"aggregate", e.aggregate == Aggregate::Mean ? "mean" : "last"},
                  {"embed_dim", e.embed_dim},
                  {"proj_hidden", e.proj_hidden},
                  {"proj_dim", e.proj_dim},
                  {"input_scale", e.input_scale}};
  const auto& l = cfg.loss;
  json loss = {{"tau", l.tau},
               {"lambda_p", l.lambda_p},
               {"lambda_o", l.lambda_o},
               {"lambda_t", l.lambda_t},
               {"margin", l.margin},
               {"no_private", l.no_private},
               {"no_orth", l.no_orth},
               {"no_temp", l.no_temp},
               {"temporal_contrastive", l.temporal_contrastive},
               {"temporal_plugin_only", l.temporal_plugin_only}};
  const auto& o = cfg.optimizer;
  json optimizer = {{"beta1", o.pretrain.beta1},
                    {"beta2", o.pretrain.beta2},
                    {"eps", o.pretrain.eps},
                    {"weight_decay", o.pretrain.weight_decay},
                    {"decoupled", o.pretrain.decoupled},
                    {"finetune_lr", o.finetune_lr},
                    {"finetune_weight_decay", o.finetune_weight_decay},
                    {"finetune_batch_size", o.finetune_batch_size}};
  const auto& s = cfg.schedule;
  json schedule = {{"epochs", s.epochs},
                   {"max_lr", s.max_lr},
                   {"min_lr", s.min_lr},
                   {"finetune_epochs", s.finetune_epochs},
                   {"finetune_decay", s.finetune_decay},
                   {"finetune_period", s.finetune_period}};
  const auto& v = cfg.eval;
  json eval = {{"knn_k", v.knn_k},
               {"eval_every", v.eval_every},
               {"label_ratio", v.label_ratio},
               {"finetune_runs", v.finetune_runs},
               {"kmeans_restarts", v.kmeans.restarts},
               {"kmeans_max_iter", v.kmeans.max_iter},
               {"cluster_features", to_string(v.cluster_features)}};
  const auto& z = cfg.seeds;
  json seeds = {{"data", z.data}, {"split", z.split}, {"train", z.train}, {"finetune", z.finetune}, {"eval", z.eval}};
  return {{"data", data},           {"pipeline", pipeline}, {"augmentation", augmentation},
          {"encoder", encoder},     {"loss", loss},         {"optimizer", optimizer},
          {"schedule", schedule},   {"eval", eval},         {"seeds", seeds}};
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
  detail::write_file_atomic(path, config_to_json(cfg).dump(2) + "\n");
}

}  // namespace focal
