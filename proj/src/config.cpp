#include "dvis/config.hpp"

#include <set>

namespace dvis {

namespace {

using json = nlohmann::json;

// Reads the keys of one JSON object section, rejecting anything unknown.
class Reader {
 public:
  Reader(const json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) throw DomainError("config section '" + section_ + "' must be an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw DomainError("unknown config key '" + section_ + "." + it.key() + "'");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw DomainError("config key '" + section_ + "." + key + "' has the wrong type");
    }
  }

  template <class T>
  void nested(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it != j_.end()) from_json(*it, out);
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

 private:
  const json& j_;
  std::string section_;
  std::set<std::string> seen_;
};

const char* ms_name(MsVariant v) { return v == MsVariant::cauchy ? "cauchy" : "truncated"; }
const char* mode_name(SamplingMode m) { return m == SamplingMode::stratified ? "stratified" : "random"; }

const char* layer_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::upsample: return "upsample";
    case LayerKind::global_avg_pool: return "global_avg_pool";
  }
  return "?";
}

}  // namespace

ojson to_json(const LossConfig& c) {
  return {{"huber_theta", c.huber_theta}, {"m1", c.m1},
          {"m2", c.m2},                   {"mu", c.mu},
          {"nu", c.nu},                   {"weight_binary", c.weight_binary},
          {"weight_pi", c.weight_pi},     {"weight_ms", c.weight_ms},
          {"weight_quant", c.weight_quant}, {"ms_variant", ms_name(c.ms_variant)}};
}

void from_json(const json& j, LossConfig& c) {
  Reader r(j, "loss");
  r.get("huber_theta", c.huber_theta);
  r.get("m1", c.m1);
  r.get("m2", c.m2);
  r.get("mu", c.mu);
  r.get("nu", c.nu);
  r.get("weight_binary", c.weight_binary);
  r.get("weight_pi", c.weight_pi);
  r.get("weight_ms", c.weight_ms);
  r.get("weight_quant", c.weight_quant);
  std::string variant = ms_name(c.ms_variant);
  r.get("ms_variant", variant);
  if (variant == "cauchy") c.ms_variant = MsVariant::cauchy;
  else if (variant == "truncated") c.ms_variant = MsVariant::truncated;
  else throw DomainError("loss.ms_variant must be 'cauchy' or 'truncated'");
}

ojson to_json(const SamplerConfig& c) {
  return {{"window", c.window}, {"center_radius", c.center_radius}, {"dilation", c.dilation},
          {"mode", mode_name(c.mode)}, {"random_pair_count", c.random_pair_count}, {"seed", c.seed}};
}

void from_json(const json& j, SamplerConfig& c) {
  Reader r(j, "sampler");
  r.get("window", c.window);
  r.get("center_radius", c.center_radius);
  r.get("dilation", c.dilation);
  r.get("random_pair_count", c.random_pair_count);
  r.get("seed", c.seed);
  std::string mode = mode_name(c.mode);
  r.get("mode", mode);
  if (mode == "stratified") c.mode = SamplingMode::stratified;
  else if (mode == "random") c.mode = SamplingMode::random;
  else throw DomainError("sampler.mode must be 'stratified' or 'random'");
}

ojson to_json(const NetConfig& c) {
  ojson layers = ojson::array();
  for (const auto& l : c.layers) {
    ojson e{{"type", layer_name(l.kind)}};
    if (l.kind == LayerKind::conv) {
      e["in"] = l.in_channels;
      e["out"] = l.out_channels;
      e["kernel"] = l.kernel;
      e["stride"] = l.stride;
    } else if (l.kind == LayerKind::upsample) {
      e["factor"] = l.factor;
    }
    layers.push_back(e);
  }
  return {{"input_channels", c.input_channels},
          {"init_seed", c.init_seed},
          {"input_offset", c.input_offset},
          {"layers", layers}};
}

void from_json(const json& j, NetConfig& c) {
  Reader r(j, "net");
  r.get("input_channels", c.input_channels);
  r.get("init_seed", c.init_seed);
  r.get("input_offset", c.input_offset);
  if (const json* layers = r.raw("layers")) {
    if (!layers->is_array()) throw DomainError("net.layers must be an array");
    c.layers.clear();
    for (const auto& e : *layers) {
      Reader lr(e, "net.layers[]");
      std::string type;
      lr.get("type", type);
      LayerSpec l;
      if (type == "conv") {
        l = LayerSpec::conv(0, 0);
        lr.get("in", l.in_channels);
        lr.get("out", l.out_channels);
        lr.get("kernel", l.kernel);
        lr.get("stride", l.stride);
      } else if (type == "relu") {
        l = LayerSpec::relu();
      } else if (type == "upsample") {
        l = LayerSpec::upsample(2);
        lr.get("factor", l.factor);
      } else if (type == "global_avg_pool") {
        l = LayerSpec::global_avg_pool();
      } else {
        throw DomainError("unknown layer type '" + type + "'");
      }
      c.layers.push_back(l);
    }
  }
}

ojson to_json(const OptimizerConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"clip_grad_norm", c.clip_grad_norm}};
}

void from_json(const json& j, OptimizerConfig& c) {
  Reader r(j, "optimizer");
  r.get("learning_rate", c.learning_rate);
  r.get("momentum", c.momentum);
  r.get("weight_decay", c.weight_decay);
  r.get("clip_grad_norm", c.clip_grad_norm);
}

ojson to_json(const TrainConfig& c) {
  return {{"steps", c.steps},
          {"scenes_per_step", c.scenes_per_step},
          {"seed", c.seed},
          {"log_interval", c.log_interval},
          {"checkpoint_interval", c.checkpoint_interval},
          {"loss", to_json(c.loss)},
          {"sampler", to_json(c.sampler)},
          {"net", to_json(c.net)},
          {"optimizer", to_json(c.optimizer)}};
}

void from_json(const json& j, TrainConfig& c) {
  Reader r(j, "train");
  r.get("steps", c.steps);
  r.get("scenes_per_step", c.scenes_per_step);
  r.get("seed", c.seed);
  r.get("log_interval", c.log_interval);
  r.get("checkpoint_interval", c.checkpoint_interval);
  r.nested("loss", c.loss);
  r.nested("sampler", c.sampler);
  r.nested("net", c.net);
  r.nested("optimizer", c.optimizer);
}

ojson to_json(const SceneConfig& c) {
  ojson classes = ojson::array();
  for (auto s : c.shape_classes) classes.push_back(to_string(s));
  return {{"height", c.height},
          {"width", c.width},
          {"min_instances", c.min_instances},
          {"max_instances", c.max_instances},
          {"shape_classes", classes},
          {"occluder_prob", c.occluder_prob},
          {"noise_std", c.noise_std},
          {"background_amplitude", c.background_amplitude},
          {"color_collision_prob", c.color_collision_prob},
          {"radius_min", c.radius_min},
          {"radius_max", c.radius_max},
          {"min_visible_pixels", c.min_visible_pixels},
          {"seed", c.seed},
          {"label_seed", c.label_seed}};
}

void from_json(const json& j, SceneConfig& c) {
  Reader r(j, "scene");
  r.get("height", c.height);
  r.get("width", c.width);
  r.get("min_instances", c.min_instances);
  r.get("max_instances", c.max_instances);
  r.get("occluder_prob", c.occluder_prob);
  r.get("noise_std", c.noise_std);
  r.get("background_amplitude", c.background_amplitude);
  r.get("color_collision_prob", c.color_collision_prob);
  r.get("radius_min", c.radius_min);
  r.get("radius_max", c.radius_max);
  r.get("min_visible_pixels", c.min_visible_pixels);
  r.get("seed", c.seed);
  r.get("label_seed", c.label_seed);
  std::vector<std::string> names;
  r.get("shape_classes", names);
  if (!names.empty()) {
    c.shape_classes.clear();
    for (const auto& n : names) c.shape_classes.push_back(shape_class_from_string(n));
  }
}

ojson to_json(const MeanShiftConfig& c) {
  return {{"bandwidths", c.bandwidths},
          {"epsilon", c.epsilon},
          {"max_iterations", c.max_iterations},
          {"background_threshold", c.background_threshold},
          {"min_segment_pixels", c.min_segment_pixels},
          {"dedup_iou", c.dedup_iou}};
}

void from_json(const json& j, MeanShiftConfig& c) {
  Reader r(j, "mean_shift");
  r.get("bandwidths", c.bandwidths);
  r.get("epsilon", c.epsilon);
  r.get("max_iterations", c.max_iterations);
  r.get("background_threshold", c.background_threshold);
  r.get("min_segment_pixels", c.min_segment_pixels);
  r.get("dedup_iou", c.dedup_iou);
}

ojson to_json(const VerifyConfig& c) {
  return {{"roi_size", c.roi_size},
          {"class_count", c.class_count},
          {"alpha", c.alpha},
          {"accept_threshold", c.accept_threshold},
          {"match_iou_floor", c.match_iou_floor},
          {"huber_theta", c.huber_theta},
          {"head", to_json(c.head)}};
}

void from_json(const json& j, VerifyConfig& c) {
  Reader r(j, "verify");
  r.get("roi_size", c.roi_size);
  r.get("class_count", c.class_count);
  r.get("alpha", c.alpha);
  r.get("accept_threshold", c.accept_threshold);
  r.get("match_iou_floor", c.match_iou_floor);
  r.get("huber_theta", c.huber_theta);
  r.nested("head", c.head);
}

ojson to_json(const VerifierTrainConfig& c) {
  return {{"steps", c.steps}, {"batch", c.batch}, {"seed", c.seed}, {"optimizer", to_json(c.optimizer)}};
}

void from_json(const json& j, VerifierTrainConfig& c) {
  Reader r(j, "verifier");
  r.get("steps", c.steps);
  r.get("batch", c.batch);
  r.get("seed", c.seed);
  r.nested("optimizer", c.optimizer);
  if (c.batch < 1) throw DomainError("verifier.batch must be >= 1");
}

ojson to_json(const PipelineConfig& c) {
  return {{"mean_shift", to_json(c.mean_shift)}, {"verify", to_json(c.verify)}, {"verifier", to_json(c.verifier)}};
}

void from_json(const json& j, PipelineConfig& c) {
  Reader r(j, "pipeline");
  r.nested("mean_shift", c.mean_shift);
  r.nested("verify", c.verify);
  r.nested("verifier", c.verifier);
}

ojson to_json(const DatasetConfig& c) {
  return {{"train_count", c.train_count}, {"test_count", c.test_count}, {"test_first_index", c.test_first_index}};
}

void from_json(const json& j, DatasetConfig& c) {
  Reader r(j, "dataset");
  r.get("train_count", c.train_count);
  r.get("test_count", c.test_count);
  r.get("test_first_index", c.test_first_index);
}

ojson to_json(const RunConfig& c) {
  return {{"scene", to_json(c.scene)},
          {"dataset", to_json(c.dataset)},
          {"train", to_json(c.train)},
          {"pipeline", to_json(c.pipeline)},
          {"paths", c.paths}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Reader r(j, "config");
  r.nested("scene", c.scene);
  r.nested("dataset", c.dataset);
  r.nested("train", c.train);
  r.nested("pipeline", c.pipeline);
  if (const json* p = r.raw("paths")) {
    if (!p->is_object()) throw DomainError("config.paths must be an object");
    c.paths = *p;
  }
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw DomainError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw DomainError("override key '" + key + "' has an empty component");
    if (!node->is_object()) {
      if (!node->is_null()) throw DomainError("override key '" + key + "' descends into a non-object");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

}  // namespace dvis
