#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dvis/config.hpp"
#include "dvis/dataset.hpp"
#include "dvis/gradcheck.hpp"
#include "dvis/io.hpp"
#include "dvis/pipeline.hpp"

namespace {

using namespace dvis;
using json = nlohmann::json;

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Invocation {
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string split = "train";
};

struct Manifest {
  ojson inputs = ojson::object();
  ojson outputs = ojson::array();
  std::uint64_t seed = 0;

  void output(const fs::path& p) { outputs.push_back(p.filename().string()); }
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string path_setting(const RunConfig& cfg, const char* key, bool required = true) {
  auto it = cfg.paths.find(key);
  if (it == cfg.paths.end() || !it->is_string()) {
    if (required) throw DomainError(std::string("missing config value paths.") + key);
    return {};
  }
  return it->get<std::string>();
}

ojson report_to_json(const EvalReport& r) {
  ojson per_class = ojson::object();
  for (const auto& [cls, aps] : r.per_class_ap) per_class[std::to_string(cls)] = aps;
  return {{"iou_thresholds", r.iou_thresholds}, {"map", r.map_per_threshold},
          {"ap_average", r.ap_average},         {"per_class_ap", per_class},
          {"contour_tolerances", r.contour_tolerances}, {"contour_f1", r.contour_f1}};
}

void write_trace(const fs::path& path, const std::vector<TraceRow>& trace) {
  std::string text = "step,binary,pi,ms,quant,total\n";
  char line[256];
  for (const auto& t : trace) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", t.step, t.terms.binary, t.terms.pi,
                  t.terms.ms, t.terms.quant, t.terms.total);
    text += line;
  }
  write_text(path, text);
}

struct Model {
  ParamSet seg;
  ParamSet head;
};

Model load_model(const fs::path& dir) {
  return {read_checkpoint(dir / "seg.ckpt").params, read_checkpoint(dir / "verifier.ckpt").params};
}

int cmd_synth(const RunConfig& cfg, const Invocation& inv, const fs::path& out, Manifest& m) {
  const bool test = inv.split == "test";
  const std::size_t count = test ? cfg.dataset.test_count : cfg.dataset.train_count;
  const std::uint64_t first = test ? cfg.dataset.test_first_index : 0;
  write_dataset(out, SyntheticSource(cfg.scene, count, first), cfg.scene, first);
  m.seed = cfg.scene.seed;
  m.output(out / "dataset.json");
  std::cout << "wrote " << count << " scenes to " << out.string() << "\n";
  return kOk;
}

int cmd_train(const RunConfig& cfg, const fs::path& out, Manifest& m) {
  const std::string data_dir = path_setting(cfg, "dataset", false);
  std::unique_ptr<SceneSource> src;
  if (data_dir.empty()) {
    src = std::make_unique<VectorSource>(cache_scenes(SyntheticSource(cfg.scene, cfg.dataset.train_count, 0)));
  } else {
    src = std::make_unique<VectorSource>(cache_scenes(DirectorySource(data_dir)));
    m.inputs["dataset"] = data_dir;
  }
  TrainConfig tc = cfg.train;
  tc.checkpoint_path = (out / "seg.ckpt").string();
  m.seed = tc.seed;
  const std::size_t every = std::max<std::size_t>(tc.log_interval, 1);
  const TrainResult r = train(tc, *src, [&](const TraceRow& t) {
    if (t.step % every == 0 || t.step + 1 == tc.steps)
      std::printf("step %zu total %.6f binary %.6f pi %.6f ms %.6f quant %.6f\n", t.step, t.terms.total,
                  t.terms.binary, t.terms.pi, t.terms.ms, t.terms.quant);
  });
  m.output(out / "seg.ckpt");
  write_trace(out / "trace.csv", r.trace);
  m.output(out / "trace.csv");

  const auto samples = collect_verifier_samples(r.params, *src, cfg.pipeline);
  const VerifierTrainResult v = train_verifier(samples, cfg.pipeline);
  const auto& oc = cfg.pipeline.verifier.optimizer;
  write_checkpoint(out / "verifier.ckpt",
                   {v.head, make_opt_state(v.head, oc.learning_rate, oc.momentum, oc.weight_decay), v.trace.size()});
  m.output(out / "verifier.ckpt");
  std::string text = "step,loss\n";
  for (std::size_t i = 0; i < v.trace.size(); ++i) {
    char line[64];
    std::snprintf(line, sizeof line, "%zu,%.17g\n", i, v.trace[i]);
    text += line;
  }
  write_text(out / "verifier_trace.csv", text);
  m.output(out / "verifier_trace.csv");
  std::printf("verifier trained on %zu candidates\n", samples.size());
  return kOk;
}

int cmd_infer(const RunConfig& cfg, const fs::path& out, Manifest& m) {
  const std::string model_dir = path_setting(cfg, "model");
  const std::string image_path = path_setting(cfg, "image");
  m.inputs["model"] = model_dir;
  m.inputs["image"] = image_path;
  const Model model = load_model(model_dir);
  const ImageGrid image = read_pfm_image(image_path);
  const Inference inf = run_inference(model.seg, model.head, image, cfg.pipeline);
  write_pfm(out / "f.pfm", inf.f);
  write_json(out / "candidates.json", candidates_to_json(inf.candidates));
  write_json(out / "detections.json", detections_to_json(inf.detections));
  write_ppm(out / "f.ppm", render_label_map(inf.f));
  write_ppm(out / "detections.ppm", render_detections(&image, inf.detections, image.height, image.width));
  for (const char* name : {"f.pfm", "candidates.json", "detections.json", "f.ppm", "detections.ppm"}) m.output(name);
  std::printf("%zu candidates, %zu detections\n", inf.candidates.size(), inf.detections.size());
  return kOk;
}

int cmd_discretize(const RunConfig& cfg, const fs::path& out, Manifest& m) {
  const std::string map_path = path_setting(cfg, "label_map");
  m.inputs["label_map"] = map_path;
  const auto cands = discretize(read_pfm(map_path), cfg.pipeline.mean_shift);
  write_json(out / "candidates.json", candidates_to_json(cands));
  m.output("candidates.json");
  std::printf("%zu candidates\n", cands.size());
  return kOk;
}

int cmd_eval(const RunConfig& cfg, const fs::path& out, Manifest& m) {
  const std::string data_dir = path_setting(cfg, "dataset");
  const std::string det_dir = path_setting(cfg, "detections", false);
  m.inputs["dataset"] = data_dir;
  const DirectorySource data(data_dir);
  EvalReport report;
  if (!det_dir.empty()) {
    m.inputs["detections"] = det_dir;
    std::vector<std::vector<ScoredMask>> dets;
    std::vector<GroundTruthMap> gts;
    for (std::size_t i = 0; i < data.size(); ++i) {
      char name[48];
      std::snprintf(name, sizeof name, "scene_%05zu_detections.json", i);
      dets.push_back(to_scored(detections_from_json(read_json(fs::path(det_dir) / name))));
      gts.push_back(data.scene(i).gt);
    }
    report = evaluate(dets, gts, cfg.pipeline.verify.class_count);
  } else {
    const std::string model_dir = path_setting(cfg, "model");
    m.inputs["model"] = model_dir;
    const Model model = load_model(model_dir);
    const EvalRun run = evaluate_model(model.seg, model.head, data, cfg.pipeline);
    report = run.report;
    for (std::size_t i = 0; i < run.detections.size(); ++i) {
      char name[48];
      std::snprintf(name, sizeof name, "scene_%05zu_detections.json", i);
      write_json(out / "detections" / name, detections_to_json(run.detections[i]));
    }
    m.output(out / "detections");
    std::printf("mean candidates %.3f, mean GT instances %.3f\n", run.mean_candidates, run.mean_gt_instances);
  }
  write_json(out / "report.json", report_to_json(report));
  m.output("report.json");
  for (std::size_t k = 0; k < report.iou_thresholds.size(); ++k)
    std::printf("mAP@%.1f %.4f\n", report.iou_thresholds[k], report.map_per_threshold[k]);
  return kOk;
}

int cmd_gradcheck(const RunConfig& cfg, const fs::path& out, Manifest& m) {
  GradcheckConfig gc;
  gc.seed = cfg.train.seed;
  gc.loss = cfg.train.loss;
  m.seed = gc.seed;
  auto results = loss_gradcheck(gc);
  results.push_back(network_gradcheck(gc));
  ojson j = ojson::array();
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%-13s checked %3d failed %d max_rel_error %.3e\n", r.name.c_str(), r.checked, r.failed,
                r.max_rel_error);
    j.push_back({{"term", r.name},
                 {"checked", r.checked},
                 {"failed", r.failed},
                 {"rejected", r.rejected},
                 {"max_rel_error", r.max_rel_error}});
    ok = ok && r.ok();
  }
  write_json(out / "gradcheck.json", j);
  m.output("gradcheck.json");
  return ok ? kOk : kNumeric;
}

int cmd_render(const RunConfig& cfg, const fs::path& out, Manifest& m) {
  const std::string map_path = path_setting(cfg, "label_map", false);
  if (!map_path.empty()) {
    m.inputs["label_map"] = map_path;
    write_ppm(out / "render.ppm", render_label_map(read_pfm(map_path)));
  } else {
    const std::string det_path = path_setting(cfg, "detections");
    const std::string image_path = path_setting(cfg, "image", false);
    m.inputs["detections"] = det_path;
    const auto dets = detections_from_json(read_json(det_path));
    std::optional<ImageGrid> image;
    if (!image_path.empty()) {
      m.inputs["image"] = image_path;
      image = read_pfm_image(image_path);
    }
    int h = image ? image->height : 0, w = image ? image->width : 0;
    if (!image) {
      if (dets.empty()) throw DataError("no image and no detections: nothing determines the canvas size");
      h = dets.front().mask.height;
      w = dets.front().mask.width;
    }
    write_ppm(out / "render.ppm", render_detections(image ? &*image : nullptr, dets, h, w));
  }
  m.output("render.ppm");
  return kOk;
}

int run(const Invocation& inv) {
  json doc = json::object();
  if (!inv.config_path.empty()) doc = read_json(inv.config_path);
  for (const auto& o : inv.overrides) apply_override(doc, o);
  const RunConfig cfg = run_config_from_json(doc);
  const fs::path out(inv.out_dir);
  fs::create_directories(out);

  Manifest m;
  if (!inv.config_path.empty()) m.inputs["config"] = inv.config_path;
  int code = kOk;
  if (inv.command == "synth") code = cmd_synth(cfg, inv, out, m);
  else if (inv.command == "train") code = cmd_train(cfg, out, m);
  else if (inv.command == "infer") code = cmd_infer(cfg, out, m);
  else if (inv.command == "discretize") code = cmd_discretize(cfg, out, m);
  else if (inv.command == "eval") code = cmd_eval(cfg, out, m);
  else if (inv.command == "gradcheck") code = cmd_gradcheck(cfg, out, m);
  else if (inv.command == "render") code = cmd_render(cfg, out, m);

  write_json(out / "manifest.json", {{"command", inv.command},
                                     {"tool_version", kVersion},
                                     {"seed", m.seed},
                                     {"created_at", utc_now()},
                                     {"overrides", inv.overrides},
                                     {"config", to_json(cfg)},
                                     {"inputs", m.inputs},
                                     {"outputs", m.outputs},
                                     {"exit_code", code}});
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational instance segmentation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Invocation inv;
  const std::vector<std::pair<const char*, const char*>> commands{
      {"synth", "generate a synthetic dataset"},
      {"train", "train the label predictor and the verification head"},
      {"infer", "predict a label map and detections for one image"},
      {"discretize", "turn a real-valued label map into candidate segments"},
      {"eval", "score detections against a dataset"},
      {"gradcheck", "finite-difference check of all analytic gradients"},
      {"render", "render a label map or detections to PPM"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", inv.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--set", inv.overrides, "override a config value, key.path=value");
    sub->add_option("--out", inv.out_dir, "output directory")->required();
    if (std::string(name) == "synth")
      sub->add_option("--split", inv.split, "train or test")->check(CLI::IsMember({"train", "test"}));
    sub->callback([&inv, sub] { inv.command = sub->get_name(); });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  try {
    return run(inv);
  } catch (const DomainError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
}
