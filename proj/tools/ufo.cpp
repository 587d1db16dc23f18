// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>

#include "ufo/binary_io.hpp"
#include "ufo/config.hpp"
#include "ufo/errors.hpp"
#include "ufo/experiment.hpp"
#include "ufo/injection.hpp"
#include "ufo/serialize.hpp"
#include "ufo/trainer.hpp"

namespace fs = std::filesystem;
using namespace ufo;

namespace {

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kNumeric = 3, kCompat = 4 };

/// Relative output paths land under the output root.
fs::path out_path(const fs::path& p) { return p.is_relative() ? output_root() / p : p; }

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void print_progress(const StepLog& s, int total) {
  if (s.step == 1 || s.step == total || s.step % 100 == 0) {
    std::cerr << "step " << s.step << "/" << total << " loss_simple " << fmt(s.loss_simple) << " loss_vlb "
              << fmt(s.loss_vlb) << " lr " << fmt(s.lr) << '\n';
  }
}

struct Loaded {
  std::vector<UfoAdapterSet<float>> sets;
  std::vector<AppliedAdapter<float>> applied;
};

Loaded load_adapters(const ModelGraph<float>& model, const std::vector<std::string>& files,
                     const std::vector<double>& alphas) {
  if (files.size() != alphas.size()) {
    throw ConfigError("got " + std::to_string(files.size()) + " --ufo files but " + std::to_string(alphas.size()) +
                      " --alpha values; pass one alpha per file");
  }
  Loaded out;
  out.sets.reserve(files.size());
  for (const auto& f : files) out.sets.push_back(load_adapter(f));
  std::vector<AppliedAdapter<float>> raw;
  for (std::size_t i = 0; i < files.size(); ++i) raw.push_back({&out.sets[i], alphas[i]});
  out.applied = compose<float>(model, raw);
  return out;
}

std::vector<fs::path> list_clips(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".vclip") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::ordered_json describe_adapter(const UfoAdapterSet<float>& set) {
  nlohmann::ordered_json j;
  j["format"] = "UFOA";
  j["kind"] = to_string(set.kind());
  j["d"] = set.rank();
  j["fingerprint"] = set.fingerprint();
  j["recommended_alpha"] = set.recommended_alpha();
  j["entries"] = set.entries().size();
  j["parameters"] = set.parameter_count();
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& e : set.entries()) {
    layers.push_back({{"name", e.name}, {"m", e.m}, {"n", e.n}, {"beta", e.beta_value()}});
  }
  j["layers"] = layers;
  return j;
}

nlohmann::ordered_json describe_model(const ModelGraph<float>& m) {
  const ModelConfig& c = m.config();
  nlohmann::ordered_json j;
  j["format"] = "UFOM";
  j["fingerprint"] = m.fingerprint();
  j["parameters"] = m.parameter_count();
  j["config"] = {{"frames", c.frames},   {"height", c.height},       {"width", c.width},
                 {"channels", c.channels}, {"patch", c.patch},         {"hidden", c.hidden},
                 {"blocks", c.blocks},     {"heads", c.heads},         {"mlp_ratio", c.mlp_ratio},
                 {"num_conditions", c.num_conditions}, {"timesteps", c.timesteps},
                 {"schedule", to_string(c.schedule)}};
  Index adaptable = 0;
  for (const auto& l : m.layers()) adaptable += l.adaptable;
  j["adaptable_layers"] = adaptable;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train, apply and evaluate UFO adapters on a toy video diffusion model"};
  app.require_subcommand(1);

  // train-base
  auto* train_base_cmd = app.add_subcommand("train-base", "Pretrain the base model on moving synthetic scenes");
  std::string tb_config, tb_out, tb_loss;
  train_base_cmd->add_option("--config", tb_config, "Experiment YAML")->required();
  train_base_cmd->add_option("--out", tb_out, "Checkpoint path (default <checkpoints>/base.ufom)");
  train_base_cmd->add_option("--loss-csv", tb_loss, "Loss curve path (default <reports>/base_loss.csv)");

  // train-ufo
  auto* train_ufo_cmd = app.add_subcommand("train-ufo", "Train a consistency or style adapter on a frozen base");
  std::string tu_config, tu_kind = "consistency", tu_base, tu_out, tu_loss;
  train_ufo_cmd->add_option("--config", tu_config, "Experiment YAML")->required();
  train_ufo_cmd->add_option("--kind", tu_kind, "consistency or style")
      ->check(CLI::IsMember({"consistency", "style"}));
  train_ufo_cmd->add_option("--base", tu_base, "Base checkpoint")->required();
  train_ufo_cmd->add_option("--out", tu_out, "Adapter path (default <checkpoints>/ufo_<kind>.ufoa)");
  train_ufo_cmd->add_option("--loss-csv", tu_loss, "Loss curve path (default <reports>/ufo_<kind>_loss.csv)");

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Sample one clip");
  std::string g_base, g_out;
  std::vector<std::string> g_ufo;
  std::vector<double> g_alpha;
  int g_condition = 0, g_steps = kDefaultSamplingSteps;
  std::uint64_t g_seed = 0;
  gen_cmd->add_option("--base", g_base, "Base checkpoint")->required();
  gen_cmd->add_option("--ufo", g_ufo, "Adapter files (repeatable)");
  gen_cmd->add_option("--alpha", g_alpha, "One intensity per adapter file");
  gen_cmd->add_option("--condition", g_condition, "Condition id");
  gen_cmd->add_option("--seed", g_seed, "Noise seed");
  gen_cmd->add_option("--steps", g_steps, "Sampling steps");
  gen_cmd->add_option("--out", g_out, "Output .vclip")->required();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a directory of clips");
  std::string e_videos, e_baseline, e_out;
  eval_cmd->add_option("--videos", e_videos, "Directory of .vclip files")->required();
  eval_cmd->add_option("--baseline", e_baseline, "Index-aligned baseline directory (enables EC)");
  eval_cmd->add_option("--out", e_out, "metrics.csv path")->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Matched-seed intensity sweep");
  std::string s_base, s_ufo, s_out;
  std::vector<double> s_alphas{0.0, 0.1, 0.2};
  std::vector<std::uint64_t> s_seeds{0};
  std::vector<int> s_conditions;
  int s_steps = kDefaultSamplingSteps, s_videos = 0;
  bool s_no_clips = false;
  sweep_cmd->add_option("--base", s_base, "Base checkpoint")->required();
  sweep_cmd->add_option("--ufo", s_ufo, "Adapter file")->required();
  sweep_cmd->add_option("--alphas", s_alphas, "Intensities");
  sweep_cmd->add_option("--seeds", s_seeds, "Seeds (outer grid axis)");
  sweep_cmd->add_option("--conditions", s_conditions, "Condition ids (default: all)");
  sweep_cmd->add_option("--videos", s_videos, "Cap on grid size (default: full grid)");
  sweep_cmd->add_option("--steps", s_steps, "Sampling steps");
  sweep_cmd->add_flag("--no-clips", s_no_clips, "Write metrics only");
  sweep_cmd->add_option("--out", s_out, "Output directory")->required();

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "Describe a UFOA, UFOM or .vclip file as JSON");
  std::string i_file;
  inspect_cmd->add_option("file", i_file, "File to inspect")->required();

  // compose
  auto* compose_cmd = app.add_subcommand("compose", "Check that adapters compose on a base model");
  std::string c_base;
  std::vector<std::string> c_ufo;
  std::vector<double> c_alpha;
  compose_cmd->add_option("--base", c_base, "Base checkpoint")->required();
  compose_cmd->add_option("--ufo", c_ufo, "Adapter files")->required();
  compose_cmd->add_option("--alpha", c_alpha, "One intensity per adapter file")->required();

  // transfer
  auto* transfer_cmd = app.add_subcommand("transfer", "Attach an adapter to another base model");
  std::string t_ufo, t_target, t_out;
  double t_alpha = -1.0;
  int t_condition = 0, t_steps = kDefaultSamplingSteps;
  std::uint64_t t_seed = 0;
  transfer_cmd->add_option("--ufo", t_ufo, "Adapter file")->required();
  transfer_cmd->add_option("--target", t_target, "Target base checkpoint")->required();
  transfer_cmd->add_option("--alpha", t_alpha, "Intensity (default: the adapter's recommended value)");
  transfer_cmd->add_option("--condition", t_condition, "Condition id for --out");
  transfer_cmd->add_option("--seed", t_seed, "Seed for --out");
  transfer_cmd->add_option("--steps", t_steps, "Sampling steps for --out");
  transfer_cmd->add_option("--out", t_out, "Optionally sample one clip on the target");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_base_cmd) {
      const ExperimentConfig cfg = load_config(tb_config);
      ModelGraph<float> model(cfg.model);
      const auto log = train_base(model, moving_scene_source(cfg.model, cfg.data_spec()), cfg.train,
                                  [&](const StepLog& s) { print_progress(s, cfg.train.steps); });
      const fs::path out = tb_out.empty() ? cfg.paths.checkpoints / "base.ufom" : out_path(tb_out);
      const fs::path loss = tb_loss.empty() ? cfg.paths.reports / "base_loss.csv" : out_path(tb_loss);
      ensure_parent(out);
      ensure_parent(loss);
      save_model(out, model);
      write_loss_csv(loss, log);
      std::cout << "wrote " << out.string() << " (" << model.parameter_count() << " parameters) and "
                << loss.string() << '\n';
    } else if (*train_ufo_cmd) {
      const ExperimentConfig cfg = load_config(tu_config);
      const ModelGraph<float> model = load_model(tu_base);
      const bool style = tu_kind == "style";
      UfoAdapterSet<float> set = init_adapter_set(model, cfg.ufo.d, cfg.ufo.init_seed,
                                                  style ? AdapterKind::stylization : AdapterKind::consistency);
      const TrainConfig& tc = cfg.ufo.train;
      const DataSpec data = cfg.data_spec();
      const StepCallback progress = [&](const StepLog& s) { print_progress(s, tc.steps); };
      const auto log = style ? train_ufo_style(model, set, styled_scene_source(model.config(), data, cfg.ufo.style),
                                               tc, progress)
                             : train_ufo_consistency(model, set, static_scene_source(model.config(), data), tc,
                                                     progress);
      const std::string stem = "ufo_" + tu_kind;
      const fs::path out = tu_out.empty() ? cfg.paths.checkpoints / (stem + ".ufoa") : out_path(tu_out);
      const fs::path loss = tu_loss.empty() ? cfg.paths.reports / (stem + "_loss.csv") : out_path(tu_loss);
      ensure_parent(out);
      ensure_parent(loss);
      save_adapter(out, set);
      write_loss_csv(loss, log);
      std::cout << "wrote " << out.string() << " (" << set.parameter_count() << " adapter parameters, "
                << model.parameter_count() << " base parameters, recommended alpha " << set.recommended_alpha()
                << ")\n";
    } else if (*gen_cmd) {
      const ModelGraph<float> model = load_model(g_base);
      const Loaded ad = load_adapters(model, g_ufo, g_alpha);
      const NoiseSchedule sched = make_schedule(model.config().timesteps, model.config().schedule);
      const VideoTensor clip = sample<float>(model, g_condition, ad.applied, g_steps, g_seed, sched);
      const fs::path out = out_path(g_out);
      ensure_parent(out);
      write_vclip(out, clip, {{"condition", std::to_string(g_condition)}, {"seed", std::to_string(g_seed)}});
      std::cout << "wrote " << out.string() << '\n';
    } else if (*eval_cmd) {
      const auto files = list_clips(e_videos);
      std::vector<EvalItem> items;
      for (const auto& f : files) {
        ClipTags tags;
        EvalItem it;
        it.video = read_vclip(f, &tags);
        it.id = f.stem().string();
        if (tags.count("condition")) it.condition = std::stoi(tags["condition"]);
        if (tags.count("seed")) it.seed = std::stoull(tags["seed"]);
        if (tags.count("alpha")) it.alpha = std::stod(tags["alpha"]);
        items.push_back(std::move(it));
      }
      std::optional<std::vector<VideoTensor>> baseline;
      if (!e_baseline.empty()) {
        const auto base_files = list_clips(e_baseline);
        if (base_files.size() != files.size()) {
          throw ConfigError("baseline has " + std::to_string(base_files.size()) + " clips but videos has " +
                            std::to_string(files.size()));
        }
        baseline.emplace();
        for (std::size_t i = 0; i < files.size(); ++i) {
          if (base_files[i].filename() != files[i].filename()) {
            throw ConfigError("baseline clip '" + base_files[i].filename().string() + "' does not align with '" +
                              files[i].filename().string() + "'");
          }
          baseline->push_back(read_vclip(base_files[i]));
        }
      }
      const MetricsReport report = evaluate_set(items, baseline ? &*baseline : nullptr);
      const fs::path out = out_path(e_out);
      ensure_parent(out);
      io::write_file_atomic(out, to_csv(report));
      if (report.aggregate) {
        const auto& a = *report.aggregate;
        std::cout << "videos " << report.videos.size() << " flicker " << fmt(a.flicker) << " sc "
                  << fmt(a.subject_consistency) << " bc " << fmt(a.background_consistency) << " oft " << fmt(a.oft);
        if (report.excluded_count) std::cout << " ec " << *report.excluded_count;
        std::cout << '\n';
      } else {
        std::cout << "videos 0\n";
      }
    } else if (*sweep_cmd) {
      const ModelGraph<float> model = load_model(s_base);
      const UfoAdapterSet<float> set = load_adapter(s_ufo);
      model.check_compatible(set);
      const std::vector<int> conds = s_conditions.empty() ? all_conditions(model.config().num_conditions) : s_conditions;
      for (double a : s_alphas) {
        if (!(a >= 0.0)) throw ConfigError("alphas must be >= 0");
      }
      const auto grid = matched_grid(conds, s_seeds, s_videos);
      const fs::path out = out_path(s_out);
      fs::create_directories(out);
      const auto rows = run_sweep<float>(model, set, s_alphas, grid, s_steps, out, !s_no_clips);
      std::cout << sweep_summary_csv(rows);
    } else if (*inspect_cmd) {
      const auto bytes = io::read_file(i_file);
      const std::string magic(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(4, bytes.size())));
      nlohmann::ordered_json j;
      if (magic == "UFOA") {
        j = describe_adapter(deserialize_adapter(bytes));
      } else if (magic == "UFOM") {
        j = describe_model(deserialize_model(bytes));
      } else if (fs::path(i_file).extension() == ".vclip") {
        ClipTags tags;
        const VideoTensor v = read_vclip(i_file, &tags);
        j = {{"format", "vclip"}, {"frames", v.frames()}, {"height", v.height()}, {"width", v.width()},
             {"channels", v.channels()}, {"fps", v.fps()}, {"tags", tags}};
      } else {
        throw FormatError("unrecognized file type (magic '" + magic + "')", 0);
      }
      std::cout << j.dump(2) << '\n';
    } else if (*compose_cmd) {
      const ModelGraph<float> model = load_model(c_base);
      const Loaded ad = load_adapters(model, c_ufo, c_alpha);
      nlohmann::ordered_json j;
      j["fingerprint"] = model.fingerprint();
      j["base_parameters"] = model.parameter_count();
      nlohmann::ordered_json list = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < ad.sets.size(); ++i) {
        list.push_back({{"file", c_ufo[i]}, {"kind", to_string(ad.sets[i].kind())}, {"alpha", c_alpha[i]},
                        {"parameters", ad.sets[i].parameter_count()}});
      }
      j["adapters"] = list;
      std::cout << j.dump(2) << '\n';
    } else if (*transfer_cmd) {
      const UfoAdapterSet<float> set = load_adapter(t_ufo);
      const ModelGraph<float> target = load_model(t_target);
      const double alpha = t_alpha >= 0.0 ? t_alpha : set.recommended_alpha();
      const AppliedAdapter<float> applied = transfer(set, target, alpha);
      std::cout << "compatible: fingerprint " << target.fingerprint() << ", " << set.entries().size()
                << " adapted layers, alpha " << alpha << '\n';
      if (!t_out.empty()) {
        const NoiseSchedule sched = make_schedule(target.config().timesteps, target.config().schedule);
        const VideoTensor clip = sample<float>(target, t_condition, std::span(&applied, 1), t_steps, t_seed, sched);
        const fs::path out = out_path(t_out);
        ensure_parent(out);
        write_vclip(out, clip, {{"condition", std::to_string(t_condition)}, {"seed", std::to_string(t_seed)}});
        std::cout << "wrote " << out.string() << '\n';
      }
    }
    return kOk;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const FreezeViolation& e) {
    std::cerr << "training failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const TransferError& e) {
    std::cerr << "incompatible: " << e.what() << '\n';
    return kCompat;
  } catch (const FormatError& e) {
    std::cerr << "incompatible file: " << e.what() << '\n';
    return kCompat;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
