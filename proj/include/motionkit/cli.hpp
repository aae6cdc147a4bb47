#pragma once

// The motionkit command-line tool: one binary with subcommands covering the
// pipeline — synthesize or load motions, forward kinematics, retargeting to
// the humanoid, metric reports, trajectory correction, the residual-force
// schedule, and policy feature extraction.
//
// Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 numerical
// failure.  Results go to stdout (or --out files) as JSON with a fixed key
// order, so identical inputs produce byte-identical output; diagnostics go
// to stderr.

#include "motionkit/config.hpp"
#include "motionkit/control.hpp"
#include "motionkit/correct.hpp"
#include "motionkit/errors.hpp"
#include "motionkit/math.hpp"
#include "motionkit/metrics.hpp"
#include "motionkit/motion_io.hpp"
#include "motionkit/retarget.hpp"
#include "motionkit/skeleton.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace motionkit {
namespace cli {

inline void log_line(const std::string& message) { std::cerr << "motionkit: " << message << "\n"; }

/// Writes JSON to the given path, or stdout when the path is empty.
inline void emit(const OrderedJson& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << dump_json(j);
  } else {
    detail::write_file(out_path, dump_json(j));
  }
}

inline LoadOptions load_options(const PipelineConfig& config) {
  LoadOptions opts;
  opts.up_axis = config.up_axis;
  opts.scale = config.unit_scale;
  return opts;
}

inline LoadOptions parse_load_flags(const std::string& up, const std::string& units) {
  if (up != "z" && up != "y") throw std::invalid_argument("--up must be z or y");
  if (units != "m" && units != "cm") throw std::invalid_argument("--units must be m or cm");
  LoadOptions opts;
  opts.up_axis = up[0];
  opts.scale = units == "cm" ? 0.01 : 1.0;
  return opts;
}

/// `--config` must be known before option defaults are wired, so it is read
/// straight from argv; the parser still accepts the flag afterwards.
inline std::string prescan_config_path(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return "";
}

struct MetricInput {
  EvaluatedMotion evaluated;
  ContactPrediction embedded_contacts;  // contacts found inside the motion file
};

inline MetricInput load_for_metrics(const std::string& path, const LoadOptions& opts) {
  const MotionDocument doc = load_motion(path, opts);
  MetricInput input;
  if (doc.kind == MotionFileKind::kSkeleton) {
    input.evaluated = evaluate_for_metrics(doc.tree, doc.skeleton);
    input.embedded_contacts = doc.skeleton.contacts;
  } else {
    input.evaluated = evaluate_for_metrics(doc.humanoid);
  }
  return input;
}

inline int run(int argc, const char* const* argv) {
  const PipelineConfig config = effective_config(prescan_config_path(argc, argv));

  CLI::App app{"motion retargeting and correction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path_flag;  // consumed by the prescan; declared so the flag parses
  app.add_option("--config", config_path_flag, "configuration file (also: MOTIONKIT_CONFIG)");

  // --- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a deterministic test motion");
  std::string synth_kind = "walk";
  int synth_frames = 60;
  unsigned synth_seed = 42;
  double synth_fps = 30.0;
  std::string synth_out;
  synth->add_option("--kind", synth_kind, "walk, crawl, or static")->capture_default_str();
  synth->add_option("--frames", synth_frames, "frame count")->capture_default_str();
  synth->add_option("--seed", synth_seed, "random seed")->capture_default_str();
  synth->add_option("--fps", synth_fps, "frames per second")->capture_default_str();
  synth->add_option("--out", synth_out, "output skeleton motion JSON (default stdout)");
  synth->callback([&] {
    const SkeletonMotion motion = synthesize_test_motion(test_motion_kind_from_string(synth_kind),
                                                         synth_frames, synth_seed, synth_fps);
    emit(skeleton_to_json(canonical_tree(), motion), synth_out);
    log_line("synth kind=" + synth_kind + " frames=" + std::to_string(synth_frames) +
             " seed=" + std::to_string(synth_seed));
  });

  // --- fk ------------------------------------------------------------------
  auto* fk = app.add_subcommand("fk", "world joint positions of a motion file");
  std::string fk_in, fk_out;
  std::string fk_up(1, config.up_axis);
  std::string fk_units = config.unit_scale == 0.01 ? "cm" : "m";
  fk->add_option("--in", fk_in, "motion file (skeleton JSON, humanoid JSON, or BVH)")->required();
  fk->add_option("--out", fk_out, "output JSON (default stdout)");
  fk->add_option("--up", fk_up, "input up axis for BVH: z or y")->capture_default_str();
  fk->add_option("--units", fk_units, "input units for BVH: m or cm")->capture_default_str();
  fk->callback([&] {
    const MotionDocument doc = load_motion(fk_in, parse_load_flags(fk_up, fk_units));
    const bool skeleton = doc.kind == MotionFileKind::kSkeleton;
    const auto positions =
        skeleton ? motion_positions(doc.tree, doc.skeleton) : humanoid_fk(doc.humanoid);

    OrderedJson out;
    out["fps"] = skeleton ? doc.skeleton.fps : doc.humanoid.fps;
    out["joints"] = OrderedJson::array();
    for (const Joint& joint : doc.tree.joints()) out["joints"].push_back(joint.name);
    out["positions"] = OrderedJson::array();
    for (const auto& frame : positions) {
      OrderedJson row = OrderedJson::array();
      for (const Vec3& p : frame) row.push_back(detail::vec3_to_json(p));
      out["positions"].push_back(std::move(row));
    }
    emit(out, fk_out);
    log_line("fk frames=" + std::to_string(positions.size()));
  });

  // --- retarget ------------------------------------------------------------
  auto* retarget = app.add_subcommand("retarget", "skeleton motion to humanoid joint angles");
  std::string rt_in, rt_out;
  double rt_lambda = config.lambda;
  std::string rt_up(1, config.up_axis);
  std::string rt_units = config.unit_scale == 0.01 ? "cm" : "m";
  std::string rt_limits = config.joint_limits_path;
  retarget->add_option("--in", rt_in, "skeleton motion file (JSON or BVH)")->required();
  retarget->add_option("--out", rt_out, "output humanoid motion JSON (default stdout)");
  retarget->add_option("--lambda", rt_lambda, "flip-correction threshold, radians")
      ->capture_default_str();
  retarget->add_option("--up", rt_up, "input up axis for BVH: z or y")->capture_default_str();
  retarget->add_option("--units", rt_units, "input units for BVH: m or cm")
      ->capture_default_str();
  retarget->add_option("--limits", rt_limits, "joint limit table JSON (violations reported)");
  retarget->callback([&] {
    const MotionDocument doc = load_motion(rt_in, parse_load_flags(rt_up, rt_units));
    if (doc.kind != MotionFileKind::kSkeleton) {
      throw std::invalid_argument("retarget expects a skeleton motion as input");
    }
    RetargetStats stats;
    HumanoidMotion motion = retarget_sequence(doc.tree, doc.skeleton, rt_lambda, &stats);
    if (!rt_limits.empty()) {
      motion.limits = load_joint_limits(rt_limits);
      const auto violations = check_limits(motion);
      log_line("limit check violations=" + std::to_string(violations.size()));
    }
    emit(humanoid_to_json(motion), rt_out);
    log_line("retarget frames=" + std::to_string(motion.frame_count()) +
             " degenerate_fallbacks=" + std::to_string(stats.degenerate_fallbacks));
  });

  // --- metrics -------------------------------------------------------------
  auto* metrics = app.add_subcommand("metrics", "evaluation metrics for a motion");
  std::string m_pred, m_gt, m_contacts;
  double m_eps = config.eps_pen;
  double m_beta = config.beta;
  metrics->add_option("--pred", m_pred, "motion to evaluate")->required();
  metrics->add_option("--gt", m_gt, "reference motion for error metrics");
  metrics->add_option("--contacts", m_contacts, "contact file for the loss terms");
  metrics->add_option("--eps-pen", m_eps, "penetration threshold, meters")->capture_default_str();
  metrics->add_option("--beta", m_beta, "smoothness weight in the combined loss")
      ->capture_default_str();
  metrics->callback([&] {
    const LoadOptions opts = load_options(config);
    const MetricInput pred = load_for_metrics(m_pred, opts);
    std::optional<MetricInput> gt;
    if (!m_gt.empty()) gt = load_for_metrics(m_gt, opts);

    ContactPrediction contacts =
        m_contacts.empty() ? pred.embedded_contacts : load_contacts(m_contacts);
    MetricOptions options;
    options.eps_pen = m_eps;
    options.beta = m_beta;
    const MetricReport report =
        compute_metric_report(pred.evaluated, gt ? &gt->evaluated : nullptr,
                              contacts.empty() ? nullptr : &contacts, options);
    emit(metric_report_to_json(report), "");
    log_line("metrics frames=" + std::to_string(pred.evaluated.positions.size()) +
             (gt ? " with_reference=1" : " with_reference=0"));
  });

  // --- correct -------------------------------------------------------------
  auto* correct = app.add_subcommand("correct", "optimize a motion against the contact loss");
  std::string c_in, c_contacts, c_out, c_targets = "root+feet";
  double c_beta = config.beta;
  int c_steps = 200;
  bool c_refit = false;
  correct->add_option("--in", c_in, "skeleton motion JSON")->required();
  correct->add_option("--contacts", c_contacts, "contact file (defaults to contacts in --in)");
  correct->add_option("--beta", c_beta, "smoothness weight")->capture_default_str();
  correct->add_option("--steps", c_steps, "maximum descent steps")->capture_default_str();
  correct->add_option("--targets", c_targets, "optimized variables: root or root+feet")
      ->capture_default_str();
  correct->add_flag("--refit-ik", c_refit,
                    "emit a humanoid motion fitted to the corrected positions");
  correct->add_option("--out", c_out, "output motion JSON (default stdout)");
  correct->callback([&] {
    const MotionDocument doc = load_motion(c_in, load_options(config));
    if (doc.kind != MotionFileKind::kSkeleton) {
      throw std::invalid_argument("correct expects a skeleton motion as input");
    }
    const ContactPrediction contacts =
        c_contacts.empty() ? doc.skeleton.contacts : load_contacts(c_contacts);
    if (contacts.empty()) {
      throw std::invalid_argument("correct needs contacts: embed them or pass --contacts");
    }
    CorrectionConfig cfg;
    cfg.beta = c_beta;
    cfg.steps = c_steps;
    if (c_targets == "root") {
      cfg.targets = CorrectionTargets::kRootOnly;
    } else if (c_targets == "root+feet") {
      cfg.targets = CorrectionTargets::kRootAndFeet;
    } else {
      throw std::invalid_argument("--targets must be root or root+feet");
    }
    const CorrectionResult result = optimize(doc.tree, doc.skeleton, contacts, cfg);
    log_line("correct steps=" + std::to_string(result.trace.size() - 1) +
             " contact_loss_initial=" + std::to_string(result.initial_contact_loss) +
             " contact_loss_final=" + std::to_string(result.final_contact_loss));
    if (c_refit) {
      // Re-run IK on the corrected positions (root shifts and foot offsets
      // included) so the output pose sequence actually reaches them.
      const HumanoidMotion refit = retarget_sequence(doc.tree, result.motion);
      emit(humanoid_to_json(refit), c_out);
    } else {
      // Corrected roots survive in the skeleton format; per-foot offsets have
      // no quaternion representation and are dropped on save.
      SkeletonMotion out = result.motion;
      out.positions.clear();
      emit(skeleton_to_json(doc.tree, out), c_out);
    }
  });

  // --- schedule ------------------------------------------------------------
  auto* schedule = app.add_subcommand("schedule", "residual-force scale at an iteration");
  long s_i = 0;
  CurriculumParams s_params = config.curriculum;
  schedule->add_option("--i", s_i, "training iteration")->required();
  schedule->add_option("--s-init", s_params.s_init, "initial scale")->capture_default_str();
  schedule->add_option("--i-start", s_params.i_start, "decay start iteration")
      ->capture_default_str();
  schedule->add_option("--i-end", s_params.i_end, "decay end iteration")->capture_default_str();
  schedule->add_option("--rate", s_params.rate, "decay per iteration")->capture_default_str();
  schedule->callback([&] {
    std::cout << OrderedJson(curriculum_scale(s_i, s_params)).dump() << "\n";
  });

  // --- features ------------------------------------------------------------
  auto* features = app.add_subcommand("features", "policy state features at a frame");
  std::string f_motion;
  int f_t = 0;
  features->add_option("--motion", f_motion, "humanoid motion JSON")->required();
  features->add_option("--t", f_t, "frame index (needs t+2 in range)")->capture_default_str();
  features->callback([&] {
    const MotionDocument doc = load_motion(f_motion, load_options(config));
    if (doc.kind != MotionFileKind::kHumanoid) {
      throw std::invalid_argument("features expects a humanoid motion (run retarget first)");
    }
    const VecX f = features_at(doc.humanoid, f_t);
    OrderedJson out;
    out["t"] = f_t;
    out["size"] = f.size();
    out["features"] = OrderedJson::array();
    for (Eigen::Index i = 0; i < f.size(); ++i) out["features"].push_back(f[i]);
    emit(out, "");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const NumericalError& e) {
    log_line(std::string("numerical failure: ") + e.what());
    return 3;
  } catch (const ParseError& e) {
    log_line(std::string("input error: ") + e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    log_line(std::string("input error: ") + e.what());
    return 2;
  } catch (const std::exception& e) {
    log_line(std::string("error: ") + e.what());
    return 2;
  }
  return 0;
}

}  // namespace cli
}  // namespace motionkit
