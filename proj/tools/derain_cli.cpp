// derain: command line front end for rain-streak removal, synthetic rain
// generation, rain angle estimation and evaluation.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "derain/config.hpp"
#include "derain/direction.hpp"
#include "derain/io.hpp"
#include "derain/kv.hpp"
#include "derain/metrics.hpp"
#include "derain/rain_synth.hpp"
#include "derain/scenes.hpp"
#include "derain/solver.hpp"

namespace fs = std::filesystem;
using namespace derain;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Where results go: an image sequence directory per layer, or one raw file.
struct OutputFormat {
  bool raw = false;
  io::ImageFormat image = io::ImageFormat::pgm;
};

OutputFormat parse_output_format(const std::string& s) {
  if (s == "raw") return {true, io::ImageFormat::pgm};
  return {false, io::parse_image_format(s)};
}

std::string format_name(const OutputFormat& f) {
  return f.raw ? "raw" : f.image == io::ImageFormat::png ? "png" : "pgm";
}

/// Writes layer `name` under `dir` and returns the path it can be read back
/// from, relative to `dir`.
std::string write_layer(const VideoTensor& x, const fs::path& dir, const std::string& name,
                        const OutputFormat& fmt) {
  if (fmt.raw) {
    fs::create_directories(dir);
    const fs::path p = dir / (name + ".rtv");
    io::write_tensor(x, p, io::Precision::float64);
    return p.filename().string();
  }
  io::write_sequence(x, dir / name, fmt.image);
  return name;
}

Shape parse_size(const std::string& s) {
  Shape shape;
  char x1 = 0, x2 = 0;
  std::istringstream is(s);
  if (!(is >> shape.height >> x1 >> shape.width >> x2 >> shape.frames) || x1 != 'x' || x2 != 'x') {
    throw UsageError("size must look like HxWxT, got '" + s + "'");
  }
  return shape;
}

std::string fmt_metric(double v, int precision = 3) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

// --------------------------------------------------------------------------
// derain

struct DerainArgs {
  std::string input, out, config_file, theta, alpha, beta, preset, format = "pgm";
  std::optional<double> tol;
  std::optional<int> max_iters;
  bool quiet = false;
};

int run_derain(const DerainArgs& a) {
  SolverConfig config;
  config.theta = std::nullopt;  // auto unless told otherwise
  std::string input = a.input;
  std::string format = a.format;
  if (!a.config_file.empty()) {
    const auto kv = KeyValueFile::load(a.config_file);
    for (const auto& key : kv.keys()) {
      if (key == "input") {
        if (input.empty()) input = kv.get(key);
      } else if (key == "format") {
        format = kv.get(key);
      } else if (key != "command" && key.rfind("result.", 0) != 0 && !is_solver_key(key)) {
        throw UsageError(a.config_file + ": unknown key '" + key + "'");
      }
    }
    apply_solver_settings(config, kv);
  }
  if (!a.preset.empty()) config.alpha = alpha_preset(parse_intensity(a.preset));
  if (!a.alpha.empty()) config.alpha = parse_fixed_list<5>(a.alpha, "--alpha");
  if (!a.beta.empty()) config.beta = parse_fixed_list<6>(a.beta, "--beta");
  if (!a.theta.empty()) config.theta = parse_theta(a.theta);
  if (a.tol) config.tol = *a.tol;
  if (a.max_iters) config.max_outer = *a.max_iters;
  config.validate();
  if (input.empty()) throw UsageError("--input is required");
  const OutputFormat fmt = parse_output_format(format);

  const VideoTensor observed = io::read_video(input);
  const bool auto_theta = !config.theta.has_value();
  if (auto_theta) {
    config.theta = estimate_angle(observed);
    if (!a.quiet) {
      std::cerr << "estimated rain angle " << fmt_metric(config.theta->degrees(), 2)
                << " deg (confidence " << fmt_metric(config.theta->confidence()) << ")\n";
    }
  }

  const auto log = [&](const IterationRecord& r) {
    if (a.quiet) return;
    std::cerr << "iter " << std::setw(3) << r.iteration << "  objective " << std::scientific
              << std::setprecision(4) << r.objective << "  change " << r.relative_change
              << std::defaultfloat << "  " << fmt_metric(r.seconds, 3) << "s\n";
  };
  const DecompositionResult result = decompose(observed, config, log);

  const fs::path out(a.out);
  fs::create_directories(out);
  const std::string bg = write_layer(result.background, out, "background", fmt);
  const std::string rain = write_layer(result.rain, out, "rain", fmt);

  std::ofstream csv(out / "diagnostics.csv");
  csv << "iteration,res_D,res_S,res_X,res_Y,res_T,res_L,objective,relative_change,seconds\n";
  csv.precision(10);
  for (const auto& r : result.diagnostics) {
    csv << r.iteration;
    for (double v : r.residuals) csv << "," << v;
    csv << "," << r.objective << "," << r.relative_change << "," << r.seconds << "\n";
  }

  KeyValueFile manifest;
  manifest.set("command", "derain");
  manifest.set("input", fs::absolute(input).string());
  manifest.set("format", format_name(fmt));
  SolverConfig recorded = config;
  if (auto_theta) recorded.theta = std::nullopt;
  write_solver_settings(recorded, manifest);
  manifest.set("result.theta", result.angle.degrees());
  manifest.set("result.theta_confidence", result.angle.confidence());
  manifest.set("result.theta_estimated", auto_theta ? "true" : "false");
  manifest.set("result.iterations", result.iterations_run);
  manifest.set("result.converged", result.converged ? "true" : "false");
  manifest.set("result.background", bg);
  manifest.set("result.rain", rain);
  manifest.save((out / "manifest.txt").string());

  if (!a.quiet) {
    std::cout << "iterations = " << result.iterations_run << "\nconverged = "
              << (result.converged ? "true" : "false") << "\ntheta = " << result.angle.degrees()
              << "\nbackground = " << (out / bg).string() << "\nrain = " << (out / rain).string()
              << "\n";
  }
  return kOk;
}

// --------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string input, out, config_file, density = "heavy", size = "64x64x20", format = "raw";
  std::optional<double> angle;
  std::uint64_t seed = 0;
  std::uint64_t scene_seed = 0;
};

int run_synth(const SynthArgs& a) {
  RainSynthConfig rain = rain_preset(parse_intensity(a.density), a.angle.value_or(45.0), a.seed);
  if (!a.config_file.empty()) rain.apply(KeyValueFile::load(a.config_file));
  if (a.angle) rain.angle_mean = *a.angle;
  rain.validate();
  const OutputFormat fmt = parse_output_format(a.format);

  KeyValueFile manifest;
  manifest.set("command", "synth");
  VideoTensor clean;
  if (!a.input.empty()) {
    clean = io::read_video(a.input);
    manifest.set("input", fs::absolute(a.input).string());
  } else {
    const Shape shape = parse_size(a.size);
    clean = textured_scene(shape, a.scene_seed);
    manifest.set("scene_size", a.size);
    manifest.set("scene_seed", a.scene_seed);
  }
  const SynthResult s = synthesize(clean, rain);

  const fs::path out(a.out);
  fs::create_directories(out);
  manifest.set("format", format_name(fmt));
  manifest.set("density_preset", a.density);
  const KeyValueFile rain_kv = rain.to_kv();
  for (const auto& key : rain_kv.keys()) manifest.set("rain." + key, rain_kv.get(key));
  manifest.set("result.observed", write_layer(s.observed, out, "observed", fmt));
  manifest.set("result.rain", write_layer(s.rain, out, "rain", fmt));
  manifest.set("result.background", write_layer(clean, out, "background", fmt));
  manifest.set("result.streaks", s.streaks.size());
  manifest.save((out / "manifest.txt").string());
  std::cout << "observed = " << (out / manifest.get("result.observed")).string()
            << "\nrain = " << (out / manifest.get("result.rain")).string()
            << "\nbackground = " << (out / manifest.get("result.background")).string()
            << "\nstreaks = " << s.streaks.size() << "\n";
  return kOk;
}

// --------------------------------------------------------------------------
// estimate-angle

int run_estimate(const std::string& input) {
  const RainAngle a = estimate_angle(io::read_video(input));
  std::cout << "theta = " << fmt_metric(a.degrees(), 2) << "\nconfidence = "
            << fmt_metric(a.confidence(), 4) << "\n";
  return kOk;
}

// --------------------------------------------------------------------------
// eval

void print_table_header(std::ostream& os, const std::string& first) {
  os << std::left << std::setw(16) << first << std::right << std::setw(10) << "PSNR(B)"
     << std::setw(10) << "SSIM(B)" << std::setw(10) << "SSIM(R)" << std::setw(10) << "RES(B)"
     << "\n";
}

void print_table_row(std::ostream& os, const std::string& label, const MetricsReport& m) {
  os << std::left << std::setw(16) << label << std::right << std::setw(10) << fmt_metric(m.psnr_b)
     << std::setw(10) << fmt_metric(m.ssim_b) << std::setw(10) << fmt_metric(m.ssim_r)
     << std::setw(10) << fmt_metric(m.res_b) << "\n";
}

struct EvalArgs {
  std::string estimate, truth, rain_estimate, rain_truth, csv;
};

int run_eval(const EvalArgs& a) {
  if (a.rain_estimate.empty() != a.rain_truth.empty()) {
    throw UsageError("--rain-estimate and --rain-truth must be given together");
  }
  const VideoTensor est = io::read_video(a.estimate), truth = io::read_video(a.truth);
  if (est.shape() != truth.shape()) {
    throw DataError("estimate is " + to_string(est.shape()) + " but truth is " +
                    to_string(truth.shape()));
  }
  MetricsReport m;
  if (!a.rain_estimate.empty()) {
    const VideoTensor re = io::read_video(a.rain_estimate), rt = io::read_video(a.rain_truth);
    if (re.shape() != rt.shape()) throw DataError("rain layers differ in shape");
    m = evaluate(est, truth, &re, &rt);
  } else {
    m = evaluate(est, truth);
  }
  print_table_header(std::cout, "");
  print_table_row(std::cout, "estimate", m);
  std::cout << "\npsnr_b = " << fmt_metric(m.psnr_b, 6) << "\nssim_b = " << fmt_metric(m.ssim_b, 6)
            << "\nssim_r = " << fmt_metric(m.ssim_r, 6) << "\nres_b = " << fmt_metric(m.res_b, 6)
            << "\n";
  if (!a.csv.empty()) {
    std::ofstream csv(a.csv);
    if (!csv) throw DataError("cannot write '" + a.csv + "'");
    csv << "psnr_b,ssim_b,ssim_r,res_b\n"
        << fmt_metric(m.psnr_b, 6) << "," << fmt_metric(m.ssim_b, 6) << ","
        << fmt_metric(m.ssim_r, 6) << "," << fmt_metric(m.res_b, 6) << "\n";
  }
  return kOk;
}

// --------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::vector<std::string> inputs;
  int scenes = 0;
  std::string size = "64x64x20";
  int seeds = 1;
  std::optional<int> max_iters;
  std::string theta = "true";
  std::string csv;
};

int run_bench(const BenchArgs& a) {
  std::vector<std::pair<std::string, VideoTensor>> clips;
  for (const auto& in : a.inputs) clips.emplace_back(in, io::read_video(in));
  for (int s = 0; s < a.scenes; ++s) {
    clips.emplace_back("scene" + std::to_string(s),
                       textured_scene(parse_size(a.size), static_cast<std::uint64_t>(s)));
  }
  if (clips.empty()) throw UsageError("bench needs --input clips or --scenes N");
  if (a.seeds < 1) throw UsageError("--seeds must be >= 1");

  std::ofstream csv;
  if (!a.csv.empty()) {
    csv.open(a.csv);
    if (!csv) throw DataError("cannot write '" + a.csv + "'");
    csv << "clip,rain,angle,psnr_rainy,ssim_rainy,res_rainy,psnr_b,ssim_b,ssim_r,res_b\n";
  }
  double total_delta = 0.0;
  int cells = 0;
  for (const auto& [name, clean] : clips) {
    std::cout << "== " << name << " (" << to_string(clean.shape()) << ")\n";
    std::cout << std::left << std::setw(14) << "cell" << std::right << std::setw(11)
              << "rainy PSNR" << std::setw(11) << "rainy SSIM" << std::setw(11) << "rainy RES"
              << std::setw(10) << "PSNR(B)" << std::setw(10) << "SSIM(B)" << std::setw(10)
              << "SSIM(R)" << std::setw(10) << "RES(B)" << std::setw(9) << "dPSNR" << "\n";
    for (const auto kind : {RainIntensity::heavy, RainIntensity::light}) {
      for (const double angle : {45.0, 60.0}) {
        MetricsReport rainy{}, derained{};
        for (int seed = 0; seed < a.seeds; ++seed) {
          const SynthResult s =
              synthesize(clean, rain_preset(kind, angle, static_cast<std::uint64_t>(seed)));
          SolverConfig config;
          config.alpha = alpha_preset(kind);
          config.theta = a.theta == "auto" ? std::nullopt : std::optional<RainAngle>(RainAngle(angle));
          if (a.max_iters) config.max_outer = *a.max_iters;
          const DecompositionResult r = decompose(s.observed, config);
          const MetricsReport in = evaluate(s.observed, clean);
          const MetricsReport outm = evaluate(r.background, clean, &r.rain, &s.rain);
          rainy.psnr_b += in.psnr_b / a.seeds;
          rainy.ssim_b += in.ssim_b / a.seeds;
          rainy.res_b += in.res_b / a.seeds;
          derained.psnr_b += outm.psnr_b / a.seeds;
          derained.ssim_b += outm.ssim_b / a.seeds;
          derained.ssim_r += outm.ssim_r / a.seeds;
          derained.res_b += outm.res_b / a.seeds;
        }
        const std::string cell = std::string(to_string(kind)) + " " + fmt_metric(angle, 0) + "deg";
        const double delta = derained.psnr_b - rainy.psnr_b;
        total_delta += delta;
        ++cells;
        std::cout << std::left << std::setw(14) << cell << std::right << std::setw(11)
                  << fmt_metric(rainy.psnr_b) << std::setw(11) << fmt_metric(rainy.ssim_b)
                  << std::setw(11) << fmt_metric(rainy.res_b) << std::setw(10)
                  << fmt_metric(derained.psnr_b) << std::setw(10) << fmt_metric(derained.ssim_b)
                  << std::setw(10) << fmt_metric(derained.ssim_r) << std::setw(10)
                  << fmt_metric(derained.res_b) << std::setw(9) << fmt_metric(delta, 2) << "\n";
        if (csv) {
          csv << name << "," << to_string(kind) << "," << angle << "," << rainy.psnr_b << ","
              << rainy.ssim_b << "," << rainy.res_b << "," << derained.psnr_b << ","
              << derained.ssim_b << "," << derained.ssim_r << "," << derained.res_b << "\n";
        }
      }
    }
  }
  std::cout << "\nmean PSNR improvement = " << fmt_metric(total_delta / cells, 3) << " dB over "
            << cells << " cells\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rain streak removal for grayscale video"};
  app.require_subcommand(1);

  DerainArgs derain_args;
  auto* derain_cmd = app.add_subcommand("derain", "Separate a rainy video into background and rain");
  derain_cmd->add_option("--input", derain_args.input, "Image sequence (dir, glob or file) or .rtv tensor");
  derain_cmd->add_option("--out", derain_args.out, "Output directory")->required();
  derain_cmd->add_option("--config", derain_args.config_file, "key = value settings file (a manifest works too)");
  derain_cmd->add_option("--theta", derain_args.theta, "Rain angle in degrees from vertical, or 'auto'");
  derain_cmd->add_option("--alpha", derain_args.alpha, "Five weights a1,...,a5");
  derain_cmd->add_option("--beta", derain_args.beta, "Six penalties b1,...,b6");
  derain_cmd->add_option("--preset", derain_args.preset, "Weight preset: light or heavy");
  derain_cmd->add_option("--tol", derain_args.tol, "Relative change tolerance on R");
  derain_cmd->add_option("--max-iters", derain_args.max_iters, "Outer iteration cap");
  derain_cmd->add_option("--format", derain_args.format, "Output format: pgm, png or raw");
  derain_cmd->add_flag("--quiet", derain_args.quiet, "No progress log");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Add synthetic rain streaks to a clean video");
  synth_cmd->add_option("--input", synth_args.input, "Clean video; omit to render a procedural scene");
  synth_cmd->add_option("--out", synth_args.out, "Output directory")->required();
  synth_cmd->add_option("--angle", synth_args.angle, "Mean streak angle in degrees from vertical");
  synth_cmd->add_option("--density", synth_args.density, "light or heavy");
  synth_cmd->add_option("--seed", synth_args.seed, "Rain RNG seed");
  synth_cmd->add_option("--config", synth_args.config_file, "Rain settings file (key = value)");
  synth_cmd->add_option("--size", synth_args.size, "Procedural scene size HxWxT");
  synth_cmd->add_option("--scene-seed", synth_args.scene_seed, "Procedural scene seed");
  synth_cmd->add_option("--format", synth_args.format, "Output format: raw, pgm or png");

  std::string estimate_input;
  auto* est_cmd = app.add_subcommand("estimate-angle", "Estimate the dominant rain angle");
  est_cmd->add_option("--input", estimate_input, "Rainy video")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score a derained video against ground truth");
  eval_cmd->add_option("--estimate", eval_args.estimate, "Estimated background")->required();
  eval_cmd->add_option("--truth", eval_args.truth, "True background")->required();
  eval_cmd->add_option("--rain-estimate", eval_args.rain_estimate, "Estimated rain layer");
  eval_cmd->add_option("--rain-truth", eval_args.rain_truth, "True rain layer");
  eval_cmd->add_option("--csv", eval_args.csv, "Also write the row as CSV");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Run the {45,60} deg x {light,heavy} grid");
  bench_cmd->add_option("--input", bench_args.inputs, "Clean clips");
  bench_cmd->add_option("--scenes", bench_args.scenes, "Number of procedural clips to add");
  bench_cmd->add_option("--size", bench_args.size, "Procedural clip size HxWxT");
  bench_cmd->add_option("--seeds", bench_args.seeds, "Rain seeds per cell");
  bench_cmd->add_option("--max-iters", bench_args.max_iters, "Outer iteration cap");
  bench_cmd->add_option("--theta", bench_args.theta, "'auto' to estimate the angle per run");
  bench_cmd->add_option("--csv", bench_args.csv, "Write all rows as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*derain_cmd) return run_derain(derain_args);
    if (*synth_cmd) return run_synth(synth_args);
    if (*est_cmd) return run_estimate(estimate_input);
    if (*eval_cmd) return run_eval(eval_args);
    if (*bench_cmd) return run_bench(bench_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
