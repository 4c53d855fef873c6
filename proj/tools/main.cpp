#include "gnssfgo/epoch_io.hpp"
#include "gnssfgo/error.hpp"
#include "gnssfgo/evaluate.hpp"
#include "gnssfgo/pipeline.hpp"
#include "gnssfgo/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace gnssfgo;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> split_numbers(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::logic_error&) {
      throw UsageError(std::string("bad number '") + cell + "' in " + what);
    }
  }
  if (v.size() != expected) {
    throw UsageError(std::string(what) + " expects " + std::to_string(expected) + " comma-separated values");
  }
  return v;
}

Vec3 parse_vec3(const std::string& text, const char* what) {
  const auto v = split_numbers(text, 3, what);
  return Vec3(v[0], v[1], v[2]);
}

WeightModel parse_weights(const std::string& text) {
  const auto v = split_numbers(text, 5, "--weights");
  WeightModel w;
  w.el_a = v[0];
  w.el_b = v[1];
  w.snr_S0_dbhz = v[2];
  w.snr_k = v[3];
  w.sigma0_m = v[4];
  w.validate();
  return w;
}

// Settings shared by the estimator subcommands. Each one may come from a
// flag, the JSON config file, or the built-in default, in that order.
struct Settings {
  std::string config;
  std::string weights;
  double doppler_sign = -1.0;
  double ratio_threshold = lambda::kDefaultRatioThreshold;
  int window = 0;
  std::string robust = "none";
  std::string enu_origin;
  std::string truth;
  std::string out;

  std::map<std::string, CLI::Option*> opts;
};

void add_common(CLI::App* sub, Settings& s) {
  s.opts["config"] = sub->add_option("--config", s.config, "JSON file with default settings");
  s.opts["weights"] = sub->add_option("--weights", s.weights, "code weight model a,b,S0,k,sigma0");
  s.opts["doppler_sign"] = sub->add_option("--doppler-sign", s.doppler_sign, "range rate = sign * lambda * doppler");
  s.opts["ratio_threshold"] = sub->add_option("--ratio-threshold", s.ratio_threshold, "LAMBDA ratio test threshold");
  s.opts["window"] = sub->add_option("--window", s.window, "FGO sliding window length (0 = batch)");
  s.opts["robust"] = sub->add_option("--robust", s.robust, "FGO kernel: none|huber");
  s.opts["enu_origin"] = sub->add_option("--enu-origin", s.enu_origin, "ECEF x,y,z of the ENU origin");
  sub->add_option("--truth", s.truth, "ground-truth file for errors");
  sub->add_option("--out", s.out, "output file (default stdout)");
}

PipelineOptions resolve(Settings& s) {
  if (!s.config.empty()) {
    std::ifstream in(s.config);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + s.config);
    nlohmann::json cfg;
    try {
      cfg = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, s.config + ": " + e.what());
    }
    auto from_config = [&](const char* key, auto& field) {
      if (cfg.contains(key) && s.opts.at(key)->count() == 0) {
        field = cfg.at(key).get<std::remove_reference_t<decltype(field)>>();
      }
    };
    try {
      from_config("weights", s.weights);
      from_config("doppler_sign", s.doppler_sign);
      from_config("ratio_threshold", s.ratio_threshold);
      from_config("window", s.window);
      from_config("robust", s.robust);
      from_config("enu_origin", s.enu_origin);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, s.config + ": " + e.what());
    }
  }
  PipelineOptions p;
  if (!s.weights.empty()) p.weights.code = parse_weights(s.weights);
  if (s.doppler_sign != 1.0 && s.doppler_sign != -1.0) throw UsageError("--doppler-sign must be 1 or -1");
  p.doppler_sign = s.doppler_sign;
  if (!(s.ratio_threshold >= 1.0)) throw UsageError("--ratio-threshold must be >= 1");
  p.ratio_threshold = s.ratio_threshold;
  if (s.window < 0) throw UsageError("--window must be >= 0");
  p.window = s.window;
  if (s.robust == "huber") {
    p.robust = RobustKernel::Huber;
  } else if (s.robust != "none") {
    throw UsageError("--robust must be none or huber");
  }
  return p;
}

template <typename F>
void with_output(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write(out);
  if (!out.flush()) throw Error(ErrorCode::IoError, "write failed: " + path);
}

EnuFrame output_frame(const Settings& s, const std::optional<GroundTruth>& truth,
                      const std::vector<SolutionRecord>& records) {
  if (!s.enu_origin.empty()) return EnuFrame(parse_vec3(s.enu_origin, "--enu-origin"));
  if (truth) return truth_frame(*truth);
  if (!records.empty()) return EnuFrame(records.front().pos_m);
  return EnuFrame(Vec3(wgs84::kSemiMajorAxis, 0.0, 0.0));
}

struct RunArgs {
  std::string input;
  std::string base;
  std::string base_pos;
};

std::optional<Vec3> resolve_base_pos(const RunArgs& a, const EpochFile& base) {
  if (!a.base_pos.empty()) return parse_vec3(a.base_pos, "--base-pos");
  return base.header.station_pos_ecef;
}

int run_estimator(Method method, const RunArgs& args, Settings& s) {
  const PipelineOptions opt = resolve(s);
  const EpochFile rover = read_epoch_file(args.input);
  std::vector<Epoch> rover_epochs;
  for (const auto& ep : rover.epochs) rover_epochs.push_back(validate_epoch(ep));
  std::vector<Epoch> base_epochs;
  std::optional<Vec3> base_pos;
  if (is_rtk(method)) {
    const EpochFile base = read_epoch_file(args.base);
    for (const auto& ep : base.epochs) base_epochs.push_back(validate_epoch(ep));
    base_pos = resolve_base_pos(args, base);
    if (!base_pos) throw UsageError("base position unknown: pass --base-pos or add station_pos_ecef to the base file");
  }
  std::vector<SolutionRecord> records = run_method(method, rover_epochs, base_epochs, base_pos, opt);
  std::optional<GroundTruth> truth;
  if (!s.truth.empty()) {
    truth = read_truth(s.truth);
    annotate_errors(records, *truth);
  }
  const EnuFrame frame = output_frame(s, truth, records);
  with_output(s.out, [&](std::ostream& os) { write_solution_stream(os, records, frame); });
  return 0;
}

ScenarioConfig preset_config(const std::string& preset, std::uint64_t seed) {
  if (preset == "static-rtk") return static_rtk_preset(seed);
  if (preset == "zero-noise") return without_noise(static_rtk_preset(seed));
  return urban_canyon_preset(parse_severity(preset), seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GNSS positioning by factor graph optimization, with WLS/EKF baselines and RTK"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic scenario");
  std::string preset = "high";
  std::uint64_t seed = 1;
  int epochs = 0;
  bool rtk = false;
  std::string sim_out, sim_base, sim_truth;
  sim->add_option("--preset", preset, "high|mid|low|static-rtk|zero-noise")->capture_default_str();
  sim->add_option("--seed", seed, "RNG seed")->capture_default_str();
  sim->add_option("--epochs", epochs, "number of epochs (default: preset)");
  sim->add_flag("--rtk", rtk, "also simulate a base station 50 m away");
  sim->add_option("--out", sim_out, "rover epoch file")->required();
  sim->add_option("--base-out", sim_base, "base epoch file");
  sim->add_option("--truth-out", sim_truth, "ground-truth file");

  // estimators
  struct Sub {
    Method method;
    const char* name;
    const char* help;
  };
  const Sub subs[] = {{Method::Wls, "spp-wls", "weighted least squares per epoch"},
                      {Method::Ekf, "spp-ekf", "pseudorange/Doppler extended Kalman filter"},
                      {Method::Fgo, "spp-fgo", "pseudorange/Doppler factor graph"},
                      {Method::RtkEkf, "rtk-ekf", "double-difference Kalman filter with LAMBDA"},
                      {Method::RtkFgo, "rtk-fgo", "double-difference factor graph with LAMBDA"}};
  std::vector<Settings> settings(std::size(subs) + 1);
  std::vector<RunArgs> run_args(std::size(subs) + 1);
  std::vector<CLI::App*> est;
  for (std::size_t i = 0; i < std::size(subs); ++i) {
    auto* sub = app.add_subcommand(subs[i].name, subs[i].help);
    sub->add_option("--input", run_args[i].input, "rover epoch file")->required()->check(CLI::ExistingFile);
    if (is_rtk(subs[i].method)) {
      sub->add_option("--base", run_args[i].base, "base epoch file")->required()->check(CLI::ExistingFile);
      sub->add_option("--base-pos", run_args[i].base_pos, "base ECEF x,y,z");
    }
    add_common(sub, settings[i]);
    est.push_back(sub);
  }

  // evaluate
  auto* evl = app.add_subcommand("evaluate", "metrics of a solution CSV against ground truth");
  std::string eval_solution, eval_truth, eval_out, eval_origin;
  evl->add_option("--solution", eval_solution, "solution CSV")->required()->check(CLI::ExistingFile);
  evl->add_option("--truth", eval_truth, "ground-truth file")->required()->check(CLI::ExistingFile);
  evl->add_option("--enu-origin", eval_origin, "ECEF x,y,z the CSV was written in (default: truth)");
  evl->add_option("--out", eval_out, "metrics CSV (default stdout)");

  // compare
  auto* cmp = app.add_subcommand("compare", "run several methods and tabulate their metrics");
  std::string methods = "wls,ekf,fgo";
  RunArgs& cmp_args = run_args.back();
  Settings& cmp_settings = settings.back();
  cmp->add_option("--input", cmp_args.input, "rover epoch file")->required()->check(CLI::ExistingFile);
  cmp->add_option("--base", cmp_args.base, "base epoch file (RTK methods)")->check(CLI::ExistingFile);
  cmp->add_option("--base-pos", cmp_args.base_pos, "base ECEF x,y,z");
  cmp->add_option("--methods", methods, "comma-separated: wls,ekf,fgo,rtk-ekf,rtk-fgo")->capture_default_str();
  add_common(cmp, cmp_settings);
  cmp_settings.opts.erase("enu_origin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      ScenarioConfig cfg = preset_config(preset, seed);
      if (rtk && !cfg.base_station_enu) cfg.base_station_enu = Vec3(40.0, 30.0, 0.0);
      if (epochs > 0) cfg.duration_s = epochs / cfg.rate_hz;
      const Scenario sc = generate(cfg);
      EpochFileHeader rover_header;
      write_epochs(sim_out, sc.rover, rover_header);
      if (!sim_base.empty()) {
        if (sc.base.empty()) throw UsageError("--base-out needs an RTK scenario (--rtk or --preset static-rtk)");
        EpochFileHeader h;
        h.station_pos_ecef = sc.truth.base_pos_m;
        write_epochs(sim_base, sc.base, h);
      }
      if (!sim_truth.empty()) write_truth(sim_truth, sc.truth);
      return 0;
    }
    for (std::size_t i = 0; i < est.size(); ++i) {
      if (est[i]->parsed()) return run_estimator(subs[i].method, run_args[i], settings[i]);
    }
    if (evl->parsed()) {
      const GroundTruth truth = read_truth(eval_truth);
      const EnuFrame frame = eval_origin.empty() ? truth_frame(truth) : EnuFrame(parse_vec3(eval_origin, "--enu-origin"));
      const auto records = read_solutions(eval_solution, frame);
      const MetricsSummary m = evaluate(records, truth);
      with_output(eval_out, [&](std::ostream& os) { write_metrics_table(os, {{"solution", m}}); });
      return 0;
    }
    if (cmp->parsed()) {
      if (cmp_settings.truth.empty()) throw UsageError("compare needs --truth");
      const PipelineOptions opt = resolve(cmp_settings);
      std::vector<Epoch> rover;
      for (const auto& ep : read_epoch_file(cmp_args.input).epochs) rover.push_back(validate_epoch(ep));
      std::vector<Epoch> base;
      std::optional<Vec3> base_pos;
      if (!cmp_args.base.empty()) {
        const EpochFile bf = read_epoch_file(cmp_args.base);
        for (const auto& ep : bf.epochs) base.push_back(validate_epoch(ep));
        base_pos = resolve_base_pos(cmp_args, bf);
      }
      const GroundTruth truth = read_truth(cmp_settings.truth);
      std::vector<std::pair<std::string, MetricsSummary>> rows;
      std::stringstream ss(methods);
      std::string name;
      while (std::getline(ss, name, ',')) {
        Method m;
        try {
          m = parse_method(name);
        } catch (const Error& e) {
          throw UsageError(e.what());
        }
        if (is_rtk(m) && (base.empty() || !base_pos)) throw UsageError(name + " needs --base");
        rows.emplace_back(name, evaluate(run_method(m, rover, base, base_pos, opt), truth));
      }
      with_output(cmp_settings.out, [&](std::ostream& os) { write_metrics_table(os, rows); });
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
