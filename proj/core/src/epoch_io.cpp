#include "gnssfgo/epoch_io.hpp"

#include "gnssfgo/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

namespace gnssfgo {

using nlohmann::json;

namespace {

const std::set<std::string> kObsFields{
    "sat",          "pseudorange_m",   "doppler_hz",          "carrier_phase_cycles",
    "snr_dbhz",     "sat_pos_m",       "sat_vel_mps",         "sat_clock_bias_m",
    "sat_clock_drift_mps", "iono_corr_m", "tropo_corr_m",     "phase_corr_m",
    "nlos_flag"};
const std::set<std::string> kEpochFields{"t", "observations"};
const std::set<std::string> kEpochHeaderFields{"schema_version", "kind", "station_pos_ecef"};
const std::set<std::string> kTruthHeaderFields{"schema_version",    "kind",
                                               "origin_ecef",       "base_pos_ecef",
                                               "rover_ambiguities", "base_ambiguities"};
const std::set<std::string> kTruthFields{"t",          "pos_m", "vel_mps", "clock_bias_m",
                                         "clock_drift_mps", "nlos"};

[[noreturn]] void parse_fail(std::size_t line, std::size_t column, const std::string& reason) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " +
                                         std::to_string(column) + ": " + reason);
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw json::other_error::create(501, "expected a 3-vector", &j);
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

void check_fields(const json& obj, const std::set<std::string>& known, const char* where,
                  std::size_t line, const WarningSink& warn) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) {
      if (warn) warn(std::string("ignoring unknown ") + where + " field '" + key + "' (line " +
                     std::to_string(line) + ")");
    }
  }
}

// Reads non-empty lines, parsing each as JSON. The callback receives the
// object and its 1-based line number.
template <typename F>
void for_each_record(std::istream& in, F&& f) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      std::string what = e.what();
      const auto pos = what.find("syntax error");
      parse_fail(line, e.byte, pos == std::string::npos ? what : what.substr(pos));
    }
    if (!obj.is_object()) parse_fail(line, 1, "expected a JSON object");
    try {
      f(obj, line);
    } catch (const json::exception& e) {
      parse_fail(line, 1, e.what());
    }
  }
}

int check_header(const json& obj, std::size_t line, const char* kind) {
  if (!obj.contains("schema_version")) parse_fail(line, 1, "missing schema_version header");
  const int version = obj.at("schema_version").get<int>();
  if (version != kSchemaVersion) {
    throw Error(ErrorCode::SchemaVersionMismatch, "schema_version " + std::to_string(version) +
                                                      ", expected " + std::to_string(kSchemaVersion));
  }
  if (obj.contains("kind") && obj.at("kind").get<std::string>() != kind) {
    parse_fail(line, 1, "file kind '" + obj.at("kind").get<std::string>() + "', expected '" + kind + "'");
  }
  return version;
}

SatObservation obs_from_json(const json& j, std::size_t line, const WarningSink& warn) {
  check_fields(j, kObsFields, "observation", line, warn);
  SatObservation o;
  o.sat = SatId::parse(j.at("sat").get<std::string>());
  o.pseudorange_m = j.at("pseudorange_m").get<double>();
  if (j.contains("doppler_hz") && !j.at("doppler_hz").is_null()) o.doppler_hz = j.at("doppler_hz").get<double>();
  if (j.contains("carrier_phase_cycles") && !j.at("carrier_phase_cycles").is_null()) {
    o.carrier_phase_cycles = j.at("carrier_phase_cycles").get<double>();
  }
  o.snr_dbhz = j.at("snr_dbhz").get<double>();
  o.sat_pos_m = json_vec(j.at("sat_pos_m"));
  o.sat_vel_mps = json_vec(j.at("sat_vel_mps"));
  o.sat_clock_bias_m = j.value("sat_clock_bias_m", 0.0);
  o.sat_clock_drift_mps = j.value("sat_clock_drift_mps", 0.0);
  o.iono_corr_m = j.value("iono_corr_m", 0.0);
  o.tropo_corr_m = j.value("tropo_corr_m", 0.0);
  o.phase_corr_m = j.value("phase_corr_m", 0.0);
  o.nlos_flag = j.value("nlos_flag", false);
  return o;
}

json obs_to_json(const SatObservation& o) {
  json j;
  j["sat"] = o.sat.str();
  j["pseudorange_m"] = o.pseudorange_m;
  j["doppler_hz"] = o.doppler_hz ? json(*o.doppler_hz) : json(nullptr);
  j["carrier_phase_cycles"] = o.carrier_phase_cycles ? json(*o.carrier_phase_cycles) : json(nullptr);
  j["snr_dbhz"] = o.snr_dbhz;
  j["sat_pos_m"] = vec_json(o.sat_pos_m);
  j["sat_vel_mps"] = vec_json(o.sat_vel_mps);
  j["sat_clock_bias_m"] = o.sat_clock_bias_m;
  j["sat_clock_drift_mps"] = o.sat_clock_drift_mps;
  j["iono_corr_m"] = o.iono_corr_m;
  j["tropo_corr_m"] = o.tropo_corr_m;
  j["phase_corr_m"] = o.phase_corr_m;
  j["nlos_flag"] = o.nlos_flag;
  return j;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

}  // namespace

WarningSink stderr_warnings() {
  auto seen = std::make_shared<std::set<std::string>>();
  return [seen](const std::string& msg) {
    if (seen->insert(msg.substr(0, msg.find(" (line"))).second) std::cerr << "warning: " << msg << '\n';
  };
}

EpochFile parse_epoch_stream(std::istream& in, const WarningSink& warn) {
  EpochFile file;
  bool have_header = false;
  for_each_record(in, [&](const json& obj, std::size_t line) {
    if (!have_header) {
      file.header.schema_version = check_header(obj, line, "epochs");
      check_fields(obj, kEpochHeaderFields, "header", line, warn);
      if (obj.contains("station_pos_ecef") && !obj.at("station_pos_ecef").is_null()) {
        file.header.station_pos_ecef = json_vec(obj.at("station_pos_ecef"));
      }
      have_header = true;
      return;
    }
    check_fields(obj, kEpochFields, "epoch", line, warn);
    Epoch ep;
    ep.t = obj.at("t").get<double>();
    for (const auto& o : obj.at("observations")) ep.observations.push_back(obs_from_json(o, line, warn));
    file.epochs.push_back(std::move(ep));
  });
  if (!have_header) throw Error(ErrorCode::ParseError, "line 1, column 1: empty epoch file");
  return file;
}

void write_epoch_stream(std::ostream& out, const std::vector<Epoch>& epochs,
                        const EpochFileHeader& header) {
  json h;
  h["schema_version"] = header.schema_version;
  h["kind"] = "epochs";
  if (header.station_pos_ecef) h["station_pos_ecef"] = vec_json(*header.station_pos_ecef);
  out << h.dump() << '\n';
  for (const auto& ep : epochs) {
    json j;
    j["t"] = ep.t;
    j["observations"] = json::array();
    for (const auto& o : ep.observations) j["observations"].push_back(obs_to_json(o));
    out << j.dump() << '\n';
  }
}

EpochFile read_epoch_file(const std::filesystem::path& path, const WarningSink& warn) {
  auto in = open_in(path);
  return parse_epoch_stream(in, warn);
}

std::vector<Epoch> read_epochs(const std::filesystem::path& path) {
  return read_epoch_file(path).epochs;
}

void write_epochs(const std::filesystem::path& path, const std::vector<Epoch>& epochs,
                  const EpochFileHeader& header) {
  auto out = open_out(path);
  write_epoch_stream(out, epochs, header);
  finish(out, path);
}

// ---------------------------------------------------------------------------

GroundTruth parse_truth_stream(std::istream& in, const WarningSink& warn) {
  GroundTruth truth;
  bool have_header = false;
  auto read_amb = [](const json& j) {
    std::map<SatId, std::int64_t> m;
    for (const auto& [k, v] : j.items()) m[SatId::parse(k)] = v.get<std::int64_t>();
    return m;
  };
  for_each_record(in, [&](const json& obj, std::size_t line) {
    if (!have_header) {
      check_header(obj, line, "truth");
      check_fields(obj, kTruthHeaderFields, "header", line, warn);
      truth.origin_m = json_vec(obj.at("origin_ecef"));
      if (obj.contains("base_pos_ecef") && !obj.at("base_pos_ecef").is_null()) {
        truth.base_pos_m = json_vec(obj.at("base_pos_ecef"));
      }
      if (obj.contains("rover_ambiguities")) truth.rover_ambiguities = read_amb(obj.at("rover_ambiguities"));
      if (obj.contains("base_ambiguities")) truth.base_ambiguities = read_amb(obj.at("base_ambiguities"));
      have_header = true;
      return;
    }
    check_fields(obj, kTruthFields, "truth", line, warn);
    TruthEpoch te;
    te.t = obj.at("t").get<double>();
    te.state.pos_m = json_vec(obj.at("pos_m"));
    te.state.vel_mps = json_vec(obj.at("vel_mps"));
    te.state.clock_drift_mps = obj.value("clock_drift_mps", 0.0);
    if (obj.contains("clock_bias_m")) {
      for (const auto& [k, v] : obj.at("clock_bias_m").items()) {
        te.state.clock_bias_m[SatId::parse(k + "01").sys] = v.get<double>();
      }
    }
    if (obj.contains("nlos")) {
      for (const auto& [k, v] : obj.at("nlos").items()) te.nlos[SatId::parse(k)] = v.get<bool>();
    }
    truth.epochs.push_back(std::move(te));
  });
  if (!have_header) throw Error(ErrorCode::ParseError, "line 1, column 1: empty truth file");
  return truth;
}

void write_truth_stream(std::ostream& out, const GroundTruth& truth) {
  auto amb = [](const std::map<SatId, std::int64_t>& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[k.str()] = v;
    return j;
  };
  json h;
  h["schema_version"] = kSchemaVersion;
  h["kind"] = "truth";
  h["origin_ecef"] = vec_json(truth.origin_m);
  h["base_pos_ecef"] = truth.base_pos_m ? vec_json(*truth.base_pos_m) : json(nullptr);
  h["rover_ambiguities"] = amb(truth.rover_ambiguities);
  h["base_ambiguities"] = amb(truth.base_ambiguities);
  out << h.dump() << '\n';
  for (const auto& te : truth.epochs) {
    json j;
    j["t"] = te.t;
    j["pos_m"] = vec_json(te.state.pos_m);
    j["vel_mps"] = vec_json(te.state.vel_mps);
    json clk = json::object();
    for (const auto& [sys, v] : te.state.clock_bias_m) clk[std::string(1, constellation_tag(sys))] = v;
    j["clock_bias_m"] = clk;
    j["clock_drift_mps"] = te.state.clock_drift_mps;
    json nl = json::object();
    for (const auto& [sat, flag] : te.nlos) nl[sat.str()] = flag;
    j["nlos"] = nl;
    out << j.dump() << '\n';
  }
}

GroundTruth read_truth(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_truth_stream(in);
}

void write_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  auto out = open_out(path);
  write_truth_stream(out, truth);
  finish(out, path);
}

// ---------------------------------------------------------------------------

void write_solution_stream(std::ostream& out, const std::vector<SolutionRecord>& records,
                           const EnuFrame& frame) {
  out << "t,E,N,U,status,n_sats,err_E,err_N,err_U\n";
  for (const auto& r : records) {
    const Vec3 enu = frame.to_enu(r.pos_m);
    out << fmt("%.3f", r.t) << ',' << fmt("%.6f", enu.x()) << ',' << fmt("%.6f", enu.y()) << ','
        << fmt("%.6f", enu.z()) << ',' << to_string(r.status) << ',' << r.n_sats;
    for (int k = 0; k < 3; ++k) {
      out << ',';
      if (r.enu_error_m) out << fmt("%.6f", (*r.enu_error_m)(k));
    }
    out << '\n';
  }
}

std::vector<SolutionRecord> parse_solution_stream(std::istream& in, const EnuFrame& frame) {
  std::vector<SolutionRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (line == 1) {
      if (text.rfind("t,E,N,U,status", 0) != 0) parse_fail(line, 1, "unexpected CSV header");
      continue;
    }
    if (text.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (text.back() == ',') cells.emplace_back();
    if (cells.size() != 9) parse_fail(line, 1, "expected 9 columns, got " + std::to_string(cells.size()));
    try {
      SolutionRecord r;
      r.t = std::stod(cells[0]);
      r.pos_m = frame.to_ecef(Vec3(std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3])));
      r.status = parse_status(cells[4]);
      r.n_sats = std::stoi(cells[5]);
      if (!cells[6].empty()) {
        r.enu_error_m = Vec3(std::stod(cells[6]), std::stod(cells[7]), std::stod(cells[8]));
      }
      out.push_back(r);
    } catch (const std::logic_error& e) {
      parse_fail(line, 1, std::string("bad number: ") + e.what());
    }
  }
  return out;
}

void write_solutions(const std::filesystem::path& path, const std::vector<SolutionRecord>& records,
                     const EnuFrame& frame) {
  auto out = open_out(path);
  write_solution_stream(out, records, frame);
  finish(out, path);
}

std::vector<SolutionRecord> read_solutions(const std::filesystem::path& path, const EnuFrame& frame) {
  auto in = open_in(path);
  return parse_solution_stream(in, frame);
}

}  // namespace gnssfgo
