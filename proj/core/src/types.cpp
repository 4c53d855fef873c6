#include "gnssfgo/types.hpp"

#include "gnssfgo/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace gnssfgo {

char constellation_tag(Constellation sys) {
  return sys == Constellation::Gps ? 'G' : 'C';
}

double carrier_wavelength(Constellation sys) {
  return sys == Constellation::Gps ? constants::kLambdaL1 : constants::kLambdaB1;
}

std::string SatId::str() const {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%c%02d", constellation_tag(sys), prn);
  return buf;
}

SatId SatId::parse(std::string_view text) {
  if (text.size() < 2) {
    throw Error(ErrorCode::ParseError, "bad satellite id '" + std::string(text) + "'");
  }
  SatId id;
  switch (text.front()) {
    case 'G': id.sys = Constellation::Gps; break;
    case 'C': id.sys = Constellation::Beidou; break;
    default:
      throw Error(ErrorCode::ParseError, "unknown constellation in '" + std::string(text) + "'");
  }
  const char* first = text.data() + 1;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, id.prn);
  if (ec != std::errc() || ptr != last || id.prn <= 0) {
    throw Error(ErrorCode::ParseError, "bad PRN in '" + std::string(text) + "'");
  }
  return id;
}

namespace {

void check_range(const SatObservation& obs, const char* field, double value, double lo, double hi) {
  if (!(value >= lo && value <= hi)) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s %s = %.17g outside [%g, %g]", obs.sat.str().c_str(), field,
                  value, lo, hi);
    throw Error(ErrorCode::FieldOutOfRange, buf);
  }
}

}  // namespace

Epoch validate_epoch(Epoch epoch, const ValidationLimits& limits) {
  auto& obs = epoch.observations;
  std::stable_sort(obs.begin(), obs.end(),
                   [](const SatObservation& a, const SatObservation& b) { return a.sat < b.sat; });
  for (std::size_t i = 1; i < obs.size(); ++i) {
    if (obs[i].sat == obs[i - 1].sat) {
      throw Error(ErrorCode::DuplicateSatellite, obs[i].sat.str());
    }
  }
  for (const auto& o : obs) {
    check_range(o, "pseudorange_m", o.pseudorange_m, limits.min_pseudorange_m,
                limits.max_pseudorange_m);
    check_range(o, "snr_dbhz", o.snr_dbhz, limits.min_snr_dbhz, limits.max_snr_dbhz);
    if (!o.sat_pos_m.allFinite() || !o.sat_vel_mps.allFinite()) {
      throw Error(ErrorCode::FieldOutOfRange, o.sat.str() + " satellite state not finite");
    }
  }
  return epoch;
}

std::vector<Constellation> constellations_in(const Epoch& epoch) {
  std::vector<Constellation> out;
  for (const auto& o : epoch.observations) {
    if (std::find(out.begin(), out.end(), o.sat.sys) == out.end()) out.push_back(o.sat.sys);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace gnssfgo
