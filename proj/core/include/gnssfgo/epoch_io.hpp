#pragma once

#include "gnssfgo/geometry.hpp"
#include "gnssfgo/simulator.hpp"
#include "gnssfgo/solution.hpp"
#include "gnssfgo/types.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gnssfgo {

inline constexpr int kSchemaVersion = 1;

/// First line of an epoch file: {"schema_version":1, ...}.
struct EpochFileHeader {
  int schema_version = kSchemaVersion;
  std::optional<Vec3> station_pos_ecef;
};

struct EpochFile {
  EpochFileHeader header;
  std::vector<Epoch> epochs;
};

using WarningSink = std::function<void(const std::string&)>;

/// Writes to std::cerr, once per distinct message.
WarningSink stderr_warnings();

EpochFile parse_epoch_stream(std::istream& in, const WarningSink& warn = stderr_warnings());
void write_epoch_stream(std::ostream& out, const std::vector<Epoch>& epochs,
                        const EpochFileHeader& header = {});

EpochFile read_epoch_file(const std::filesystem::path& path,
                          const WarningSink& warn = stderr_warnings());
std::vector<Epoch> read_epochs(const std::filesystem::path& path);
void write_epochs(const std::filesystem::path& path, const std::vector<Epoch>& epochs,
                  const EpochFileHeader& header = {});

GroundTruth parse_truth_stream(std::istream& in, const WarningSink& warn = stderr_warnings());
void write_truth_stream(std::ostream& out, const GroundTruth& truth);
GroundTruth read_truth(const std::filesystem::path& path);
void write_truth(const std::filesystem::path& path, const GroundTruth& truth);

/// CSV: t,E,N,U,status,n_sats,err_E,err_N,err_U (errors empty without truth).
void write_solution_stream(std::ostream& out, const std::vector<SolutionRecord>& records,
                           const EnuFrame& frame);
std::vector<SolutionRecord> parse_solution_stream(std::istream& in, const EnuFrame& frame);
void write_solutions(const std::filesystem::path& path, const std::vector<SolutionRecord>& records,
                     const EnuFrame& frame);
std::vector<SolutionRecord> read_solutions(const std::filesystem::path& path, const EnuFrame& frame);

}  // namespace gnssfgo
