#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ews/core.hpp"
#include "ews/detector.hpp"
#include "ews/pipeline.hpp"

namespace ews::simlab {

enum class DgpKind { termination, inversion, tail_dependent };
std::string dgp_name(DgpKind kind);
DgpKind parse_dgp(const std::string& name);

struct DGPSpec {
  DgpKind kind = DgpKind::termination;
  int T = 1000;
  int theta = 500;       // change index; theta >= T generates a null series
  std::uint64_t seed = 0;
  bool noise_off = false;  // testing switch: deterministic skeleton

  void validate() const;
};

SeriesFrame generate(const DGPSpec& spec);
SeriesFrame gen_termination(const DGPSpec& spec);
SeriesFrame gen_inversion(const DGPSpec& spec);
SeriesFrame gen_tail_dependent(const DGPSpec& spec);

struct SummaryStats {
  double mean = 0;
  double stddev = 0;
  std::optional<double> skewness;
  std::optional<double> kurtosis;  // excess: normal -> 0
  std::optional<double> lag1_corr;
  std::optional<double> lag1_rank_corr;
};

SummaryStats summary_stats(std::span<const double> y);

struct RepRecord {
  std::uint64_t seed = 0;
  bool pfa = false;
  std::optional<int> delay;
  bool nd = false;
  std::string diagnostic;  // nonempty when the pipeline failed on this seed
};

struct ReplicationResult {
  double pfa = 0;
  double add = 0;  // mean delay over runs with a post-theta alarm
  double nd = 0;
  int n_reps = 0;
  double threshold = 0;
  std::vector<RepRecord> records;
};

struct ReplicationConfig {
  WindowPlan plan;
  DetectorConfig detector;
  entropy::Variant variant = entropy::Variant::baseline;
  forest::ForestParams forest;
  int quad_points = 201;
  double target_pfa = 0.1;  // used when detector.calibrate is set
  int calibration_runs = 20;
};

/// Seeded generate -> detect -> score replications; a pipeline failure on a
/// seed is recorded as a non-detection with a diagnostic, never dropped.
ReplicationResult run_replications(const DGPSpec& dgp,
                                   const ReplicationConfig& config,
                                   int n_reps);

void write_reps_csv(const ReplicationResult& result, const std::string& path);

}  // namespace ews::simlab
