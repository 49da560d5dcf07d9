#pragma once

#include <span>
#include <vector>

#include "peeriv/design.hpp"
#include "peeriv/estimator.hpp"
#include "peeriv/panel.hpp"
#include "peeriv/within.hpp"

namespace peeriv {

struct PipelineOptions {
  DesignOptions design;
  VcovMode vcov = VcovMode::kHc1;
  std::vector<Outcome> outcomes = {Outcome::kTimeToNextMatch, Outcome::kUsedToxic};
  unsigned threads = 1;
  std::size_t block_rows = 16384;
  double weak_instrument_f = 10.0;
};

struct OutcomeEstimates {
  Outcome outcome = Outcome::kTimeToNextMatch;
  AttritionReport attrition;
  EstimationResult ols;
  EstimationResult tsls;
};

struct PipelineResult {
  std::size_t panel_rows = 0;
  std::size_t design_rows = 0;
  std::size_t draws_excluded = 0;
  std::vector<OutcomeEstimates> estimates;
};

/// Restricted, player-demeaned sample for one outcome, ready for estimation.
EstimationSample prepare_sample(const DesignPanel& design, const InstrumentSet& instruments, Outcome outcome,
                                unsigned threads = 1);

/// Within-player OLS and 2SLS on a prepared (demeaned) sample.
OutcomeEstimates estimate_sample(const EstimationSample& sample, const PipelineOptions& options);

/// Design → history → instruments → restrictions → demeaning → OLS and 2SLS
/// for every requested outcome. `values` switches to continuous intensities.
PipelineResult run_pipeline(const MatchPanel& panel, const PipelineOptions& options,
                            std::span<const double> values = {});

}  // namespace peeriv
