#include "peeriv/pipeline.hpp"

#include "peeriv/history.hpp"

namespace peeriv {

EstimationSample prepare_sample(const DesignPanel& design, const InstrumentSet& instruments, Outcome outcome,
                                unsigned threads) {
  EstimationSample sample = apply_sample_restrictions(design, instruments, outcome);
  demean_sample(sample, threads);
  return sample;
}

OutcomeEstimates estimate_sample(const EstimationSample& sample, const PipelineOptions& options) {
  EstimatorOptions est;
  est.vcov = options.vcov;
  est.absorbed_df = sample.num_groups();
  est.cluster_offsets = sample.group_offsets;
  est.weak_instrument_f = options.weak_instrument_f;
  est.threads = options.threads;
  est.block_rows = options.block_rows;

  OutcomeEstimates out;
  out.outcome = sample.outcome;
  out.attrition = sample.attrition;

  Eigen::MatrixXd xw(sample.x.rows(), sample.x.cols() + sample.w.cols());
  xw << sample.x, sample.w;
  std::vector<std::string> names = sample.x_names;
  names.insert(names.end(), sample.w_names.begin(), sample.w_names.end());
  out.ols = ols(sample.y, xw, names, est);
  out.ols.outcome = std::string(to_string(sample.outcome));
  out.ols.n_players = sample.num_groups();

  out.tsls = tsls(sample.y, sample.x, sample.w, sample.z, sample.x_names, sample.w_names, sample.z_names, est);
  out.tsls.outcome = out.ols.outcome;
  out.tsls.n_players = sample.num_groups();
  return out;
}

PipelineResult run_pipeline(const MatchPanel& panel, const PipelineOptions& options, std::span<const double> values) {
  DesignOptions design_opts = options.design;
  design_opts.threads = options.threads;
  const DesignPanel design = build_exposure_design(panel, design_opts, values);
  const HistoryIndex index = HistoryIndex::build(panel, values);
  const InstrumentSet instruments = build_instruments(panel, index, design);

  PipelineResult result;
  result.panel_rows = panel.num_rows();
  result.design_rows = design.rows();
  result.draws_excluded = design.draws_excluded;
  for (Outcome o : options.outcomes) {
    const EstimationSample sample = prepare_sample(design, instruments, o, options.threads);
    result.estimates.push_back(estimate_sample(sample, options));
  }
  return result;
}

}  // namespace peeriv
