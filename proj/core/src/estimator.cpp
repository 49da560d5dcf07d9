#include "peeriv/estimator.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <optional>

#include "peeriv/errors.hpp"
#include "peeriv/linalg.hpp"
#include "peeriv/parallel.hpp"

namespace peeriv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kGroupsPerUnit = 2048;

double two_sided_p(double t, double df) {
  if (std::isnan(t) || !(df > 0)) return kNaN;
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

std::vector<int> iota_from(int first, int count) {
  std::vector<int> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = first + i;
  return v;
}

std::vector<int> concat(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Eigen::MatrixXd pick(const Eigen::MatrixXd& g, const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g(rows[i], cols[j]);
    }
  }
  return out;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Per-unit sums gathered in the residual pass.
struct Partial {
  Eigen::VectorXd sums;                 // rss_e, rss_u[kx], rss_r[kx]
  std::vector<Eigen::MatrixXd> meats;   // second stage, then one per endogenous column

  Partial& operator+=(const Partial& o) {
    sums += o.sums;
    for (std::size_t i = 0; i < meats.size(); ++i) meats[i] += o.meats[i];
    return *this;
  }
};

Partial reduce_pairwise(std::vector<Partial> parts) {
  while (parts.size() > 1) {
    std::vector<Partial> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
      parts[i] += parts[i + 1];
      next.push_back(std::move(parts[i]));
    }
    if (parts.size() % 2 == 1) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return std::move(parts.front());
}

double cluster_factor(std::size_t groups, std::size_t n, std::size_t k) {
  const double g = static_cast<double>(groups);
  return g / (g - 1.0) * (static_cast<double>(n) - 1.0) / (static_cast<double>(n) - static_cast<double>(k));
}

EstimationResult fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                     const Eigen::MatrixXd& z, const std::vector<std::string>& x_names,
                     const std::vector<std::string>& w_names, const std::vector<std::string>& z_names,
                     const EstimatorOptions& opt, bool iv) {
  const auto n = static_cast<std::size_t>(y.size());
  const auto kx = static_cast<int>(x.cols());
  const auto kw = static_cast<int>(w.cols());
  const auto kz = static_cast<int>(z.cols());
  if (static_cast<std::size_t>(x.rows()) != n || static_cast<std::size_t>(w.rows()) != n ||
      static_cast<std::size_t>(z.rows()) != n) {
    throw UsageError("regression inputs have inconsistent row counts");
  }
  if (x_names.size() != static_cast<std::size_t>(kx) || w_names.size() != static_cast<std::size_t>(kw) ||
      z_names.size() != static_cast<std::size_t>(kz)) {
    throw UsageError("regression column names do not match column counts");
  }
  if (iv && kz < kx) throw NumericalError("under-identified: fewer instruments than endogenous regressors");
  const int kd = kx + kw;
  const int ka = kz + kw;
  if (kd == 0) throw UsageError("no regressors");
  if (opt.vcov == VcovMode::kClusterByPlayer && opt.cluster_offsets.size() < 3) {
    throw UsageError("cluster-by-player covariance needs at least two clusters");
  }
  if (!opt.cluster_offsets.empty() && opt.cluster_offsets.back() != n) {
    throw UsageError("cluster offsets do not cover the sample");
  }
  const double df_resid = static_cast<double>(n) - kd - static_cast<double>(opt.absorbed_df);
  if (!(df_resid > 0)) {
    throw NumericalError("non-positive residual degrees of freedom (n=" + std::to_string(n) +
                         ", k=" + std::to_string(kd) + ", absorbed=" + std::to_string(opt.absorbed_df) + ")");
  }

  // Gram layout: y | X | W | Z.
  const std::vector<int> iy{0};
  const std::vector<int> ix = iota_from(1, kx);
  const std::vector<int> iw = iota_from(1 + kx, kw);
  const std::vector<int> iz = iota_from(1 + kx + kw, kz);
  const std::vector<int> ia = concat(iz, iw);
  std::vector<std::string> a_names = z_names;
  a_names.insert(a_names.end(), w_names.begin(), w_names.end());
  std::vector<std::string> d_names = x_names;
  d_names.insert(d_names.end(), w_names.begin(), w_names.end());

  Eigen::Map<const Eigen::MatrixXd> ymat(y.data(), y.rows(), 1);
  std::vector<ColumnBlock> blocks{ymat, x, w, z};
  const Eigen::MatrixXd g = accumulate_gram(blocks, opt.threads, opt.block_rows);

  const Eigen::MatrixXd aa = pick(g, ia, ia);
  const Eigen::MatrixXd ay = pick(g, ia, iy);

  // Γ maps A-space coefficients to fitted second-stage regressors: [X̂ W] = A Γ.
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(ka, kd);
  Eigen::MatrixXd pi;   // ka × kx
  Eigen::MatrixXd rho;  // kw × kx
  std::optional<GramSolver> solver_a;
  if (iv) {
    solver_a.emplace(aa, a_names, "[Z W]");
    pi = solver_a->solve(pick(g, ia, ix));
    gamma.leftCols(kx) = pi;
    if (kw > 0) {
      GramSolver solver_w(pick(g, iw, iw), w_names, "[W]");
      rho = solver_w.solve(pick(g, iw, ix));
    } else {
      rho = Eigen::MatrixXd::Zero(0, kx);
    }
  }
  for (int j = 0; j < kw; ++j) gamma(kz + j, kx + j) = 1.0;

  const Eigen::MatrixXd dd_hat = gamma.transpose() * aa * gamma;
  const GramSolver solver_d(dd_hat, d_names, iv ? "second stage [X-hat W]" : "regressors");
  const Eigen::VectorXd beta = solver_d.solve(gamma.transpose() * ay);

  // Residual pass: exact RSS values and sandwich meats in A-space.
  const bool need_meat = opt.vcov != VcovMode::kClassical;
  const bool cluster = opt.vcov == VcovMode::kClusterByPlayer;
  const int n_endog = iv ? kx : 0;
  const std::size_t n_groups = opt.cluster_offsets.empty() ? 0 : opt.cluster_offsets.size() - 1;
  const std::size_t n_units = cluster ? (n_groups + kGroupsPerUnit - 1) / kGroupsPerUnit
                                      : (n + opt.block_rows - 1) / opt.block_rows;
  auto make_partial = [&] {
    Partial p;
    p.sums = Eigen::VectorXd::Zero(1 + 2 * n_endog);
    if (need_meat) p.meats.assign(static_cast<std::size_t>(1 + n_endog), Eigen::MatrixXd::Zero(ka, ka));
    return p;
  };
  std::vector<Partial> parts(std::max<std::size_t>(n_units, 1), make_partial());
  parallel_for(n_units, opt.threads, [&](std::size_t u) {
    std::size_t row_begin, row_end;
    if (cluster) {
      row_begin = opt.cluster_offsets[u * kGroupsPerUnit];
      row_end = opt.cluster_offsets[std::min(n_groups, (u + 1) * kGroupsPerUnit)];
    } else {
      row_begin = u * opt.block_rows;
      row_end = std::min(n, row_begin + opt.block_rows);
    }
    const auto b = static_cast<Eigen::Index>(row_begin);
    const auto len = static_cast<Eigen::Index>(row_end - row_begin);
    Eigen::MatrixXd a(len, ka);
    a.leftCols(kz) = z.middleRows(b, len);
    a.rightCols(kw) = w.middleRows(b, len);
    Eigen::MatrixXd d(len, kd);
    d.leftCols(kx) = x.middleRows(b, len);
    d.rightCols(kw) = w.middleRows(b, len);

    // Residual columns: second stage, then first-stage unrestricted per endogenous column.
    Eigen::MatrixXd res(len, 1 + n_endog);
    res.col(0) = y.segment(b, len) - d * beta;
    Partial& p = parts[u];
    p.sums[0] = res.col(0).squaredNorm();
    if (n_endog > 0) {
      const Eigen::MatrixXd xb = x.middleRows(b, len);
      res.rightCols(n_endog) = xb - a * pi;
      const Eigen::MatrixXd r_restricted = kw > 0 ? Eigen::MatrixXd(xb - w.middleRows(b, len) * rho) : xb;
      for (int e = 0; e < n_endog; ++e) {
        p.sums[1 + e] = res.col(1 + e).squaredNorm();
        p.sums[1 + n_endog + e] = r_restricted.col(e).squaredNorm();
      }
    }
    if (!need_meat) return;
    for (int m = 0; m < 1 + n_endog; ++m) {
      if (cluster) {
        const std::size_t g_end = std::min(n_groups, (u + 1) * kGroupsPerUnit);
        for (std::size_t gi = u * kGroupsPerUnit; gi < g_end; ++gi) {
          const auto gb = static_cast<Eigen::Index>(opt.cluster_offsets[gi] - row_begin);
          const auto gl = static_cast<Eigen::Index>(opt.cluster_offsets[gi + 1] - opt.cluster_offsets[gi]);
          const Eigen::VectorXd score = a.middleRows(gb, gl).transpose() * res.col(m).segment(gb, gl);
          p.meats[static_cast<std::size_t>(m)].selfadjointView<Eigen::Lower>().rankUpdate(score);
        }
      } else {
        const Eigen::MatrixXd weighted = a.array().colwise() * res.col(m).array();
        p.meats[static_cast<std::size_t>(m)].selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
      }
      Eigen::MatrixXd& mm = p.meats[static_cast<std::size_t>(m)];
      mm = Eigen::MatrixXd(mm.selfadjointView<Eigen::Lower>());
    }
  });
  const Partial total = reduce_pairwise(std::move(parts));

  EstimationResult r;
  r.method = iv ? "tsls" : "ols";
  r.names = d_names;
  r.beta = beta;
  r.vcov_mode = opt.vcov;
  r.n_obs = n;
  r.n_players = n_groups > 0 ? n_groups : opt.absorbed_df;
  r.absorbed_df = opt.absorbed_df;
  r.df_resid = df_resid;
  r.rss = total.sums[0];

  const Eigen::MatrixXd bread = solver_d.inverse();
  switch (opt.vcov) {
    case VcovMode::kClassical:
      r.vcov = r.rss / df_resid * bread;
      break;
    case VcovMode::kHc1:
      r.vcov = bread * (gamma.transpose() * total.meats[0] * gamma) * bread * (static_cast<double>(n) / df_resid);
      break;
    case VcovMode::kClusterByPlayer:
      r.vcov = bread * (gamma.transpose() * total.meats[0] * gamma) * bread *
               cluster_factor(n_groups, n, static_cast<std::size_t>(kd));
      break;
  }
  r.vcov = symmetrize(r.vcov);
  const double t_df = cluster ? static_cast<double>(n_groups) - 1.0 : df_resid;
  r.se.resize(kd);
  r.t_stats.resize(kd);
  r.p_values.resize(kd);
  for (int i = 0; i < kd; ++i) {
    r.se[i] = std::sqrt(std::max(0.0, r.vcov(i, i)));
    r.t_stats[i] = r.se[i] > 0 ? beta[i] / r.se[i] : (beta[i] == 0 ? kNaN : std::copysign(kInf, beta[i]));
    r.p_values[i] = two_sided_p(r.t_stats[i], t_df);
  }

  if (iv) {
    const Eigen::MatrixXd bread_a = solver_a->inverse();
    const double df_fs = static_cast<double>(n) - ka - static_cast<double>(opt.absorbed_df);
    for (int e = 0; e < kx; ++e) {
      FirstStage fs;
      fs.endogenous = x_names[static_cast<std::size_t>(e)];
      fs.names = a_names;
      fs.coef = pi.col(e);
      fs.rss_unrestricted = total.sums[1 + e];
      fs.rss_restricted = total.sums[1 + kx + e];
      switch (opt.vcov) {
        case VcovMode::kClassical:
          fs.vcov = fs.rss_unrestricted / df_fs * bread_a;
          break;
        case VcovMode::kHc1:
          fs.vcov = bread_a * total.meats[static_cast<std::size_t>(1 + e)] * bread_a * (static_cast<double>(n) / df_fs);
          break;
        case VcovMode::kClusterByPlayer:
          fs.vcov = bread_a * total.meats[static_cast<std::size_t>(1 + e)] * bread_a *
                    cluster_factor(n_groups, n, static_cast<std::size_t>(ka));
          break;
      }
      fs.vcov = symmetrize(fs.vcov);
      fs.se = fs.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
      fs.f = first_stage_f(fs.rss_restricted, fs.rss_unrestricted, static_cast<std::size_t>(kz), n,
                           static_cast<std::size_t>(ka), opt.absorbed_df);
      if (fs.f.value < opt.weak_instrument_f) {
        r.warnings.push_back("weak instruments for " + fs.endogenous + ": first-stage F = " +
                             std::to_string(fs.f.value) + " < " + std::to_string(opt.weak_instrument_f));
      }
      r.first_stage.push_back(std::move(fs));
    }
  }
  return r;
}

}  // namespace

std::string_view to_string(VcovMode m) {
  switch (m) {
    case VcovMode::kClassical: return "classical";
    case VcovMode::kHc1: return "hc1";
    case VcovMode::kClusterByPlayer: return "cluster-player";
  }
  return "hc1";
}

VcovMode parse_vcov_mode(std::string_view s) {
  if (s == "classical") return VcovMode::kClassical;
  if (s == "hc1") return VcovMode::kHc1;
  if (s == "cluster-player" || s == "cluster_by_player" || s == "cluster") return VcovMode::kClusterByPlayer;
  throw ConfigError("unknown vcov mode '" + std::string(s) + "' (expected classical|hc1|cluster-player)");
}

int EstimationResult::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

FStatistic first_stage_f(double rss_restricted, double rss_unrestricted, std::size_t q, std::size_t n,
                         std::size_t p, std::size_t absorbed) {
  if (n <= p + absorbed) {
    throw NumericalError("first-stage F: n (" + std::to_string(n) + ") must exceed parameters (" +
                         std::to_string(p + absorbed) + ")");
  }
  if (q == 0) throw UsageError("first-stage F needs at least one excluded instrument");
  FStatistic f;
  f.df_num = q;
  f.df_den = n - p - absorbed;
  const double scale = std::max(std::fabs(rss_restricted), std::numeric_limits<double>::min());
  if (rss_unrestricted <= 1e-13 * scale) {
    f.value = kInf;
    f.capped = true;
    f.p_value = 0.0;
    return f;
  }
  f.value = ((rss_restricted - rss_unrestricted) / static_cast<double>(q)) /
            (rss_unrestricted / static_cast<double>(f.df_den));
  if (f.value > 0 && std::isfinite(f.value)) {
    boost::math::fisher_f dist(static_cast<double>(f.df_num), static_cast<double>(f.df_den));
    f.p_value = boost::math::cdf(boost::math::complement(dist, f.value));
  } else {
    f.p_value = 1.0;
  }
  return f;
}

EstimationResult ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                     const EstimatorOptions& options) {
  const Eigen::MatrixXd none(x.rows(), 0);
  return fit(y, none, x, none, {}, names, {}, options, false);
}

EstimationResult tsls(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                      const Eigen::MatrixXd& z, const std::vector<std::string>& x_names,
                      const std::vector<std::string>& w_names, const std::vector<std::string>& z_names,
                      const EstimatorOptions& options) {
  if (x.cols() == 0) throw UsageError("tsls needs at least one endogenous column");
  return fit(y, x, w, z, x_names, w_names, z_names, options, true);
}

Eigen::MatrixXd robust_vcov(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& regressors, VcovMode mode,
                            const EstimatorOptions& options) {
  const auto n = static_cast<std::size_t>(regressors.rows());
  const auto k = static_cast<std::size_t>(regressors.cols());
  if (static_cast<std::size_t>(residuals.size()) != n) throw UsageError("residual length mismatch");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < k; ++i) names.push_back("x" + std::to_string(i));
  const GramSolver solver(regressors.transpose() * regressors, names, "bread matrix");
  const Eigen::MatrixXd bread = solver.inverse();
  const double df = static_cast<double>(n) - static_cast<double>(k) - static_cast<double>(options.absorbed_df);
  if (!(df > 0)) throw NumericalError("non-positive residual degrees of freedom");
  Eigen::MatrixXd v;
  switch (mode) {
    case VcovMode::kClassical:
      v = residuals.squaredNorm() / df * bread;
      break;
    case VcovMode::kHc1: {
      const Eigen::MatrixXd weighted = regressors.array().colwise() * residuals.array();
      v = bread * (weighted.transpose() * weighted) * bread * (static_cast<double>(n) / df);
      break;
    }
    case VcovMode::kClusterByPlayer: {
      const auto& off = options.cluster_offsets;
      if (off.size() < 3 || off.back() != n) throw UsageError("cluster offsets do not cover the sample");
      Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
      for (std::size_t g = 0; g + 1 < off.size(); ++g) {
        const auto b = static_cast<Eigen::Index>(off[g]);
        const auto len = static_cast<Eigen::Index>(off[g + 1] - off[g]);
        const Eigen::VectorXd s = regressors.middleRows(b, len).transpose() * residuals.segment(b, len);
        meat += s * s.transpose();
      }
      v = bread * meat * bread * cluster_factor(off.size() - 1, n, k);
      break;
    }
  }
  return symmetrize(v);
}

}  // namespace peeriv
