#include "bandlab/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include "bandlab/deloc.hpp"
#include "bandlab/ensemble.hpp"
#include "bandlab/fluct.hpp"
#include "bandlab/resolvent.hpp"
#include "bandlab/tequation.hpp"
#include "bandlab/version.hpp"
#include "bandlab/walk.hpp"

namespace bandlab {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

int Table::col(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw std::runtime_error("table: missing column " + name);
}

double Table::num(std::size_t row, int c) const {
  const std::string& cell = rows[row][static_cast<std::size_t>(c)];
  if (cell.empty()) return std::nan("");
  return std::strtod(cell.c_str(), nullptr);
}

int worker_count(const json& config, std::int64_t work_items) {
  int threads = config.value("threads", 0);
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 0) threads = 1;
  if (const char* env = std::getenv("BANDLAB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) threads = std::min(threads, cap);
  }
  return static_cast<int>(std::min<std::int64_t>(threads,
                                                 std::max<std::int64_t>(1, work_items)));
}

namespace {

constexpr double kSlackExponent = 0.2;  // stochastic-domination slack N^tau

std::string fmt_int(std::int64_t v) { return std::to_string(v); }

void parallel_for(std::int64_t items, int workers,
                  const std::function<void(std::int64_t)>& fn) {
  if (workers <= 1) {
    for (std::int64_t i = 0; i < items; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= items) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string now_iso() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(
      std::min<double>(std::ceil(q * static_cast<double>(v.size())) - 1,
                       static_cast<double>(v.size() - 1)));
  return v[std::max<std::size_t>(idx, 0)];
}

// ---------------------------------------------------------------------------
// Config handling
// ---------------------------------------------------------------------------

const std::set<std::string> kExperiments = {
    "identities", "localaw", "fluctavg", "theta", "deloc", "walk", "bootstrap"};

json base_defaults() {
  return json{{"seed", 1},      {"trials", 10},    {"dist", "gaussian"},
              {"E", 0.5},       {"threads", 0},    {"out", "bandlab_out"},
              {"budget", 4096}, {"tau", kSlackExponent}};
}

json default_config(const std::string& experiment, bool throw_unknown) {
  if (!kExperiments.count(experiment)) {
    if (throw_unknown) throw ConfigError("unknown experiment: " + experiment);
    return {};
  }
  json cfg = base_defaults();
  cfg["experiment"] = experiment;
  if (experiment == "identities") {
    cfg["N"] = 64;
    cfg["d"] = 1;
    cfg["W"] = 8;
    cfg["eta"] = 0.5;
    cfg["n_triples"] = 20;
  } else if (experiment == "localaw") {
    cfg["N"] = 1024;
    cfg["d"] = 1;
    cfg["W"] = 32;
    cfg["eta_ladder"] = {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};
    cfg["trials"] = 20;
    cfg["zcal"] = true;
  } else if (experiment == "fluctavg") {
    cfg["Ns"] = {256, 512, 1024};
    cfg["Ws"] = json::array();   // empty -> round(N^(3/4))
    cfg["etas"] = json::array(); // empty -> 4 W^2 / N^2
    cfg["d"] = 1;
    cfg["trials"] = 100;
    cfg["b_profile"] = "ones";
    cfg["n_resample"] = 0;
    cfg["y_star"] = 0;
  } else if (experiment == "theta") {
    cfg["N"] = 64;
    cfg["d"] = 1;
    cfg["W_list"] = {4, 8};
    cfg["eta_list"] = {0.5, 0.05};
  } else if (experiment == "deloc") {
    cfg["N"] = 24;
    cfg["d"] = 2;
    cfg["W_list"] = {2, 4, 8};
    cfg["trials"] = 10;
    cfg["eps"] = 0.1;
    cfg["kappa"] = 0.5;
    cfg["l"] = 6;
  } else if (experiment == "walk") {
    cfg["N"] = 4096;
    cfg["d"] = 1;
    cfg["W"] = 16;
    cfg["n"] = 400;
    cfg["tail_N"] = 128;
    cfg["tail_W"] = 8;
    cfg["tail_eta"] = 0.05;
  } else if (experiment == "bootstrap") {
    cfg["N"] = 24;
    cfg["d"] = 2;
    cfg["W"] = 6;
    cfg["trials"] = 20;
    cfg["delta"] = 0.1;
    cfg["eta"] = 0.0;  // 0 -> 4 W^2 / N^2
  }
  return cfg;
}

void validate_config(const json& cfg) {
  const std::string exp = cfg.at("experiment").get<std::string>();
  const json defaults = default_config(exp, true);
  for (auto it = cfg.begin(); it != cfg.end(); ++it)
    if (!defaults.contains(it.key()))
      throw ConfigError("unknown config key for " + exp + ": " + it.key());
  auto positive = [&](const char* key) {
    if (cfg.contains(key) && cfg.at(key).get<double>() <= 0)
      throw ConfigError(std::string(key) + " must be positive");
  };
  positive("N");
  positive("W");
  positive("trials");
  if (cfg.contains("eta") && exp != "bootstrap") positive("eta");
  if (cfg.contains("eta_ladder")) {
    auto ladder = cfg.at("eta_ladder").get<std::vector<double>>();
    if (ladder.empty()) throw ConfigError("eta_ladder must be nonempty");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      if (ladder[i] <= 0) throw ConfigError("eta_ladder entries must be positive");
      if (i && ladder[i] >= ladder[i - 1])
        throw ConfigError("eta_ladder must be strictly decreasing");
    }
  }
  if (cfg.contains("N") && cfg.contains("d")) {
    const TorusShape shape(cfg.at("N").get<int>(), cfg.at("d").get<int>());
    if (exp != "walk" && shape.size() > cfg.value("budget", 4096))
      throw ConfigError("N^d exceeds the configured budget");
  }
  distribution_from_string(cfg.value("dist", "gaussian"));
}

// ---------------------------------------------------------------------------
// Experiment runners
// ---------------------------------------------------------------------------

struct ExperimentOutput {
  Table table;
  json extra_summary;  // filled by runners; checks recomputed from the table
};

ExperimentOutput run_identities(const json& cfg) {
  const int N = cfg.at("N"), d = cfg.at("d"), W = cfg.at("W");
  const double eta = cfg.at("eta"), E = cfg.at("E");
  const int trials = cfg.at("trials"), n_triples = cfg.at("n_triples");
  const auto dist = distribution_from_string(cfg.at("dist"));
  const std::uint64_t master = cfg.at("seed").get<std::uint64_t>();
  const TorusShape shape(N, d);
  const auto profile = VarianceProfile::uniform(shape, W);
  const std::int64_t n = shape.size();
  const Complex z(E, eta);

  Table table;
  table.header = {"trial", "seed", "res_gij", "res_diag_inverse", "res_schur",
                  "res_row_expansion", "res_minor_comp", "res_ward_scalar",
                  "res_ward_gen", "res_tequation", "res_max"};
  table.rows.resize(static_cast<std::size_t>(trials));

  parallel_for(trials, worker_count(cfg, trials), [&](std::int64_t t) {
    const std::uint64_t seed_t = rng::trial_seed(master, t);
    const BandSample s = sample(profile, dist, seed_t);
    const auto params = SpectralParams::scalar(shape, z);
    const Resolvent full = resolvent(s, params);

    rng::CounterStream pick(rng::combine(seed_t, 0x7121BULL));
    double r1 = 0, r2 = 0, r3 = 0, r4 = 0;
    std::uint64_t ctr = 0;
    for (int q = 0; q < n_triples; ++q) {
      std::int64_t i, j, k;
      do {
        i = static_cast<std::int64_t>(pick.uniform01(ctr++) * n);
        j = static_cast<std::int64_t>(pick.uniform01(ctr++) * n);
        k = static_cast<std::int64_t>(pick.uniform01(ctr++) * n);
      } while (i == j || j == k || i == k);
      const auto res = identity_residuals(s, full, i, j, k);
      if (res.skipped) continue;
      r1 = std::max(r1, res.gij_minor);
      r2 = std::max(r2, res.diag_inverse);
      r3 = std::max(r3, res.schur_diag);
      r4 = std::max(r4, res.row_expansion);
    }

    std::int64_t a, b;
    do {
      a = static_cast<std::int64_t>(pick.uniform01(ctr++) * n);
      b = static_cast<std::int64_t>(pick.uniform01(ctr++) * n);
    } while (a == b);
    const Resolvent via = minor_from(minor_resolvent(s, params, {a}), {b});
    const Resolvent direct = minor_resolvent(s, params, {a, b});
    const double comp = (via.G - direct.G).cwiseAbs().maxCoeff();

    double ward_s = 0, ward_g = 0;
    for (std::int64_t y = 0; y < n; ++y) {
      const auto w = ward_residual(full, y);
      ward_s = std::max(ward_s, w.scalar_ward.value());
      ward_g = std::max(ward_g, w.generalized);
    }
    // two-level imaginary parts exercise the generalized identity
    Eigen::VectorXcd zvec(n);
    for (std::int64_t x = 0; x < n; ++x)
      zvec(x) = Complex(E, x < n / 2 ? eta : 2.0 * eta);
    const Resolvent gen = resolvent(
        s, SpectralParams::general(shape, z, zvec));
    for (std::int64_t y = 0; y < n; ++y)
      ward_g = std::max(ward_g, ward_residual(gen, y).generalized);

    const Eigen::VectorXcd M = Eigen::VectorXcd::Constant(n, msc(z));
    const Eigen::MatrixXd T = t_matrix(full, profile);
    const double teq = t_equation_residual(T, full, M, profile);

    const double rmax = std::max({r1, r2, r3, r4, comp, ward_s, ward_g, teq});
    table.rows[static_cast<std::size_t>(t)] = {
        fmt_int(t),          fmt_int(static_cast<std::int64_t>(seed_t)),
        format_double(r1),   format_double(r2),
        format_double(r3),   format_double(r4),
        format_double(comp), format_double(ward_s),
        format_double(ward_g), format_double(teq),
        format_double(rmax)};
  });
  return {std::move(table), json::object()};
}

ExperimentOutput run_localaw(const json& cfg) {
  const int N = cfg.at("N"), d = cfg.at("d"), W = cfg.at("W");
  const double E = cfg.at("E");
  const int trials = cfg.at("trials");
  const bool zcal = cfg.value("zcal", true);
  const auto ladder = cfg.at("eta_ladder").get<std::vector<double>>();
  const auto dist = distribution_from_string(cfg.at("dist"));
  const std::uint64_t master = cfg.at("seed").get<std::uint64_t>();
  const TorusShape shape(N, d);
  const auto profile = VarianceProfile::uniform(shape, W);
  const std::int64_t n = shape.size();
  const double wd = std::pow(static_cast<double>(W), d);

  Table table;
  table.header = {"N",     "d",   "W",   "eta",    "trial",
                  "seed",  "dev", "ratio", "zdefect"};
  std::vector<std::vector<std::vector<std::string>>> per_trial(
      static_cast<std::size_t>(trials));

  parallel_for(trials, worker_count(cfg, trials), [&](std::int64_t t) {
    const std::uint64_t seed_t = rng::trial_seed(master, t);
    const BandSample s = sample(profile, dist, seed_t);
    auto& rows = per_trial[static_cast<std::size_t>(t)];
    for (double eta : ladder) {
      const Complex z(E, eta);
      const auto params = SpectralParams::scalar(shape, z);
      const Resolvent res = resolvent(s, params);
      const Complex m = msc(z);
      const double dev = max_deviation(res.G, m);
      const double ratio = dev * std::sqrt(wd * eta);
      std::string zcell;
      if (zcal) {
        const Eigen::VectorXcd M = Eigen::VectorXcd::Constant(n, m);
        zcell = format_double(zcal_variables(s, res, M).cming_defect);
      }
      rows.push_back({fmt_int(N), fmt_int(d), fmt_int(W), format_double(eta),
                      fmt_int(t), fmt_int(static_cast<std::int64_t>(seed_t)),
                      format_double(dev), format_double(ratio), zcell});
    }
  });
  for (auto& rows : per_trial)
    for (auto& r : rows) table.rows.push_back(std::move(r));
  return {std::move(table), json::object()};
}

struct GridPoint {
  int N = 0, W = 0;
  double eta = 0.0;
};

std::vector<GridPoint> fluct_grid(const json& cfg) {
  const auto Ns = cfg.at("Ns").get<std::vector<int>>();
  auto Ws = cfg.at("Ws").get<std::vector<int>>();
  auto etas = cfg.at("etas").get<std::vector<double>>();
  if (Ns.empty()) throw ConfigError("fluctavg: empty grid");
  if (!Ws.empty() && Ws.size() != Ns.size())
    throw ConfigError("fluctavg: Ws must match Ns");
  if (!etas.empty() && etas.size() != Ns.size())
    throw ConfigError("fluctavg: etas must match Ns");
  std::vector<GridPoint> grid;
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    GridPoint g;
    g.N = Ns[i];
    g.W = Ws.empty() ? static_cast<int>(std::llround(std::pow(Ns[i], 0.75)))
                     : Ws[i];
    g.eta = etas.empty() ? 4.0 * g.W * g.W / (static_cast<double>(g.N) * g.N)
                         : etas[i];
    grid.push_back(g);
  }
  return grid;
}

ExperimentOutput run_fluctavg(const json& cfg) {
  const int d = cfg.at("d");
  const double E = cfg.at("E");
  const int trials = cfg.at("trials");
  const int n_resample = cfg.at("n_resample");
  const std::int64_t y_star = cfg.at("y_star").get<std::int64_t>();
  const std::string b_profile = cfg.at("b_profile");
  if (b_profile != "ones" && b_profile != "cosine")
    throw ConfigError("fluctavg: b_profile must be ones or cosine");
  const auto dist = distribution_from_string(cfg.at("dist"));
  const std::uint64_t master = cfg.at("seed").get<std::uint64_t>();
  const auto grid = fluct_grid(cfg);
  for (const auto& g : grid) {
    const TorusShape shape(g.N, d);
    if (shape.size() > cfg.value("budget", 4096))
      throw ConfigError("fluctavg: N^d exceeds the configured budget");
  }

  Table table;
  table.header = {"N",        "d",         "W",         "eta",
                  "trial",    "seed",      "absF",      "phi",
                  "gamma",    "bound_new", "bound_old", "ratio_new",
                  "ratio_old", "p_part",   "q_part"};
  const std::int64_t items =
      static_cast<std::int64_t>(grid.size()) * trials;
  table.rows.resize(static_cast<std::size_t>(items));

  parallel_for(items, worker_count(cfg, items), [&](std::int64_t item) {
    const auto gi = static_cast<std::size_t>(item / trials);
    const std::int64_t t = item % trials;
    const GridPoint g = grid[gi];
    const TorusShape shape(g.N, d);
    const auto profile = VarianceProfile::uniform(shape, g.W);
    const std::uint64_t seed_t = rng::trial_seed(master, item);
    const BandSample s = sample(profile, dist, seed_t);
    const Complex z(E, g.eta);
    const auto params = SpectralParams::scalar(shape, z);
    const Complex m = msc(z);
    const std::int64_t n = shape.size();
    const Eigen::VectorXcd M = Eigen::VectorXcd::Constant(n, m);
    const Eigen::VectorXd b =
        b_profile == "ones" ? b_ones(shape) : b_cosine(shape);
    const auto controls = ControlParams::theoretical(g.W, d, g.eta);

    std::string p_cell, q_cell;
    double absF = 0.0;
    FluctStat stat;
    if (n_resample > 0) {
      const Resolvent full = resolvent(s, params);
      const Eigen::VectorXd t_col = t_column(full, profile, y_star);
      stat = fluct_stat(full, M, t_col, b, y_star, controls);
      const auto pq = split_pq(s, full, M, t_col, b, y_star, n_resample);
      p_cell = format_double(pq.p_part);
      q_cell = format_double(pq.q_part);
    } else {
      // only the y_star column of G is needed
      Eigen::MatrixXcd A = s.H.cast<Complex>();
      A.diagonal() -= params.zvec;
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
      e(y_star) = 1.0;
      const Eigen::VectorXcd g_col = A.partialPivLu().solve(e);
      Eigen::VectorXd g2(n);
      for (std::int64_t x = 0; x < n; ++x) g2(x) = std::norm(g_col(x));
      const Eigen::VectorXd t_col = profile.apply(g2);
      double acc = 0.0;
      for (std::int64_t x = 0; x < n; ++x)
        acc += b(x) * (g2(x) - std::norm(m) * t_col(x));
      stat.value = acc;
      stat.controls = controls;
      const double phi2 = controls.phi * controls.phi;
      stat.bound_new = controls.gamma * controls.gamma * phi2 + 1.0;
      stat.bound_old = std::sqrt(static_cast<double>(n)) * phi2 +
                       static_cast<double>(n) * phi2 * phi2;
    }
    absF = std::abs(stat.value);
    table.rows[static_cast<std::size_t>(item)] = {
        fmt_int(g.N),
        fmt_int(d),
        fmt_int(g.W),
        format_double(g.eta),
        fmt_int(t),
        fmt_int(static_cast<std::int64_t>(seed_t)),
        format_double(absF),
        format_double(controls.phi),
        format_double(controls.gamma),
        format_double(stat.bound_new),
        format_double(stat.bound_old),
        format_double(absF / stat.bound_new),
        format_double(absF / stat.bound_old),
        p_cell,
        q_cell};
  });
  return {std::move(table), json::object()};
}

ExperimentOutput run_theta(const json& cfg) {
  const int N = cfg.at("N"), d = cfg.at("d");
  const double E = cfg.at("E");
  const auto W_list = cfg.at("W_list").get<std::vector<int>>();
  const auto eta_list = cfg.at("eta_list").get<std::vector<double>>();
  const TorusShape shape(N, d);

  Table table;
  table.header = {"d",        "N",     "W",     "eta",
                  "distance", "envelope", "bound", "ratio",
                  "fft_dense_reldiff"};
  json combos = json::array();
  for (int W : W_list) {
    const auto profile = VarianceProfile::uniform(shape, W);
    for (double eta : eta_list) {
      const Complex m = msc(Complex(E, eta));
      const ThetaKernel fft = theta_kernel(profile, m, ThetaMode::kFft);
      const ThetaKernel dense = theta_kernel(profile, m, ThetaMode::kDense);
      const Eigen::MatrixXd& F = fft.matrix();
      const Eigen::MatrixXd& D = dense.matrix();
      const double scale = D.cwiseAbs().maxCoeff();
      const double reldiff = (F - D).cwiseAbs().maxCoeff() / scale;
      const ProfileFit fit = profile_bound_check(F, shape, W, eta);
      for (const auto& row : fit.rows) {
        table.rows.push_back({fmt_int(d), fmt_int(N), fmt_int(W),
                              format_double(eta), fmt_int(row.distance),
                              format_double(row.envelope),
                              format_double(row.bound),
                              format_double(row.ratio),
                              format_double(reldiff)});
      }
      combos.push_back(json{{"W", W},
                            {"eta", eta},
                            {"fitted_C", fit.fitted_C},
                            {"lsq_c1", fit.c1},
                            {"lsq_c2", fit.c2},
                            {"fft_dense_reldiff", reldiff}});
    }
  }
  json extra;
  extra["combos"] = combos;
  return {std::move(table), std::move(extra)};
}

ExperimentOutput run_deloc(const json& cfg) {
  const int N = cfg.at("N"), d = cfg.at("d");
  const auto W_list = cfg.at("W_list").get<std::vector<int>>();
  const int trials = cfg.at("trials");
  const double eps = cfg.at("eps"), kappa = cfg.at("kappa");
  const int l = cfg.at("l");
  const auto dist = distribution_from_string(cfg.at("dist"));
  const std::uint64_t master = cfg.at("seed").get<std::uint64_t>();
  const TorusShape shape(N, d);

  Table table;
  table.header = {"N",     "d",        "W",       "seed",      "eps",
                  "kappa", "l",        "fraction", "supnorm",  "bulk_count"};
  const std::int64_t items =
      static_cast<std::int64_t>(W_list.size()) * trials;
  table.rows.resize(static_cast<std::size_t>(items));

  parallel_for(items, worker_count(cfg, items), [&](std::int64_t item) {
    const auto wi = static_cast<std::size_t>(item / trials);
    const int W = W_list[wi];
    const std::uint64_t seed_t = rng::trial_seed(master, item);
    const auto profile = VarianceProfile::uniform(shape, W);
    const BandSample s = sample(profile, dist, seed_t);
    const SpectralData spec = eigendecompose(s);
    const DelocReport rep = deloc_report(spec, shape, eps, kappa, l);
    table.rows[static_cast<std::size_t>(item)] = {
        fmt_int(N),
        fmt_int(d),
        fmt_int(W),
        fmt_int(static_cast<std::int64_t>(seed_t)),
        format_double(eps),
        format_double(kappa),
        fmt_int(l),
        format_double(rep.fraction),
        format_double(rep.supnorm),
        fmt_int(rep.bulk_count)};
  });
  return {std::move(table), json::object()};
}

ExperimentOutput run_walk(const json& cfg) {
  const int N = cfg.at("N"), d = cfg.at("d"), W = cfg.at("W");
  const int n = cfg.at("n");
  const int tail_N = cfg.at("tail_N"), tail_W = cfg.at("tail_W");
  const double tail_eta = cfg.at("tail_eta"), E = cfg.at("E");

  Table table;
  table.header = {"regime", "k", "distance", "mass", "bound", "ratio"};

  // CLT block: mass vs Gaussian over the comparison window.
  const TorusShape shape(N, d);
  const WalkStep step = WalkStep::uniform(W, d);
  const CltReport clt = clt_compare(step, n, shape);
  {
    const Eigen::VectorXd masses = s_power(step, n, shape);
    const Eigen::MatrixXd sigma = step.covariance();
    const Eigen::MatrixXd nsig_inv = (n * sigma).inverse();
    const double r2max = 9.0 * n * sigma.trace() / d;
    for (std::int64_t i = 0; i < shape.size(); ++i) {
      TorusPoint u = unflatten(i, shape);
      double r2 = 0.0;
      for (int c : u.coords) r2 += static_cast<double>(c) * c;
      if (r2 > r2max) continue;
      Eigen::VectorXd x(d);
      for (int a = 0; a < d; ++a) x(a) = u.coords[static_cast<std::size_t>(a)];
      const double gauss =
          clt.gaussian_peak * std::exp(-0.5 * x.dot(nsig_inv * x));
      table.rows.push_back({"clt", fmt_int(n),
                            fmt_int(static_cast<std::int64_t>(std::lround(
                                std::sqrt(r2)))),
                            format_double(masses(i)), format_double(gauss),
                            format_double(std::abs(masses(i) - gauss) /
                                          clt.gaussian_peak)});
    }
  }

  // Tail-sum block: truncated Neumann sum against the direct Theta row.
  const TorusShape tail_shape(tail_N, d);
  const auto tail_profile = VarianceProfile::uniform(tail_shape, tail_W);
  const WalkStep tail_step = WalkStep::from_profile(tail_profile);
  const Complex m = msc(Complex(E, tail_eta));
  const TailSumReport tail =
      theta_tail_sum(tail_step, m, tail_eta, tail_shape);
  const ThetaKernel theta = theta_kernel(tail_profile, m, ThetaMode::kFft);
  for (std::int64_t u = 0; u < tail_shape.size(); ++u) {
    const double direct = theta.row0()(u);
    const double diff = std::abs(tail.row(u) - direct);
    const double tol = 1e-6 * std::abs(direct) + tail.truncation_bound;
    table.rows.push_back({"tailsum", fmt_int(tail.K),
                          fmt_int(dist_flat(u, 0, tail_shape)),
                          format_double(tail.row(u)), format_double(direct),
                          format_double(diff / tol)});
  }

  json extra;
  extra["clt"] = {{"max_abs_err", clt.max_abs_err},
                  {"center_rel_err", clt.center_rel_err},
                  {"gaussian_peak", clt.gaussian_peak},
                  {"wraparound_ok", clt.wraparound_ok},
                  {"log_ratio", clt.log_ratio}};
  extra["tail"] = {{"K", tail.K},
                   {"truncation_bound", tail.truncation_bound}};
  if (tail.c_early) extra["tail"]["c_early"] = *tail.c_early;
  if (tail.c_middle) extra["tail"]["c_middle"] = *tail.c_middle;
  if (tail.c_late) extra["tail"]["c_late"] = *tail.c_late;
  return {std::move(table), std::move(extra)};
}

ExperimentOutput run_bootstrap(const json& cfg) {
  const int N = cfg.at("N"), d = cfg.at("d"), W = cfg.at("W");
  const int trials = cfg.at("trials");
  const double delta = cfg.at("delta"), E = cfg.at("E");
  double eta = cfg.at("eta");
  if (eta <= 0.0) eta = 4.0 * W * W / (static_cast<double>(N) * N);
  const auto dist = distribution_from_string(cfg.at("dist"));
  const std::uint64_t master = cfg.at("seed").get<std::uint64_t>();
  const TorusShape shape(N, d);

  // Regime gate: d >= 2 and N <= W^(1 + d/2) * N^0.1.
  const double limit =
      std::pow(static_cast<double>(W), 1.0 + 0.5 * d) *
      std::pow(static_cast<double>(N), kSlackExponent / 2.0);
  if (d < 2 || static_cast<double>(N) > limit)
    throw ConfigError("bootstrap: outside the regime d >= 2, N <= W^(1+d/2+)");

  const auto profile = VarianceProfile::uniform(shape, W);
  const Complex z(E, eta);
  const Complex m = msc(z);

  Table table;
  table.header = {"N",    "d",      "W",    "eta",   "trial", "seed",
                  "gm_max", "tmax", "ratio", "ok",   "strong_ok"};
  table.rows.resize(static_cast<std::size_t>(trials));
  const double slack = std::pow(static_cast<double>(N), kSlackExponent);
  const double wd2 = std::pow(static_cast<double>(W), -0.5 * d);

  parallel_for(trials, worker_count(cfg, trials), [&](std::int64_t t) {
    const std::uint64_t seed_t = rng::trial_seed(master, t);
    const BandSample s = sample(profile, dist, seed_t);
    const Resolvent res = resolvent(s, SpectralParams::scalar(shape, z));
    const double dev = max_deviation(res.G, m);
    const Eigen::MatrixXd T = t_matrix(res, profile);
    const double tmax = T.maxCoeff();
    const double ratio = dev * dev / tmax;
    table.rows[static_cast<std::size_t>(t)] = {
        fmt_int(N),
        fmt_int(d),
        fmt_int(W),
        format_double(eta),
        fmt_int(t),
        fmt_int(static_cast<std::int64_t>(seed_t)),
        format_double(dev),
        format_double(tmax),
        format_double(ratio),
        fmt_int(dev * dev <= slack * tmax ? 1 : 0),
        fmt_int(dev <= slack * wd2 ? 1 : 0)};
  });

  const Phi2FixedPoint fp = phi2_fixed_point(W, d, delta);
  json extra;
  extra["phi2"] = {{"value", fp.value},
                   {"closed_form", fp.closed_form},
                   {"steps", fp.steps}};
  return {std::move(table), std::move(extra)};
}

// ---------------------------------------------------------------------------
// Checks (computed from the table so merged runs can be re-evaluated)
// ---------------------------------------------------------------------------

std::pair<json, std::vector<CheckResult>> compute_checks(
    const std::string& exp, const json& cfg, const Table& table) {
  json summary;
  std::vector<CheckResult> checks;
  auto add = [&](const std::string& name, bool pass, double value,
                 double threshold, std::string detail = "") {
    checks.push_back({name, pass, value, threshold, std::move(detail)});
  };

  if (exp == "identities") {
    const int c = table.col("res_max");
    double worst = 0.0;
    for (std::size_t r = 0; r < table.rows.size(); ++r)
      worst = std::max(worst, table.num(r, c));
    summary["max_residual"] = worst;
    add("identities_max", worst < 1e-8, worst, 1e-8,
        "max of all exact-identity residuals");
  } else if (exp == "localaw") {
    const int cN = table.col("N"), cd = table.col("d"), cW = table.col("W");
    const int ce = table.col("eta"), cdev = table.col("dev"),
              cr = table.col("ratio");
    const int cz = table.col("zdefect");
    const double N = table.num(0, cN), d = table.num(0, cd),
                 W = table.num(0, cW);
    const double slack = std::pow(N, kSlackExponent);
    std::vector<double> lx, ly;
    std::int64_t ok = 0;
    std::map<double, std::vector<double>> zdef;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const double wde = std::pow(W, d) * table.num(r, ce);
      lx.push_back(std::log(wde));
      ly.push_back(std::log(table.num(r, cdev)));
      if (table.num(r, cr) <= slack) ++ok;
      const double z = table.num(r, cz);
      if (!std::isnan(z)) zdef[table.num(r, ce)].push_back(z);
    }
    const Regression reg = linear_regression(lx, ly);
    const double frac =
        static_cast<double>(ok) / static_cast<double>(table.rows.size());
    summary["slope"] = reg.slope;
    summary["ratio_pass_fraction"] = frac;
    add("slope", std::abs(reg.slope + 0.5) <= 0.1, reg.slope, -0.5,
        "pooled log-log slope of ||G - mI||_max vs W^d eta, target -0.5 +/- 0.1");
    add("ratio_quantile", frac >= 0.95, frac, 0.95,
        "fraction of trials with dev * sqrt(W^d eta) <= N^0.2");
    if (!zdef.empty()) {
      bool all = true;
      double worst_ratio = 0.0;
      json zsum = json::array();
      for (auto& [eta, v] : zdef) {
        const double med = median_of(v);
        const double bound = 10.0 / (std::pow(W, d) * eta);
        worst_ratio = std::max(worst_ratio, med / bound);
        if (med > bound) all = false;
        zsum.push_back(json{{"eta", eta}, {"median", med}, {"bound", bound}});
      }
      summary["zcal"] = zsum;
      add("zcal_median", all, worst_ratio, 1.0,
          "median max_x |G_xx - M - M^2 Z| <= 10 Phi^2 at every eta");
    }
  } else if (exp == "fluctavg") {
    const int cN = table.col("N"), cW = table.col("W"), ce = table.col("eta");
    const int cf = table.col("absF"), cbn = table.col("bound_new"),
              cro = table.col("ratio_old");
    const double dim = table.num(0, table.col("d"));
    struct Key {
      double N, W, eta;
      bool operator<(const Key& o) const {
        return std::tie(N, W, eta) < std::tie(o.N, o.W, o.eta);
      }
    };
    std::vector<Key> order;
    std::map<Key, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const Key k{table.num(r, cN), table.num(r, cW), table.num(r, ce)};
      if (!groups.count(k)) order.push_back(k);
      groups[k].push_back(r);
    }
    std::sort(order.begin(), order.end());
    bool bound_ok = true;
    double worst_frac = 1.0;
    std::vector<double> old_medians;
    json grid = json::array();
    for (const auto& k : order) {
      const auto& rows = groups[k];
      const double slack = std::pow(k.N, kSlackExponent);
      std::int64_t ok = 0;
      std::vector<double> absf, ro;
      for (auto r : rows) {
        const double f = table.num(r, cf);
        absf.push_back(f);
        ro.push_back(table.num(r, cro));
        if (f <= slack * table.num(r, cbn)) ++ok;
      }
      const double frac =
          static_cast<double>(ok) / static_cast<double>(rows.size());
      worst_frac = std::min(worst_frac, frac);
      if (frac < 0.95) bound_ok = false;
      old_medians.push_back(median_of(ro));
      grid.push_back(json{{"N", k.N},
                          {"W", k.W},
                          {"eta", k.eta},
                          {"median_absF", median_of(absf)},
                          {"q95_absF", quantile_of(absf, 0.95)},
                          {"bound_pass_fraction", frac},
                          {"median_ratio_old", old_medians.back()}});
    }
    summary["grid"] = grid;
    add("bound_quantile", bound_ok, worst_frac, 0.95,
        "|F| <= N^0.2 (Gamma^2 Phi^2 + 1) in >= 95% of trials at every grid point");
    if (order.size() >= 2) {
      bool decreasing = true;
      for (std::size_t i = 1; i < old_medians.size(); ++i)
        if (old_medians[i] >= old_medians[i - 1]) decreasing = false;
      add("old_ratio_decreasing", decreasing,
          old_medians.back() - old_medians.front(), 0.0,
          "median |F| / (N^(d/2) Phi^2 + N^d Phi^4) strictly decreases in N");
      // report the fitted slope of median |F| against Gamma^2 Phi^2
      std::vector<double> gx, gy;
      for (std::size_t i = 0; i < order.size(); ++i) {
        const double g2p2 = 1.0 / (std::pow(order[i].W, dim) *
                                   order[i].eta * order[i].eta);
        gx.push_back(std::log(g2p2));
        double med = 0.0;
        for (const auto& gj : grid)
          if (gj["N"] == order[i].N) med = gj["median_absF"];
        gy.push_back(std::log(med));
      }
      summary["median_vs_g2p2_slope"] = linear_regression(gx, gy).slope;
    }
  } else if (exp == "theta") {
    const int cW = table.col("W"), ce = table.col("eta"),
              cr = table.col("ratio"), cfd = table.col("fft_dense_reldiff");
    std::map<std::pair<double, double>, double> fitted;
    double fd = 0.0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      auto key = std::make_pair(table.num(r, cW), table.num(r, ce));
      fitted[key] = std::max(fitted[key], table.num(r, cr));
      fd = std::max(fd, table.num(r, cfd));
    }
    double worst = 0.0;
    json combos = json::array();
    for (auto& [k, v] : fitted) {
      worst = std::max(worst, v);
      combos.push_back(json{{"W", k.first}, {"eta", k.second}, {"fitted_C", v}});
    }
    summary["fitted"] = combos;
    summary["fft_dense_reldiff"] = fd;
    add("fitted_C", worst <= 10.0, worst, 10.0,
        "Theta_xy <= C (1/(N^d eta) + <x-y>^(2-d)/W^2) with C <= 10, every entry");
    add("fft_dense", fd <= 1e-9, fd, 1e-9,
        "fft and dense Theta agree (relative to the max entry)");
  } else if (exp == "deloc") {
    const int cW = table.col("W"), cf = table.col("fraction");
    std::map<double, std::vector<double>> byW;
    for (std::size_t r = 0; r < table.rows.size(); ++r)
      byW[table.num(r, cW)].push_back(table.num(r, cf));
    std::vector<double> means;
    json per = json::array();
    for (auto& [w, v] : byW) {
      double mean = 0.0;
      for (double f : v) mean += f;
      mean /= static_cast<double>(v.size());
      means.push_back(mean);
      per.push_back(json{{"W", w}, {"mean_fraction", mean}});
    }
    summary["fractions"] = per;
    bool mono = true;
    for (std::size_t i = 1; i < means.size(); ++i)
      if (means[i] > means[i - 1] + 1e-12) mono = false;
    add("fraction_monotone", mono, means.empty() ? 0.0 : means.back(), 0.0,
        "mean localization fraction non-increasing in W");
    add("fraction_cap", !means.empty() && means.back() <= 0.5,
        means.empty() ? 1.0 : means.back(), 0.5,
        "mean fraction at the largest W <= 0.5");
  } else if (exp == "walk") {
    const int creg = table.col("regime"), cd = table.col("distance");
    const int cm = table.col("mass"), cb = table.col("bound"),
              cr = table.col("ratio");
    double center = 0.0, sup = 0.0, peak = 0.0, tail_worst = 0.0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::string& reg = table.rows[r][static_cast<std::size_t>(creg)];
      if (reg == "clt") {
        peak = std::max(peak, table.num(r, cb));
        sup = std::max(sup, std::abs(table.num(r, cm) - table.num(r, cb)));
        if (table.num(r, cd) == 0.0)
          center = std::abs(table.num(r, cm) - table.num(r, cb)) /
                   table.num(r, cb);
      } else if (reg == "tailsum") {
        tail_worst = std::max(tail_worst, table.num(r, cr));
      }
    }
    summary["clt_center_rel_err"] = center;
    summary["clt_sup_abs_err"] = sup;
    summary["tail_worst_ratio"] = tail_worst;
    add("clt_center", center <= 0.05, center, 0.05,
        "relative error at x = 0 <= 5%");
    add("clt_sup", sup <= 0.05 * peak, sup, 0.05 * peak,
        "sup absolute error <= 5% of the Gaussian peak");
    add("tail_match", tail_worst <= 1.0, tail_worst, 1.0,
        "|tail sum - Theta| <= 1e-6 |Theta| + truncation remainder, entrywise");
  } else if (exp == "bootstrap") {
    const int cok = table.col("ok"), cs = table.col("strong_ok");
    std::int64_t ok = 0, strong = 0;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      if (table.num(r, cok) != 0.0) ++ok;
      if (table.num(r, cs) != 0.0) ++strong;
    }
    const double frac =
        static_cast<double>(ok) / static_cast<double>(table.rows.size());
    summary["selfimprove_pass_fraction"] = frac;
    summary["strong_pass_fraction"] =
        static_cast<double>(strong) / static_cast<double>(table.rows.size());
    add("selfimprove_quantile", frac >= 0.9, frac, 0.9,
        "||G - M||_max^2 <= N^0.2 ||T||_max in >= 90% of trials");
    const Phi2FixedPoint fp =
        phi2_fixed_point(cfg.at("W"), cfg.at("d"), cfg.at("delta"));
    const double err = std::abs(fp.value - fp.closed_form);
    summary["phi2"] = {{"value", fp.value},
                       {"closed_form", fp.closed_form},
                       {"steps", fp.steps}};
    add("phi2_exact", err <= 1e-12, err, 1e-12,
        "iterated Phi map agrees with W^(-d/2)/(1 - W^(-delta/2))");
  }
  return {std::move(summary), std::move(checks)};
}

ExperimentOutput dispatch(const std::string& exp, const json& cfg) {
  if (exp == "identities") return run_identities(cfg);
  if (exp == "localaw") return run_localaw(cfg);
  if (exp == "fluctavg") return run_fluctavg(cfg);
  if (exp == "theta") return run_theta(cfg);
  if (exp == "deloc") return run_deloc(cfg);
  if (exp == "walk") return run_walk(cfg);
  if (exp == "bootstrap") return run_bootstrap(cfg);
  throw ConfigError("unknown experiment: " + exp);
}

void write_table(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(table.header[i]);
  }
  out << "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(row[i]);
    }
    out << "\r\n";
  }
}

Table read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cell += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        cells.push_back(std::move(cell));
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.push_back(std::move(cell));
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

}  // namespace

json default_config(const std::string& experiment) {
  return default_config(experiment, true);
}

json effective_config(const std::string& experiment, const json& file_config,
                      const json& overrides) {
  json cfg = default_config(experiment, true);
  for (const json* layer : {&file_config, &overrides}) {
    for (auto it = layer->begin(); it != layer->end(); ++it) {
      if (it.key() == "experiment") continue;
      cfg[it.key()] = it.value();
    }
  }
  validate_config(cfg);
  return cfg;
}

RunResult run_experiment(const json& config) {
  validate_config(config);
  const std::string exp = config.at("experiment");
  ExperimentOutput out = dispatch(exp, config);
  auto [summary, checks] = compute_checks(exp, config, out.table);
  for (auto it = out.extra_summary.begin(); it != out.extra_summary.end(); ++it)
    summary[it.key()] = it.value();

  const std::string dir = config.at("out");
  std::filesystem::create_directories(dir);
  RunResult result;
  result.records_path = dir + "/records.csv";
  result.manifest_path = dir + "/manifest.json";
  write_table(out.table, result.records_path);

  json manifest;
  manifest["schema_version"] = kManifestSchemaVersion;
  manifest["tool"] = "bandlab";
  manifest["version"] = kVersion;
  manifest["timestamp"] = now_iso();
  manifest["experiment"] = exp;
  manifest["config"] = config;
  manifest["master_seed"] = config.at("seed");
  manifest["records_csv"] = "records.csv";
  manifest["rows"] = out.table.rows.size();
  {
    json seeds = json::array();
    for (std::size_t i = 0; i < out.table.header.size(); ++i) {
      if (out.table.header[i] != "seed") continue;
      std::string last;
      for (const auto& row : out.table.rows)
        if (row[i] != last) {
          seeds.push_back(std::strtoull(row[i].c_str(), nullptr, 10));
          last = row[i];
        }
      break;
    }
    manifest["trial_seeds"] = seeds;
  }
  manifest["summary"] = summary;
  json jchecks = json::array();
  bool pass = true;
  for (const auto& c : checks) {
    pass = pass && c.pass;
    jchecks.push_back(json{{"name", c.name},
                           {"pass", c.pass},
                           {"value", c.value},
                           {"threshold", c.threshold},
                           {"detail", c.detail}});
  }
  manifest["checks"] = jchecks;
  manifest["pass"] = pass;
  result.manifest = manifest;
  result.pass = pass;
  std::ofstream mf(result.manifest_path, std::ios::binary);
  mf << manifest.dump(2) << "\n";
  return result;
}

json summarize(const std::vector<std::string>& manifest_paths) {
  if (manifest_paths.empty()) throw ConfigError("summarize: no manifests");
  Table merged;
  std::string experiment;
  json ref_cfg;
  std::int64_t runs = 0;
  for (const auto& path : manifest_paths) {
    std::ifstream in(path);
    if (!in) throw ConfigError("summarize: cannot open " + path);
    json mf = json::parse(in);
    if (mf.value("schema_version", -1) != kManifestSchemaVersion)
      throw ConfigError("summarize: schema-version mismatch in " + path);
    if (experiment.empty()) {
      experiment = mf.at("experiment");
      ref_cfg = mf.at("config");
    } else {
      if (mf.at("experiment") != experiment)
        throw ConfigError("summarize: experiments differ");
      json a = ref_cfg, b = mf.at("config");
      for (const char* k : {"seed", "trials", "out", "threads"}) {
        a.erase(k);
        b.erase(k);
      }
      if (a != b)
        throw ConfigError("summarize: manifest configs differ beyond seed/trials");
    }
    const auto dir = std::filesystem::path(path).parent_path();
    Table t = read_table(
        (dir / mf.at("records_csv").get<std::string>()).string());
    if (merged.header.empty()) {
      merged.header = t.header;
    } else if (merged.header != t.header) {
      throw ConfigError("summarize: record schemas differ");
    }
    for (auto& r : t.rows) merged.rows.push_back(std::move(r));
    ++runs;
  }
  auto [summary, checks] = compute_checks(experiment, ref_cfg, merged);
  json out;
  out["experiment"] = experiment;
  out["runs"] = runs;
  out["total_rows"] = merged.rows.size();
  out["summary"] = summary;
  json jchecks = json::array();
  bool pass = true;
  for (const auto& c : checks) {
    pass = pass && c.pass;
    jchecks.push_back(json{{"name", c.name},
                           {"pass", c.pass},
                           {"value", c.value},
                           {"threshold", c.threshold},
                           {"detail", c.detail}});
  }
  out["checks"] = jchecks;
  out["pass"] = pass;
  return out;
}

}  // namespace bandlab
