// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Runs single-threaded.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "cloud3d/augment.hpp"
#include "cloud3d/evalbench.hpp"
#include "cloud3d/features.hpp"
#include "cloud3d/pipeline.hpp"
#include "cloud3d/postproc.hpp"
#include "test_support.hpp"

using namespace cloud3d;
using cloud3d::testing::max_abs_diff;
using cloud3d::testing::profile_relative_error;
using cloud3d::testing::random_truth;
using cloud3d::testing::uniform;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// 1 ---------------------------------------------------------------------------
Outcome schema_shapes() {
  const VerticalGrid g = make_l137_grid();
  const Window w = window_of(g);
  const FeatureSchema lw(Component::Longwave, w.n_fl);
  const FeatureSchema sw(Component::Shortwave, w.n_fl);
  std::ostringstream s;
  s << "window " << w.n_fl << " FL, LW inputs " << lw.input_len() << ", SW inputs " << sw.input_len();
  return {w.n_fl == 90 && lw.input_len() == 271 && sw.input_len() == 182, s.str()};
}

// 2 ---------------------------------------------------------------------------
Outcome postproc_round_trip() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  const PhysConsts c;
  double worst_flux = 0.0, worst_heat = 0.0;
  int n = 0;
  for (Component comp : {Component::Longwave, Component::Shortwave}) {
    for (int i = 0; i < 1000; ++i, ++n) {
      const auto truth = random_truth(rng, comp, 90);
      const PostprocessResult r = postprocess_detailed(truth.targets, truth.grid, c);
      worst_flux = std::max({worst_flux, max_abs_diff(r.fluxes.up, truth.fluxes.up),
                             max_abs_diff(r.fluxes.down, truth.fluxes.down)});
      worst_heat = std::max(worst_heat, profile_relative_error(r.fluxes.heat, r.rescaled.heat));
    }
  }
  const double secs = seconds_since(t0);
  return {worst_flux < 1e-10 && worst_heat < 1e-12 && secs < 10.0,
          std::to_string(n) + " truths, " +
              fmt("max flux error %.2e W m-2, max heating rel. error %.2e, %.2f s", worst_flux,
                  worst_heat, secs)};
}

// 3 ---------------------------------------------------------------------------
Outcome capping() {
  std::mt19937_64 rng(3);
  const PhysConsts c;
  bool ok = true;
  std::string detail;
  const auto sum = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s;
  };
  for (double ratio : {4.0, 0.25, 0.51, 0.8, 1.0, 1.7, 1.99}) {
    const auto truth = random_truth(rng, Component::Longwave, 60);
    EffectTargets t = truth.targets;
    const double d_s = divergence_from_scalar_lw(t.scalar);
    const double d_h = divergence_from_heating(t.heat, truth.grid, c).total;
    for (auto& h : t.heat) h *= d_s / (ratio * d_h);
    const PostprocessResult r = postprocess_detailed(t, truth.grid, c);
    const double agree = std::abs(divergence_from_scalar_lw(r.rescaled.scalar) - sum(r.rescaled.delta_net));
    bool case_ok;
    if (ratio == 4.0 || ratio == 0.25) {
      const double expect = ratio > 1 ? 2.0 : 0.5;
      case_ok = r.rescaled.factor == expect && agree <= 1e-12 * std::abs(d_s);
    } else {
      case_ok = r.rescaled.scalar == t.scalar;
    }
    ok = ok && case_ok;
    detail += fmt("%g->c=%g ", ratio, r.rescaled.factor);
  }
  return {ok, detail + "(scalars untouched inside [0.5, 2])"};
}

// 4 ---------------------------------------------------------------------------
Outcome gradients() {
  int nets = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 24; ++seed, ++nets) {
    std::mt19937_64 rng(seed);
    const Eigen::Index in = 2 + static_cast<Eigen::Index>(rng() % 5);
    const Eigen::Index hid = 2 + static_cast<Eigen::Index>(rng() % 6);
    const Eigen::Index out = 1 + static_cast<Eigen::Index>(rng() % 4);
    Network net = Network::he_uniform(in, {hid, hid}, out, rng());
    for (auto& l : net.layers()) {
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = uniform(rng, -0.5, 0.5);
    }
    Matrix x(6, in), y(6, out);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1, 1);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = uniform(rng, -1, 1);
    const double l1 = 1e-3, l2 = 1e-3, h = 1e-5;
    const auto lg = loss_and_gradients(net, x, y, l1, l2);
    const auto loss = [&] { return loss_and_gradients(net, x, y, l1, l2).loss; };
    const auto check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double fp = loss();
      param = saved - h;
      const double fm = loss();
      param = saved;
      const double fd = (fp - fm) / (2 * h);
      worst = std::max(worst, std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-8}));
    };
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
      Layer& l = net.layers()[k];
      for (Eigen::Index i = 0; i < l.weights.size(); ++i) check(l.weights.data()[i], lg.grads.weights[k].data()[i]);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) check(l.bias(i), lg.grads.bias[k](i));
    }
  }
  return {worst < 1e-4 && nets >= 20,
          std::to_string(nets) + " nets, " + fmt("max relative error %.2e", worst)};
}

// 5 ---------------------------------------------------------------------------
struct TrainedPair {
  MlpModel lw;
  MlpModel sw;
};

Outcome end_to_end(TrainedPair& out) {
  const auto t0 = Clock::now();
  SynthOptions so;
  so.profiles = 2000;
  so.seed = 5;
  const auto profiles = synthesize_profiles(so);
  const PhysConsts c;
  std::vector<EffectTargets> lw_t, sw_t;
  std::vector<ToyTruth> truth;
  for (const auto& p : profiles) {
    truth.push_back(toy_truth(p, c));
    lw_t.push_back(truth.back().lw);
    sw_t.push_back(truth.back().sw);
  }
  const DataSplit split = split_60_20_20(profiles.size(), 5);

  FitOptions opts;
  opts.train.seed = 5;
  opts.train.batch_size = 32;
  opts.hidden = reference_hidden(Component::Longwave);
  FitResult lw = fit_model(profiles, lw_t, split, Component::Longwave, opts, c);
  opts.hidden = reference_hidden(Component::Shortwave);
  FitResult sw = fit_model(profiles, sw_t, split, Component::Shortwave, opts, c);

  // Pool up/down effects of both components on the full grid over the test set.
  std::vector<AtmosphericProfile> test;
  for (std::size_t r : split.test) test.push_back(profiles[r]);
  const auto pred = predict_effects(lw.model, sw.model, test);
  double abs_err = 0.0, abs_sig = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < test.size(); ++k) {
    const ToyTruth& t = truth[split.test[k]];
    const auto& g = test[k].grid;
    const auto lw_full = extend_to_full(t.lw_fluxes.up, t.lw_fluxes.down, std::nullopt, t.lw_fluxes.heat, g, c);
    const auto sw_full = extend_to_full(t.sw_fluxes.up, t.sw_fluxes.down, std::nullopt, t.sw_fluxes.heat, g, c);
    const std::pair<const Profile1D*, const Profile1D*> pairs[] = {
        {&lw_full.up, &pred[k].lw.up}, {&lw_full.down, &pred[k].lw.down},
        {&sw_full.up, &pred[k].sw.up}, {&sw_full.down, &pred[k].sw.down}};
    for (const auto& [sig, prd] : pairs) {
      for (std::size_t j = 0; j < sig->size(); ++j) {
        abs_err += std::abs((*prd)[j] - (*sig)[j]);
        abs_sig += std::abs((*sig)[j]);
        ++count;
      }
    }
  }
  const double ratio = abs_err / abs_sig;
  const double secs = seconds_since(t0);
  std::string detail = fmt("test flux MAE %.4f W m-2 = %.1f %% of mean |signal| %.4f W m-2; ",
                           abs_err / static_cast<double>(count), 100 * ratio,
                           abs_sig / static_cast<double>(count)) +
                       "epochs LW " + std::to_string(lw.training.history.size()) + ", SW " +
                       std::to_string(sw.training.history.size()) + fmt(", %.0f s", secs);
  out = {lw.model, sw.model};
  return {ratio <= 0.30 && secs < 900.0, detail};
}

// 6 ---------------------------------------------------------------------------
Outcome early_stopping() {
  std::mt19937_64 rng(6);
  const Eigen::Index in = 5, outd = 3;
  Matrix x(300, in), y(300, outd);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index i = 0; i < in; ++i) x(r, i) = uniform(rng, -1, 1);
    for (Eigen::Index o = 0; o < outd; ++o) {
      y(r, o) = std::sin(2 * x(r, o)) + x(r, o + 1) * x(r, o + 2) + 0.3 * uniform(rng, -1, 1);
    }
  }
  const Matrix xt = x.topRows(200), yt = y.topRows(200), xv = x.bottomRows(100), yv = y.bottomRows(100);
  TrainConfig cfg;
  cfg.max_epochs = 1000;
  cfg.patience = 50;
  cfg.batch_size = 16;
  cfg.seed = 11;
  cfg.adam.learning_rate = 1e-2;
  const Network init = Network::he_uniform(in, {32, 32}, outd, 12);
  const TrainResult a = train(init, xt, yt, xv, yv, cfg);
  const TrainResult b = train(init, xt, yt, xv, yv, cfg);
  double min_val = std::numeric_limits<double>::infinity();
  for (const auto& e : a.history) min_val = std::min(min_val, e.val_loss);
  const double returned = mse(a.network, xv, yv);
  const bool deterministic = a.network == b.network && a.history == b.history;
  const bool ok = returned == min_val && a.best_val_loss == min_val && deterministic;
  return {ok, std::to_string(a.history.size()) + " epochs, best epoch " + std::to_string(a.best_epoch) +
                  (a.stopped_early ? " (stopped early)" : "") +
                  fmt(", returned val MSE %.6g vs min %.6g", returned, min_val) +
                  (deterministic ? ", repeat bitwise identical" : ", repeat differs")};
}

// 7 ---------------------------------------------------------------------------
Outcome augmentation() {
  // Count and provenance only matter here, so coarse columns keep memory small.
  std::mt19937_64 rng(7);
  std::vector<AtmosphericProfile> base(13702);
  for (auto& p : base) {
    p.grid = cloud3d::testing::random_grid(rng, 8);
    for (int i = 0; i < 8; ++i) {
      p.temperature.push_back(uniform(rng, 200, 300));
      p.cloud_fraction.push_back(uniform(rng, 0, 1));
      p.q_liquid.push_back(uniform(rng, 0, 1e-4));
      p.q_ice.push_back(uniform(rng, 0, 1e-4));
      p.r_liquid.push_back(1e-5);
      p.r_ice.push_back(5e-5);
    }
    p.albedo = uniform(rng, 0, 1);
    p.mu0 = uniform(rng, -1, 1);
  }
  const auto aug = augment_scalars(base, 9, 77);
  std::set<double> alphas, mus;
  for (const auto& p : base) {
    alphas.insert(p.albedo);
    mus.insert(p.mu0);
  }
  bool fields_equal = true, from_sets = true;
  for (std::size_t i = 0; i < aug.size(); ++i) {
    const auto& src = base[i % base.size()];
    AtmosphericProfile masked = aug[i];
    masked.albedo = src.albedo;
    masked.mu0 = src.mu0;
    fields_equal = fields_equal && masked == src;
    from_sets = from_sets && alphas.count(aug[i].albedo) && mus.count(aug[i].mu0);
  }
  return {aug.size() == 137020 && fields_equal && from_sets,
          std::to_string(base.size()) + " -> " + std::to_string(aug.size()) + " records" +
              (fields_equal ? ", non-scalar fields identical" : ", FIELD MISMATCH") +
              (from_sets ? ", scalars drawn from originals" : ", FOREIGN SCALAR")};
}

// 8 ---------------------------------------------------------------------------
Outcome metrics() {
  const double pct = *percentage(0.00048, 0.55);
  const bool known_value = std::abs(pct - 0.087) < 0.0005;
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix s(40, 30), p(40, 30);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      s.data()[i] = uniform(rng, -5, 8);
      p.data()[i] = s.data()[i] + uniform(rng, -2, 2);
    }
    const BulkStats b = bulk_stats(s, p);
    double ss = 0, se = 0, as = 0, ae = 0;
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      for (Eigen::Index c = 0; c < s.cols(); ++c) {
        ss += s(r, c);
        se += p(r, c) - s(r, c);
        as += std::abs(s(r, c));
        ae += std::abs(p(r, c) - s(r, c));
      }
    }
    const double n = static_cast<double>(s.size());
    worst = std::max({worst, std::abs(b.mean_signal - ss / n), std::abs(b.mean_error - se / n),
                      std::abs(b.mabs_signal - as / n), std::abs(b.mabs_error - ae / n),
                      std::abs(*b.pct_error - 100 * (se / n) / (ss / n)) * 1e-2,
                      std::abs(*b.mabs_pct_error - 100 * (ae / n) / (as / n)) * 1e-2});
  }
  return {known_value && worst < 1e-12,
          fmt("100*0.00048/0.55 = %.3f %%, max deviation from naive reference %.2e", pct, worst)};
}

// 9 ---------------------------------------------------------------------------
Outcome benchmark(const TrainedPair& models) {
  SynthOptions so;
  so.profiles = 1000;
  so.seed = 9;
  const auto base = synthesize_profiles(so);
  std::vector<AtmosphericProfile> batch;
  for (int r = 0; r < 10; ++r) batch.insert(batch.end(), base.begin(), base.end());

  std::vector<EffectTargets> lw_t, sw_t;
  std::size_t done = 0;
  const std::vector<BenchStage> stages = {
      {"inference", [&] {
         lw_t = predict_targets(models.lw, batch);
         sw_t = predict_targets(models.sw, batch);
       }},
      {"postprocess", [&] {
         done = 0;
         for (std::size_t i = 0; i < batch.size(); ++i) {
           done += effects_to_full_grid(lw_t[i], batch[i], models.lw.constants).up.size() > 0;
           done += effects_to_full_grid(sw_t[i], batch[i], models.sw.constants).up.size() > 0;
         }
       }}};
  const BenchReport r = bench(stages, batch.size(), 5, 10);
  const double rel = r.std_ms_per_profile / r.mean_ms_per_profile;
  const bool ok = r.repeats >= 3 && r.profiles == 10000 && done == 20000 && lw_t.size() == 10000 && rel < 0.2;
  return {ok, r.summary() + fmt(" over %g repeats of %g profiles (std/mean %.3f)", r.repeats,
                                static_cast<double>(r.profiles), rel) +
                  fmt("; inference %.3g ms, postprocess %.3g ms per profile", r.stages[0].mean_ms_per_profile,
                      r.stages[1].mean_ms_per_profile)};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int n, const char* name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d [%s]: %s -- %s\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  };

  TrainedPair models;
  report(1, "schema shapes", schema_shapes);
  report(2, "postprocessing round trip", postproc_round_trip);
  report(3, "capping", capping);
  report(4, "gradient check", gradients);
  report(5, "end-to-end learning", [&] { return end_to_end(models); });
  report(6, "early stopping", early_stopping);
  report(7, "augmentation", augmentation);
  report(8, "metrics oracle", metrics);
  report(9, "benchmark", [&] { return benchmark(models); });
  std::printf("%d of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
