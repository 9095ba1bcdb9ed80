#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>

#include "triage/butterworth.hpp"
#include "triage/dsp.hpp"
#include "triage/errors.hpp"
#include "triage/synth.hpp"

using namespace triage;

namespace {

EcgRecord make_record(Eigen::VectorXd x, double fs = 250.0) {
  EcgRecord r;
  r.patient_id = "T";
  r.segment_id = "S";
  r.fs = fs;
  r.samples = std::move(x);
  return r;
}

Eigen::VectorXd sine(double f, double fs, double seconds) {
  const auto n = static_cast<Eigen::Index>(seconds * fs);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
  return x;
}

double steady_amplitude(const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  return y.segment(n / 4, n / 2).cwiseAbs().maxCoeff();
}

double magnitude(const SosCascade<double>& sos, double f, double fs) {
  const std::complex<double> zi = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
  std::complex<double> h = 1.0;
  for (const auto& s : sos) h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
  return std::abs(h);
}

/// Fraction of `a` that has a partner in `b` within tol samples (one-to-one).
double agreement(const std::vector<Eigen::Index>& a, const std::vector<Eigen::Index>& b, Eigen::Index tol) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t i = 0, j = 0, matched = 0;
  while (i < a.size() && j < b.size()) {
    if (std::abs(a[i] - b[j]) <= tol) {
      ++matched, ++i, ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(matched) / static_cast<double>(std::max(a.size(), b.size()));
}

}  // namespace

TEST_CASE("Butterworth design matches reference magnitudes") {
  // |H(f)| of a 5th-order 3-45 Hz band-pass at fs = 250 Hz, computed
  // independently with scipy.signal.butter / sosfreqz.
  const std::pair<double, double> reference[] = {
      {0.3, 7.365816777797878e-06}, {1.0, 0.0031246526930760175}, {3.0, 0.7071067811865587},
      {10.0, 0.9999999999122609},   {20.0, 0.9999988088499889},    {45.0, 0.7071067811865481},
      {60.0, 0.11823396830151697},  {100.0, 0.0002779013866054727}};
  const auto sos = butterworth_bandpass<double>(5, 3.0, 45.0, 250.0);
  CHECK(sos.size() == 5);
  for (const auto& [f, mag] : reference) CHECK(magnitude(sos, f, 250.0) == doctest::Approx(mag).epsilon(1e-7));
}

TEST_CASE("bandpass passband, stopband and zero phase") {
  const double fs = 250.0;
  const auto pass = bandpass(make_record(sine(10.0, fs, 10.0), fs));
  CHECK(pass.samples.size() == static_cast<Eigen::Index>(10 * fs));
  const double a_pass = steady_amplitude(pass.samples);
  CHECK(a_pass >= 0.9);
  CHECK(a_pass <= 1.0);

  const auto stop = bandpass(make_record(sine(0.3, fs, 40.0), fs));
  CHECK(steady_amplitude(stop.samples) < 0.1);

  Eigen::VectorXd impulse = Eigen::VectorXd::Zero(2501);
  impulse[1250] = 1.0;
  const auto y = bandpass(make_record(impulse, fs)).samples;
  const double peak = y.cwiseAbs().maxCoeff();
  double asym = 0.0;
  for (Eigen::Index k = 1; k < 1250; ++k) asym = std::max(asym, std::abs(y[1250 - k] - y[1250 + k]));
  CHECK(asym < 1e-9 * peak);

  SUBCASE("no phase shift on an in-band sine") {
    const auto x = sine(10.0, fs, 10.0);
    Eigen::Index lag_best = 0;
    double best = -1e300;
    for (Eigen::Index lag = -5; lag <= 5; ++lag) {
      double acc = 0.0;
      for (Eigen::Index i = 500; i < 2000; ++i) acc += x[i] * pass.samples[i + lag];
      if (acc > best) best = acc, lag_best = lag;
    }
    CHECK(lag_best == 0);
  }
}

TEST_CASE("bandpass is linear") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::VectorXd x(3000), y(3000);
  for (Eigen::Index i = 0; i < 3000; ++i) x[i] = g(rng), y[i] = g(rng);
  const double a = 1.7, b = -0.4;
  const auto lhs = bandpass(make_record(a * x + b * y)).samples;
  const Eigen::VectorXd rhs = a * bandpass(make_record(x)).samples + b * bandpass(make_record(y)).samples;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9 * rhs.cwiseAbs().maxCoeff());
}

TEST_CASE("bandpass rejects low sampling rates") {
  CHECK_THROWS_AS(bandpass(make_record(sine(1.0, 90.0, 5.0), 90.0)), ConfigError);
  CHECK_NOTHROW(bandpass(make_record(sine(1.0, 128.0, 5.0), 128.0)));
}

TEST_CASE("primary detector on clean synthetic ECG") {
  SynthProfile prof;
  prof.mean_hr_bpm = 60.0;
  prof.duration_s = 120.0;
  const auto s = synth_record(prof, 21);
  const auto filtered = bandpass(s.record);
  const auto beats = detect_rpeaks_primary(filtered);
  CHECK(std::abs(static_cast<long>(beats.size()) - static_cast<long>(s.beat_times_s.size())) <= 1);
  const auto t = beats.times_s();
  for (double tt : t) {
    double nearest = 1e9;
    for (double tr : s.beat_times_s) nearest = std::min(nearest, std::abs(tr - tt));
    CHECK(nearest <= 0.020);
  }
  for (double rr : beats.rr_ms()) CHECK(rr >= 150.0);
}

TEST_CASE("detectors on degenerate inputs") {
  const auto flat = make_record(Eigen::VectorXd::Constant(2500, 0.5));
  CHECK(detect_rpeaks_primary(bandpass(flat)).empty());
  CHECK(detect_rpeaks_secondary(bandpass(flat)).empty());
  CHECK(detect_rpeaks_primary(flat).empty());

  CHECK_THROWS_AS(detect_rpeaks_primary(make_record(Eigen::VectorXd::Zero(400))), InsufficientDataError);
  CHECK_THROWS_AS(detect_rpeaks_secondary(make_record(Eigen::VectorXd::Zero(400))), InsufficientDataError);

  SUBCASE("two beats 100 ms apart yield one detection") {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(1000);
    BeatTemplate beat;
    beat.p.amplitude_mv = 0.0;
    beat.t.amplitude_mv = 0.0;
    render_beats(x, 250.0, beat, {2.0, 2.1}, {0.6, 0.6});
    const auto beats = detect_rpeaks_primary(bandpass(make_record(x)));
    CHECK(beats.size() == 1);
  }
}

TEST_CASE("refine_rpeaks snaps to the dominant extremum") {
  SynthProfile prof;
  prof.duration_s = 30.0;
  prof.noise_mv = 0.0;
  prof.wander_mv = 0.0;
  prof.beat.polarity = -1.0;
  const auto s = synth_record(prof, 4);
  const double fs = s.record.fs;
  BeatSeries truth = BeatSeries::empty_for(s.record);
  for (std::size_t i = 0; i < s.beat_times_s.size(); ++i) {
    // true extremum sample of the negative R wave
    const auto c = static_cast<Eigen::Index>(std::lround(s.beat_times_s[i] * fs));
    Eigen::Index best = c;
    for (Eigen::Index k = c - 3; k <= c + 3; ++k)
      if (k >= 0 && k < s.record.size() && s.record.samples[k] < s.record.samples[best]) best = k;
    truth.peak_idx.push_back(best);
  }
  CHECK(dominant_polarity(s.record, truth) == -1);

  BeatSeries shifted = truth;
  for (auto& p : shifted.peak_idx) p += static_cast<Eigen::Index>(std::lround(0.010 * fs));
  const auto refined = refine_rpeaks(s.record, shifted);
  CHECK(refined.peak_idx == truth.peak_idx);
  CHECK(refine_rpeaks(s.record, truth).peak_idx == truth.peak_idx);

  SUBCASE("movement is bounded by the half window") {
    SynthProfile noisy = prof;
    noisy.noise_mv = 0.3;
    const auto r = synth_record(noisy, 9);
    const auto det = detect_rpeaks_primary(bandpass(r.record));
    const auto ref = refine_rpeaks(r.record, det);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      Eigen::Index closest = 1 << 30;
      for (auto p : det.peak_idx) closest = std::min<Eigen::Index>(closest, std::abs(p - ref.peak_idx[i]));
      CHECK(static_cast<double>(closest) <= 0.025 * fs);
    }
    for (double rr : ref.rr_ms()) CHECK(rr >= 150.0);
  }
}

TEST_CASE("secondary detector agrees on clean data and diverges under noise") {
  SynthProfile prof;
  prof.duration_s = 300.0;
  prof.mean_hr_bpm = 110.0;
  const auto s = synth_record(prof, 8);
  const auto f = bandpass(s.record);
  const auto a = detect_rpeaks_primary(f);
  const auto b = detect_rpeaks_secondary(f);
  const auto tol = static_cast<Eigen::Index>(0.050 * f.fs);
  CHECK(agreement(a.peak_idx, b.peak_idx, tol) >= 0.99);
  for (double rr : b.rr_ms()) CHECK(rr >= 150.0);

  // 0 dB in the noise-stress-test convention: signal power is
  // (QRS peak-to-peak)^2 / 8.
  const double p2p = prof.beat.r.amplitude_mv - prof.beat.s.amplitude_mv;
  SynthProfile noisy = prof;
  noisy.noise_mv = p2p / std::sqrt(8.0);
  const auto sn = synth_record(noisy, 8);
  const auto fn = bandpass(sn.record);
  CHECK(agreement(detect_rpeaks_primary(fn).peak_idx, detect_rpeaks_secondary(fn).peak_idx, tol) < 0.8);
}

TEST_CASE("both detectors recover after a noise burst") {
  SynthProfile prof;
  prof.duration_s = 400.0;
  prof.mean_hr_bpm = 120.0;
  prof.bursts = {{100.0, 150.0, 1.0}};
  const auto s = synth_record(prof, 9);
  const auto f = bandpass(s.record);
  const auto tol = static_cast<Eigen::Index>(0.050 * f.fs);
  const auto after = [&](const BeatSeries& b) {
    std::vector<Eigen::Index> out;
    for (auto p : b.peak_idx)
      if (p >= static_cast<Eigen::Index>(260.0 * f.fs)) out.push_back(p);
    return out;
  };
  std::vector<Eigen::Index> truth;
  for (double t : s.beat_times_s)
    if (t >= 260.0) truth.push_back(std::lround(t * f.fs));
  CHECK(agreement(after(detect_rpeaks_primary(f)), truth, tol) >= 0.99);
  CHECK(agreement(after(detect_rpeaks_secondary(f)), truth, tol) >= 0.99);
}

TEST_CASE("filter_nn hand cases") {
  const auto run = [](std::vector<double> rr, NnFilterConfig cfg = {}) {
    return filter_nn_intervals(rr, std::vector<double>(rr.size(), 0.0), cfg);
  };
  const auto all = run({800, 810, 790, 805});
  CHECK(all.nn_ms == std::vector<double>{800, 810, 790, 805});

  NnFilterConfig only_range;
  only_range.use_moving_average = only_range.use_quotient = false;
  const auto range = run({800, 2000, 810}, only_range);
  CHECK(range.keep_mask == std::vector<bool>{true, false, true});
  CHECK_FALSE(run({800, 790, 2000, 810, 805}).keep_mask[2]);

  NnFilterConfig only_quotient;
  only_quotient.use_range = only_quotient.use_moving_average = false;
  const auto q = run({1000, 1000, 400, 1000}, only_quotient);
  CHECK(q.keep_mask == std::vector<bool>{true, true, false, true});
  const auto all_gates = run({1000, 1000, 400, 1000});
  CHECK(all_gates.keep_mask == std::vector<bool>{true, true, false, true});
}

TEST_CASE("filter_nn gates are individually monotone") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(700.0, 120.0);
  std::bernoulli_distribution spike(0.05);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> rr(200);
    for (auto& v : rr) v = spike(rng) ? 2.2 * g(rng) : g(rng);
    const std::vector<double> t(rr.size(), 0.0);
    const auto full = filter_nn_intervals(rr, t);
    for (int gate = 0; gate < 3; ++gate) {
      NnFilterConfig cfg;
      if (gate == 0) cfg.use_range = false;
      if (gate == 1) cfg.use_moving_average = false;
      if (gate == 2) cfg.use_quotient = false;
      const auto relaxed = filter_nn_intervals(rr, t, cfg);
      for (std::size_t i = 0; i < rr.size(); ++i) CHECK((!full.keep_mask[i] || relaxed.keep_mask[i]));
    }
    // nn is the masked subsequence of rr
    std::vector<double> masked;
    for (std::size_t i = 0; i < rr.size(); ++i)
      if (full.keep_mask[i]) masked.push_back(rr[i]);
    CHECK(masked == full.nn_ms);
  }
}

TEST_CASE("noiseless end-to-end mean NN matches the generator") {
  SynthProfile prof;
  prof.duration_s = 300.0;
  prof.noise_mv = 0.0;
  prof.mean_hr_bpm = 95.0;
  const auto s = synth_record(prof, 2);
  const auto f = bandpass(s.record);
  const auto beats = refine_rpeaks(s.record, detect_rpeaks_primary(f));
  const auto nn = filter_nn(beats);
  REQUIRE(nn.size() > 100);
  const auto rr = s.rr_s();
  const double gen_mean = 1000.0 * std::accumulate(rr.begin(), rr.end(), 0.0) / static_cast<double>(rr.size());
  CHECK(std::abs(nn.nn().mean() - gen_mean) < 5.0);
}
