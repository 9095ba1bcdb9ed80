#include "triage/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "triage/errors.hpp"

namespace triage {
namespace {

constexpr double kRefractoryS = 0.150;

struct PlacedWave {
  double amplitude;
  double center;  // absolute seconds
  double width;
};

struct PlacedBeat {
  PlacedWave p, q, r, s, t;
};

PlacedBeat place_beat(const BeatTemplate& b, double r_time, double rr) {
  const double warp = std::sqrt(rr / BeatTemplate::kReferenceRrS);
  const double k = b.qrs_width_scale;
  PlacedBeat out;
  out.p = {b.polarity * b.p.amplitude_mv, r_time + b.p.center_s, b.p.width_s};
  out.q = {b.polarity * b.q.amplitude_mv, r_time + b.q.center_s * k, b.q.width_s * k};
  out.r = {b.polarity * b.r.amplitude_mv, r_time + b.r.center_s, b.r.width_s * k};
  out.s = {b.polarity * b.s.amplitude_mv, r_time + b.s.center_s * k, b.s.width_s * k};
  out.t = {b.polarity * b.t.amplitude_mv, r_time + b.t.center_s * warp, b.t.width_s * warp};
  return out;
}

void add_gaussian(Eigen::Ref<Eigen::VectorXd> out, double fs, const PlacedWave& w) {
  if (w.amplitude == 0.0) return;
  const double half = 5.0 * w.width;
  const auto n = out.size();
  const auto lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil((w.center - half) * fs)));
  const auto hi = std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(std::floor((w.center + half) * fs)));
  const double inv = 1.0 / (2.0 * w.width * w.width);
  for (Eigen::Index i = lo; i <= hi; ++i) {
    const double d = static_cast<double>(i) / fs - w.center;
    out[i] += w.amplitude * std::exp(-d * d * inv);
  }
}

TrueFiducials truth_of(const PlacedBeat& pb, bool has_p) {
  constexpr double k = BeatTemplate::kBoundaryWidths;
  TrueFiducials f{};
  f.p_on = pb.p.center - k * pb.p.width;
  f.p_peak = pb.p.center;
  f.p_off = pb.p.center + k * pb.p.width;
  f.qrs_on = std::min(pb.q.center - k * pb.q.width, pb.r.center - k * pb.r.width);
  f.r_peak = pb.r.center;
  f.qrs_off = std::max(pb.s.center + k * pb.s.width, pb.r.center + k * pb.r.width);
  f.t_on = pb.t.center - k * pb.t.width;
  f.t_peak = pb.t.center;
  f.t_off = pb.t.center + k * pb.t.width;
  f.has_p = has_p;
  return f;
}

}  // namespace

std::vector<double> SynthResult::rr_s() const {
  std::vector<double> rr;
  for (std::size_t i = 1; i < beat_times_s.size(); ++i) rr.push_back(beat_times_s[i] - beat_times_s[i - 1]);
  return rr;
}

void render_beats(Eigen::Ref<Eigen::VectorXd> out, double fs, const BeatTemplate& beat,
                  const std::vector<double>& r_times_s, const std::vector<double>& rr_s) {
  for (std::size_t i = 0; i < r_times_s.size(); ++i) {
    const double rr = i < rr_s.size() ? rr_s[i] : BeatTemplate::kReferenceRrS;
    const PlacedBeat pb = place_beat(beat, r_times_s[i], rr);
    for (const auto* w : {&pb.p, &pb.q, &pb.r, &pb.s, &pb.t}) add_gaussian(out, fs, *w);
  }
}

SynthResult synth_record(const SynthProfile& profile, std::uint64_t seed) {
  if (!(profile.fs > 0.0) || !(profile.duration_s > 0.0) || !(profile.mean_hr_bpm > 0.0))
    throw ParameterError("synth profile: fs, duration and heart rate must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  const double rr_base = 60.0 / profile.mean_hr_bpm;
  const double resp_phase = two_pi * unif(rng);
  const double lf_phase = two_pi * unif(rng);
  // var(rel) = hrv^2: two sines at variance 1/4 each plus white noise at 1/2.
  const auto rel_mod = [&](double t) {
    return profile.hrv_level * (0.5 * std::numbers::sqrt2 * std::sin(two_pi * profile.resp_hz * t + resp_phase) +
                                0.5 * std::numbers::sqrt2 * std::sin(two_pi * 0.1 * t + lf_phase) +
                                std::sqrt(0.5) * gauss(rng));
  };
  const auto rise_at = [&](double t) {
    double rise = 0.0;
    for (const auto& e : profile.episodes)
      if (t >= e.onset_s && t < e.onset_s + e.duration_s) rise = std::max(rise, e.hr_rise);
    return rise;
  };

  // Beats start up to one RR before t = -1 s so the record edges are fully rendered.
  std::vector<double> all_times;
  std::vector<double> all_rr;
  double t = -1.0 - rr_base * unif(rng);
  double prev_rr = rr_base;
  while (t < profile.duration_s + 1.0) {
    all_times.push_back(t);
    all_rr.push_back(prev_rr);
    const double rr = rr_base * (1.0 + rel_mod(t)) / (1.0 + rise_at(t));
    if (rr < kRefractoryS)
      throw ParameterError("synth profile: RR interval " + std::to_string(rr * 1000.0) +
                           " ms falls below the 150 ms refractory period");
    prev_rr = rr;
    t += rr;
  }

  SynthResult out;
  EcgRecord& rec = out.record;
  rec.patient_id = profile.patient_id;
  rec.segment_id = profile.segment_id;
  rec.fs = profile.fs;
  rec.start_offset = profile.start_offset_s;
  const auto n = static_cast<Eigen::Index>(std::llround(profile.duration_s * profile.fs));
  rec.samples = Eigen::VectorXd::Zero(n);

  const bool has_p = profile.beat.p.amplitude_mv != 0.0;
  for (std::size_t i = 0; i < all_times.size(); ++i) {
    const PlacedBeat pb = place_beat(profile.beat, all_times[i], all_rr[i]);
    for (const auto* w : {&pb.p, &pb.q, &pb.r, &pb.s, &pb.t}) add_gaussian(rec.samples, profile.fs, *w);
    if (all_times[i] >= 0.0 && all_times[i] < profile.duration_s) {
      out.beat_times_s.push_back(all_times[i]);
      out.fiducials.push_back(truth_of(pb, has_p));
    }
  }

  const double w1 = two_pi * unif(rng);
  const double w2 = two_pi * unif(rng);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ts = static_cast<double>(i) / profile.fs;
    double v = profile.noise_mv * gauss(rng);
    v += profile.wander_mv * (std::sin(two_pi * 0.15 * ts + w1) + 0.5 * std::sin(two_pi * 0.05 * ts + w2));
    rec.samples[i] += v;
  }
  for (const auto& b : profile.bursts) {
    const auto lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::llround(b.start_s * profile.fs)));
    const auto hi = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(std::llround((b.start_s + b.duration_s) * profile.fs)));
    for (Eigen::Index i = lo; i < hi; ++i) rec.samples[i] += b.noise_mv * gauss(rng);
  }

  out.events = profile.annotations;
  if (profile.meta) {
    out.meta = *profile.meta;
  } else {
    out.meta.patient_id = profile.patient_id;
    out.meta.age = profile.age_years;
  }
  return out;
}

}  // namespace triage
