#include <algorithm>
#include <cmath>
#include <random>

#include "triage/errors.hpp"
#include "triage/seeds.hpp"
#include "triage/synth.hpp"

namespace triage {

namespace {

std::string patient_name(int i) {
  std::string id = std::to_string(i + 1);
  return "P" + std::string(4 - std::min<std::size_t>(4, id.size()), '0') + id;
}

}  // namespace

std::vector<PatientPlan> plan_cohort(const CohortSpec& spec, std::uint64_t seed) {
  if (spec.n_patients < 1 || spec.n_positive < 0 || spec.n_positive > spec.n_patients || spec.n_noisy_patients < 0 ||
      spec.hours_min < 1 || spec.hours_max < spec.hours_min || !(spec.segment_s > 0.0))
    throw ParameterError("cohort spec: inconsistent counts");
  const int total = spec.n_patients + spec.n_noisy_patients;
  std::mt19937_64 rng(derive_seed(seed, "cohort-plan"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<int> order(static_cast<std::size_t>(spec.n_patients));
  for (int i = 0; i < spec.n_patients; ++i) order[static_cast<std::size_t>(i)] = i;
  portable_shuffle(rng, order);
  std::vector<bool> positive(static_cast<std::size_t>(total), false);
  for (int i = 0; i < spec.n_positive; ++i) positive[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  const double e = spec.effect;
  std::vector<PatientPlan> plan;
  for (int i = 0; i < total; ++i) {
    PatientPlan p;
    p.patient_id = patient_name(i);
    p.positive = positive[static_cast<std::size_t>(i)];
    // seizure patients skew younger
    p.meta.patient_id = p.patient_id;
    p.meta.age = std::round(17.5 * std::pow(unif(rng), p.positive ? 1.4 : 1.0) * 10.0) / 10.0;
    p.meta.gender = unif(rng) < 0.5 ? Gender::male : Gender::female;
    for (std::size_t f = 0; f < PatientMeta::kFlagCount; ++f) {
      const auto name = PatientMeta::kFlagNames[f];
      double prob = 0.15;
      if (name == "Epilepsy") prob = p.positive ? 0.6 : 0.25;
      if (name == "DevDelay") prob = p.positive ? 0.5 : 0.3;
      const double draw = unif(rng);
      if (unif(rng) < 0.05) p.meta.flags[f] = std::nullopt;
      else p.meta.flags[f] = draw < prob;
    }
    const double shift = p.positive ? e : 0.0;
    p.hr_bpm = 128.0 - 2.6 * p.meta.age + 7.0 * gauss(rng) + 10.0 * shift;
    p.hrv_level = 0.045 * std::exp(0.25 * gauss(rng)) * (1.0 - 0.35 * shift);
    p.qrs_width_scale = 1.0 + 0.05 * gauss(rng) + 0.12 * shift;
    p.t_amplitude_mv = 0.3 * std::exp(0.15 * gauss(rng)) * (1.0 - 0.25 * shift);

    const int hours = spec.hours_min + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(
                                                                               spec.hours_max - spec.hours_min + 1)));
    const bool all_noise = i >= spec.n_patients;
    for (int h = 0; h < hours; ++h) p.noisy_hours.push_back(all_noise || unif(rng) < spec.noisy_hour_rate);

    // Events fall after the recorded hours so the planted signal is interictal,
    // unless the recording runs past 40 h.
    double lo = hours * spec.segment_s + 600.0;
    double hi = 40.0 * 3600.0;
    if (lo + 900.0 > hi) {
      lo = 600.0;
      hi = 47.0 * 3600.0;
    }
    if (p.positive) {
      const double t0 = lo + (hi - lo) * unif(rng);
      p.events.push_back({p.patient_id, t0, t0 + 360.0 + 300.0 * unif(rng), Manifestation::subclinical});
    } else if (unif(rng) < 0.2) {
      const double t0 = lo + (hi - lo) * unif(rng);
      p.events.push_back({p.patient_id, t0, t0 + 60.0 + 120.0 * unif(rng), Manifestation::clinical});
    }
    plan.push_back(std::move(p));
  }
  return plan;
}

std::vector<EcgRecord> synth_patient_records(const PatientPlan& p, const CohortSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, p.patient_id));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<EcgRecord> out;
  for (std::size_t h = 0; h < p.noisy_hours.size(); ++h) {
    SynthProfile prof;
    prof.patient_id = p.patient_id;
    prof.segment_id = "S" + std::to_string(100 + h).substr(1);
    prof.start_offset_s = static_cast<double>(h) * spec.segment_s;
    prof.fs = spec.fs;
    prof.duration_s = spec.segment_s;
    prof.mean_hr_bpm = std::clamp(p.hr_bpm + 3.0 * gauss(rng), 60.0, 190.0);
    prof.hrv_level = p.hrv_level;
    prof.resp_hz = std::clamp(0.25 + 0.05 * gauss(rng), 0.18, 0.38);
    prof.noise_mv = 0.01;
    prof.wander_mv = 0.05;
    prof.beat.qrs_width_scale = p.qrs_width_scale;
    prof.beat.t.amplitude_mv = p.t_amplitude_mv;
    prof.age_years = p.meta.age;
    if (p.noisy_hours[h]) prof.bursts.push_back({0.0, spec.segment_s, 1.5});
    out.push_back(synth_record(prof, derive_seed(seed, p.patient_id, h)).record);
  }
  return out;
}

Cohort plan_tables(const std::vector<PatientPlan>& plan) {
  Cohort c;
  for (const auto& p : plan) {
    c.meta.push_back(p.meta);
    c.events.insert(c.events.end(), p.events.begin(), p.events.end());
  }
  c.canonicalize();
  return c;
}

Cohort synth_cohort(const std::vector<PatientPlan>& plan, const CohortSpec& spec, std::uint64_t seed) {
  Cohort c = plan_tables(plan);
  for (const auto& p : plan) {
    auto recs = synth_patient_records(p, spec, seed);
    c.records.insert(c.records.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  c.canonicalize();
  return c;
}

}  // namespace triage
