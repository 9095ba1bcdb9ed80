#include "triage/local.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "triage/cohort.hpp"
#include "triage/errors.hpp"
#include "triage/stats.hpp"

namespace triage {

std::string_view to_string(OsorioMode m) { return m == OsorioMode::osorio15 ? "osorio15" : "osorio30"; }

HrTrace baseline_hr(std::span<const double> rr_ms, std::span<const double> t_s, const BaselineConfig& cfg) {
  if (rr_ms.size() != t_s.size()) throw ParameterError("baseline_hr: length mismatch");
  if (rr_ms.empty() || t_s.back() - (t_s.front() - rr_ms.front() / 1000.0) < cfg.window_s)
    throw InsufficientDataError("baseline_hr: series shorter than the baseline window");
  HrTrace out;
  out.t_s.assign(t_s.begin(), t_s.end());
  out.rr_ms.assign(rr_ms.begin(), rr_ms.end());
  for (double rr : rr_ms) out.hr_bpm.push_back(60000.0 / rr);

  const double origin = t_s.front() - rr_ms.front() / 1000.0;
  std::vector<std::pair<double, double>> win;  // (hr, weight)
  std::size_t first = 0;
  for (std::size_t i = 0; i < t_s.size(); ++i) {
    while (t_s[first] <= t_s[i] - cfg.window_s) ++first;
    if (t_s[i] - origin < cfg.window_s) {
      out.baseline_bpm.push_back(kNaN<double>);
      continue;
    }
    win.clear();
    double total = 0.0;
    for (std::size_t j = first; j <= i; ++j) {
      win.emplace_back(out.hr_bpm[j], rr_ms[j]);
      total += rr_ms[j];
    }
    std::sort(win.begin(), win.end());
    double acc = 0.0;
    double med = win.back().first;
    for (const auto& [hr, w] : win) {
      acc += w;
      if (acc >= 0.5 * total) {
        med = hr;
        break;
      }
    }
    out.baseline_bpm.push_back(med);
  }
  return out;
}

std::vector<Detection> osorio_detect(const HrTrace& trace, OsorioMode mode, const OsorioConfig& cfg) {
  const double rise = mode == OsorioMode::osorio15 ? cfg.rise15 : cfg.rise30;
  const double sustain = mode == OsorioMode::osorio15 ? 0.0 : cfg.sustain_s;
  std::vector<Detection> out;
  bool in_run = false;
  bool fired = false;
  double run_open = 0.0;   // start of the first above-threshold interval
  double run_first = 0.0;  // its closing beat
  for (std::size_t i = 0; i < trace.t_s.size(); ++i) {
    const double base = trace.baseline_bpm[i];
    const bool above = !std::isnan(base) && trace.hr_bpm[i] > (1.0 + rise) * base;
    if (!above) {
      in_run = false;
      fired = false;
      continue;
    }
    if (!in_run) {
      in_run = true;
      run_first = trace.t_s[i];
      run_open = run_first - trace.rr_ms[i] / 1000.0;
    }
    if (!fired && trace.t_s[i] - run_open >= sustain) {
      out.push_back({run_first, trace.t_s[i], mode, false});
      fired = true;
    }
    if (fired) out.back().t_end = trace.t_s[i];
  }
  return out;
}

std::vector<Detection> sqi_suppress(std::vector<Detection> dets, const SqiSeries& sqi, double thresh) {
  for (auto& d : dets) d.suppressed = sqi.at(d.t) < thresh;
  return dets;
}

EventMatchReport& EventMatchReport::operator+=(const EventMatchReport& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tp_events += o.tp_events;
  finalize();
  return *this;
}

void EventMatchReport::finalize() {
  const std::size_t refs = tp_events + fn;
  se = refs ? static_cast<double>(tp_events) / static_cast<double>(refs) : kNaN<double>;
  ppv = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : kNaN<double>;
}

EventMatchReport match_events(std::span<const Detection> dets, std::span<const SeizureEvent> refs, double pre_s,
                              double post_s) {
  EventMatchReport rep;
  std::vector<bool> credited(refs.size(), false);
  for (const auto& d : dets) {
    if (d.suppressed) continue;
    bool hit = false;
    for (std::size_t k = 0; k < refs.size(); ++k) {
      if (d.t >= refs[k].t_start - pre_s && d.t <= refs[k].t_end + post_s) {
        hit = true;
        credited[k] = true;
      }
    }
    ++(hit ? rep.tp : rep.fp);
  }
  rep.tp_events = static_cast<std::size_t>(std::count(credited.begin(), credited.end(), true));
  rep.fn = refs.size() - rep.tp_events;
  rep.finalize();
  return rep;
}

void write_table3(std::ostream& os, const EventMatchReport& osorio15, const EventMatchReport& osorio30) {
  os << "mode,TP,FP,FN,Se,PPV\n";
  const auto pct = [](double v) { return std::isnan(v) ? std::string() : format_double(100.0 * v); };
  for (const auto& [name, r] : {std::pair{"osorio15", &osorio15}, std::pair{"osorio30", &osorio30}})
    os << name << ',' << r->tp << ',' << r->fp << ',' << r->fn << ',' << pct(r->se) << ',' << pct(r->ppv) << '\n';
}

LocalRecordResult detect_local(const EcgRecord& record, const LocalConfig& cfg) {
  LocalRecordResult out{record.patient_id, record.segment_id, {}, {}};
  const EcgRecord filtered = bandpass(record, cfg.band);
  const BeatSeries a = detect_rpeaks_primary(filtered, cfg.primary);
  const BeatSeries b = detect_rpeaks_secondary(filtered, cfg.secondary);
  const SqiSeries sqi = windowed_sqi(record, a, b, cfg.sqi_window_s);
  const BeatSeries beats = refine_rpeaks(record, a);
  const auto rr = beats.rr_ms();
  const auto times = beats.times_s();
  if (rr.empty()) return out;
  const std::vector<double> t(times.begin() + 1, times.end());
  HrTrace trace;
  try {
    trace = baseline_hr(rr, t, cfg.osorio.baseline);
  } catch (const InsufficientDataError&) {
    return out;
  }
  auto shift = [&](std::vector<Detection> dets) {
    dets = sqi_suppress(std::move(dets), sqi, cfg.gate);
    for (auto& d : dets) {
      d.t += record.start_offset;
      d.t_end += record.start_offset;
    }
    return dets;
  };
  out.osorio15 = shift(osorio_detect(trace, OsorioMode::osorio15, cfg.osorio));
  out.osorio30 = shift(osorio_detect(trace, OsorioMode::osorio30, cfg.osorio));
  return out;
}

}  // namespace triage
