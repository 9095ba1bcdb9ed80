#pragma once

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "triage/cohort.hpp"
#include "triage/dsp.hpp"
#include "triage/sqi.hpp"

namespace triage {

enum class OsorioMode { osorio15, osorio30 };
std::string_view to_string(OsorioMode m);

struct Detection {
  double t = 0.0;      // onset, seconds
  double t_end = 0.0;  // last beat above threshold
  OsorioMode mode = OsorioMode::osorio15;
  bool suppressed = false;
};

struct BaselineConfig {
  double window_s = 120.0;  // trailing window; no baseline during the first window
};

struct OsorioConfig {
  double rise15 = 0.15;
  double rise30 = 0.30;
  double sustain_s = 5.0;   // osorio30 only
  BaselineConfig baseline;
};

/// Instantaneous heart rate and its trailing baseline, one entry per interval.
struct HrTrace {
  std::vector<double> t_s;        // closing beat time
  std::vector<double> rr_ms;
  std::vector<double> hr_bpm;
  std::vector<double> baseline_bpm;  // NaN during warm-up
};

/// Trailing median of instantaneous HR over `window_s`, each interval weighted
/// by its duration. Throws InsufficientDataError when the series spans less
/// than one window.
HrTrace baseline_hr(std::span<const double> rr_ms, std::span<const double> t_s, const BaselineConfig& cfg = {});

std::vector<Detection> osorio_detect(const HrTrace& trace, OsorioMode mode, const OsorioConfig& cfg = {});

/// Flags detections whose 60 s window has bSQI below `thresh`; never removes any.
std::vector<Detection> sqi_suppress(std::vector<Detection> dets, const SqiSeries& sqi, double thresh = kBsqiGate);

struct EventMatchReport {
  std::size_t tp = 0;         // unsuppressed detections inside some reference window
  std::size_t fp = 0;
  std::size_t fn = 0;         // references with no detection
  std::size_t tp_events = 0;  // references credited at least once
  double se = 0.0;            // tp_events / references; NaN without references
  double ppv = 0.0;           // tp / (tp + fp); NaN without detections

  EventMatchReport& operator+=(const EventMatchReport& o);
  void finalize();            // recomputes se / ppv from the counts
};

/// Detection and reference times must share one clock.
EventMatchReport match_events(std::span<const Detection> dets, std::span<const SeizureEvent> refs,
                              double pre_s = 60.0, double post_s = 60.0);

struct LocalConfig {
  BandpassConfig band;
  PrimaryDetectorConfig primary;
  SecondaryDetectorConfig secondary;
  OsorioConfig osorio;
  double sqi_window_s = 60.0;
  double gate = kBsqiGate;
  double pre_s = 60.0;
  double post_s = 60.0;
};

/// Detections of one record, on the admission clock.
struct LocalRecordResult {
  std::string patient_id;
  std::string segment_id;
  std::vector<Detection> osorio15, osorio30;
};

/// bandpass -> primary and secondary detectors -> refined RR -> both Osorio
/// modes -> SQI flags. A record too short for a baseline yields no detections.
LocalRecordResult detect_local(const EcgRecord& record, const LocalConfig& cfg = {});

/// mode,TP,FP,FN,Se,PPV with Se/PPV in percent.
void write_table3(std::ostream& os, const EventMatchReport& osorio15, const EventMatchReport& osorio30);

}  // namespace triage
