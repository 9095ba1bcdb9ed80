#include "triage/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "io_util.hpp"
#include "triage/errors.hpp"
#include "triage/parallel.hpp"

namespace triage {

namespace {

using namespace io;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

EcgRecord slice(const EcgRecord& r, double from_s, double to_s, int hour) {
  const auto first =
      std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil((from_s - r.start_offset) * r.fs - 1e-9)));
  const auto last = std::min(r.size(), static_cast<Eigen::Index>(std::ceil((to_s - r.start_offset) * r.fs - 1e-9)));
  EcgRecord out;
  out.patient_id = r.patient_id;
  out.segment_id = r.segment_id + "#h" + std::to_string(hour);
  out.fs = r.fs;
  out.start_offset = r.start_offset + static_cast<double>(first) / r.fs;
  out.samples = r.samples.segment(first, std::max<Eigen::Index>(0, last - first));
  return out;
}

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

HourFeatures extract_hour(const EcgRecord& window, int hour_index, const FeatureConfig& cfg) {
  HourFeatures h;
  h.patient_id = window.patient_id;
  h.hour_index = hour_index;
  h.start_s = window.start_offset;
  h.duration_s = window.duration();
  try {
    const EcgRecord filtered = bandpass(window, cfg.detect_band);
    const BeatSeries a = detect_rpeaks_primary(filtered, cfg.primary);
    const BeatSeries b = detect_rpeaks_secondary(filtered, cfg.secondary);
    const SqiSeries sqi = windowed_sqi(window, a, b, cfg.sqi_window_s);
    h.bsqi_mean = sqi.mean();
    h.passes = hour_quality_gate(sqi, cfg.gate);
    if (!h.passes) return h;
    const BeatSeries beats = refine_rpeaks(window, a);
    const NnSeries nn = filter_nn(beats, cfg.nn);
    h.hrv = compute_hrv(nn, h.bsqi_mean, cfg.hrv);
    h.mor = compute_mor(bandpass(window, cfg.morph_band), beats, nn, cfg.delineation, cfg.mor);
  } catch (const InsufficientDataError&) {
    h.passes = false;
  }
  return h;
}

std::vector<HourFeatures> extract_patient(std::span<const EcgRecord> records, const FeatureConfig& cfg) {
  std::vector<HourFeatures> out;
  for (int hour = 0; hour < cfg.max_windows; ++hour) {
    const double lo = hour * cfg.window_s, hi = (hour + 1) * cfg.window_s;
    const EcgRecord* best = nullptr;
    double best_len = 0.0;
    for (const auto& r : records) {
      const double len = std::min(hi, r.start_offset + r.duration()) - std::max(lo, r.start_offset);
      if (len > best_len) {
        best_len = len;
        best = &r;
      }
    }
    if (!best || best_len < cfg.min_coverage * cfg.window_s) continue;
    out.push_back(extract_hour(slice(*best, lo, hi, hour), hour, cfg));
  }
  return out;
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (auto s : PatientMeta::kColumnNames) n.emplace_back(s);
    for (auto s : HrvVector::kNames) n.emplace_back(s);
    for (auto s : MorVector::kNames) n.emplace_back(s);
    return n;
  }();
  return names;
}

void write_data_dictionary(std::ostream& os) {
  os << "column,name,family\n";
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const char* family = i < PatientMeta::kFeatureCount                       ? "META"
                         : i < PatientMeta::kFeatureCount + HrvVector::kSize ? "HRV"
                                                                               : "MOR";
    os << i << ',' << names[i] << ',' << family << '\n';
  }
}

std::size_t Dataset::patient_index(const std::string& id) const {
  const auto it = std::lower_bound(patients.begin(), patients.end(), id);
  if (it == patients.end() || *it != id) throw ParameterError("unknown patient '" + id + "'");
  return static_cast<std::size_t>(it - patients.begin());
}

Eigen::MatrixXd Dataset::matrix(const std::vector<std::size_t>& row_ids, const std::vector<int>& cols) const {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(row_ids.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < row_ids.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[row_ids[i]].values[static_cast<std::size_t>(cols[j])];
  return X;
}

std::size_t Dataset::positive_rows() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const FeatureRow& r) { return r.label; }));
}

Dataset assemble_dataset(const std::vector<HourFeatures>& hours, std::span<const PatientMeta> meta,
                         std::span<const SeizureEvent> events) {
  std::map<std::string, std::vector<const HourFeatures*>> by_patient;
  for (const auto& h : hours) by_patient[h.patient_id].push_back(&h);
  std::map<std::string, const PatientMeta*> meta_of;
  for (const auto& m : meta) meta_of[m.patient_id] = &m;
  std::map<std::string, std::vector<SeizureEvent>> events_of;
  for (const auto& e : events) events_of[e.patient_id].push_back(e);

  Dataset d;
  d.names = feature_names();
  for (auto& [pid, list] : by_patient) {
    std::sort(list.begin(), list.end(), [](const auto* a, const auto* b) { return a->hour_index < b->hour_index; });
    const int label = label_patient(pid, events_of[pid]).seizure_patient ? 1 : 0;
    const std::size_t before = d.rows.size();
    for (const HourFeatures* h : list) {
      if (!h->passes) continue;
      FeatureRow row;
      row.patient_id = pid;
      row.hour_index = h->hour_index;
      row.label = label;
      row.bsqi = h->bsqi_mean;
      row.values.reserve(d.names.size());
      if (const auto it = meta_of.find(pid); it != meta_of.end()) {
        for (double v : it->second->feature_values()) row.values.push_back(v);
      } else {
        row.values.insert(row.values.end(), PatientMeta::kFeatureCount, kNan);
      }
      row.values.insert(row.values.end(), h->hrv.values.begin(), h->hrv.values.end());
      row.values.insert(row.values.end(), h->mor.values.begin(), h->mor.values.end());
      d.rows.push_back(std::move(row));
    }
    if (d.rows.size() == before) {
      d.dropped.push_back(pid);
      continue;
    }
    d.patients.push_back(pid);
    d.labels.push_back(label);
    d.first_row.push_back(before);
    if (d.rows[before].hour_index != 0) d.late_first.push_back(pid);
  }
  return d;
}

std::vector<HourFeatures> extract_streamed(std::size_t n_patients, const RecordLoader& load, const FeatureConfig& cfg,
                                           int workers) {
  std::vector<std::vector<HourFeatures>> per(n_patients);
  parallel_for(n_patients, workers, [&](std::size_t i) { per[i] = extract_patient(load(i), cfg); });
  std::vector<HourFeatures> hours;
  for (auto& p : per) hours.insert(hours.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  return hours;
}

std::vector<HourFeatures> extract_cohort(const Cohort& cohort, const FeatureConfig& cfg, int workers) {
  std::map<std::string, std::vector<const EcgRecord*>> by_patient;
  for (const auto& r : cohort.records) by_patient[r.patient_id].push_back(&r);
  std::vector<const std::vector<const EcgRecord*>*> groups;
  for (const auto& [pid, recs] : by_patient) groups.push_back(&recs);
  return extract_streamed(
      groups.size(),
      [&](std::size_t i) {
        std::vector<EcgRecord> recs;
        for (const EcgRecord* r : *groups[i]) recs.push_back(*r);
        return recs;
      },
      cfg, workers);
}

Dataset build_dataset(const Cohort& cohort, const FeatureConfig& cfg, int workers) {
  if (cohort.records.empty()) throw InsufficientDataError("build_dataset: empty cohort");
  Dataset d = assemble_dataset(extract_cohort(cohort, cfg, workers), cohort.meta, cohort.events);
  if (d.patients.empty()) throw InsufficientDataError("build_dataset: no patient has a window passing the quality gate");
  return d;
}

void write_hours_csv(const fs::path& path, const std::vector<HourFeatures>& hours) {
  auto out = open_out(path);
  out << "patient_id,hour_index,start_s,duration_s,bsqi_mean,passes";
  for (auto n : HrvVector::kNames) out << ',' << n;
  for (auto n : MorVector::kNames) out << ',' << n;
  out << '\n';
  for (const auto& h : hours) {
    out << h.patient_id << ',' << h.hour_index << ',' << format_double(h.start_s) << ','
        << format_double(h.duration_s) << ',' << format_double(h.bsqi_mean) << ',' << (h.passes ? 1 : 0);
    for (double v : h.hrv.values) out << ',' << cell(v);
    for (double v : h.mor.values) out << ',' << cell(v);
    out << '\n';
  }
}

std::vector<HourFeatures> read_hours_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "empty window table");
  const std::size_t width = 6 + HrvVector::kSize + MorVector::kSize;
  if (split_csv(trim(line)).size() != width)
    throw ParseError(path.string(), 1, "expected " + std::to_string(width) + " columns");
  std::vector<HourFeatures> out;
  std::size_t lineno = 1;
  auto number = [&](const std::string& c) { return trim(c).empty() ? kNan : parse_number(c, path, lineno); };
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(trim(line));
    if (cells.size() != width) throw ParseError(path.string(), lineno, "expected " + std::to_string(width) + " columns");
    HourFeatures h;
    h.patient_id = trim(cells[0]);
    h.hour_index = static_cast<int>(parse_number(cells[1], path, lineno));
    h.start_s = parse_number(cells[2], path, lineno);
    h.duration_s = parse_number(cells[3], path, lineno);
    h.bsqi_mean = parse_number(cells[4], path, lineno);
    h.passes = trim(cells[5]) == "1";
    for (std::size_t i = 0; i < HrvVector::kSize; ++i) h.hrv.values[i] = number(cells[6 + i]);
    for (std::size_t i = 0; i < MorVector::kSize; ++i) h.mor.values[i] = number(cells[6 + HrvVector::kSize + i]);
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace triage
