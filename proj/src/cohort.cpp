#include "triage/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "triage/errors.hpp"

namespace triage {

const std::array<std::string_view, PatientMeta::kFlagCount> PatientMeta::kFlagNames = {
    "DevDelay", "Epilepsy",     "PreDxNa", "Seizure", "EtSeiz", "SeizPrim", "EtBrainInj",
    "BrainInjPrim", "EtMetab", "MetPrim", "EtSyst",  "SysPrim", "EtSed",    "SedPrim"};

const std::array<std::string_view, PatientMeta::kFeatureCount> PatientMeta::kColumnNames = {
    "Age",        "Gender",       "DevDelay", "Epilepsy", "PreDxNa", "Seizure", "EtSeiz",  "SeizPrim",
    "EtBrainInj", "BrainInjPrim", "EtMetab",  "MetPrim",  "EtSyst",  "SysPrim", "EtSed",   "SedPrim"};

void EcgRecord::validate() const {
  if (!(fs > 0.0)) throw ParameterError("record " + patient_id + "/" + segment_id + ": fs must be positive");
  if (samples.size() == 0) throw ParameterError("record " + patient_id + "/" + segment_id + ": no samples");
  if (start_offset < 0.0) throw ParameterError("record " + patient_id + "/" + segment_id + ": negative start_offset");
}

std::string_view to_string(Manifestation m) {
  switch (m) {
    case Manifestation::subclinical: return "subclinical";
    case Manifestation::clinical: return "clinical";
    case Manifestation::unknown: return "unknown";
  }
  return "unknown";
}

Manifestation parse_manifestation(std::string_view s) {
  if (s == "subclinical") return Manifestation::subclinical;
  if (s == "clinical") return Manifestation::clinical;
  if (s == "unknown") return Manifestation::unknown;
  throw Error("unknown manifestation '" + std::string(s) + "'");
}

void SeizureEvent::validate() const {
  if (!(t_start >= 0.0) || !(t_end > t_start))
    throw ParameterError("seizure event for " + patient_id + ": require t_end > t_start >= 0");
}

std::array<double, PatientMeta::kFeatureCount> PatientMeta::feature_values() const {
  std::array<double, kFeatureCount> out{};
  out[0] = age;
  out[1] = gender == Gender::male ? 1.0 : 0.0;
  for (std::size_t i = 0; i < kFlagCount; ++i) out[2 + i] = flags[i].value_or(false) ? 1.0 : 0.0;
  return out;
}

std::optional<bool>& PatientMeta::flag(std::string_view name) {
  for (std::size_t i = 0; i < kFlagCount; ++i)
    if (kFlagNames[i] == name) return flags[i];
  throw Error("unknown clinical flag '" + std::string(name) + "'");
}

void PatientMeta::validate() const {
  if (!(age >= 0.0) || !std::isfinite(age)) throw ParameterError("patient " + patient_id + ": age must be >= 0");
}

PatientLabel label_patient(std::string_view patient_id, std::span<const SeizureEvent> events, double horizon_s,
                           double min_dur_s) {
  PatientLabel label{std::string(patient_id), false};
  for (const auto& e : events) {
    if (e.duration() > min_dur_s && e.t_start < horizon_s) {
      label.seizure_patient = true;
      break;
    }
  }
  return label;
}

std::vector<std::string> Cohort::patient_ids() const {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.patient_id);
  return {ids.begin(), ids.end()};
}

std::vector<SeizureEvent> Cohort::events_for(std::string_view patient_id) const {
  std::vector<SeizureEvent> out;
  for (const auto& e : events)
    if (e.patient_id == patient_id) out.push_back(e);
  return out;
}

const PatientMeta* Cohort::meta_for(std::string_view patient_id) const {
  for (const auto& m : meta)
    if (m.patient_id == patient_id) return &m;
  return nullptr;
}

void Cohort::canonicalize() {
  std::sort(records.begin(), records.end(), [](const EcgRecord& a, const EcgRecord& b) {
    return std::tie(a.patient_id, a.start_offset, a.segment_id) < std::tie(b.patient_id, b.start_offset, b.segment_id);
  });
  std::sort(events.begin(), events.end(), [](const SeizureEvent& a, const SeizureEvent& b) {
    return std::tie(a.patient_id, a.t_start, a.t_end) < std::tie(b.patient_id, b.t_start, b.t_end);
  });
  std::sort(meta.begin(), meta.end(),
            [](const PatientMeta& a, const PatientMeta& b) { return a.patient_id < b.patient_id; });
}

void Cohort::check_integrity() const {
  const auto ids = patient_ids();
  const auto known = [&](const std::string& id) { return std::binary_search(ids.begin(), ids.end(), id); };
  for (const auto& e : events)
    if (!known(e.patient_id)) throw IntegrityError("annotation references unknown patient '" + e.patient_id + "'");
  std::set<std::string> seen;
  for (const auto& m : meta) {
    if (!known(m.patient_id)) throw IntegrityError("metadata row references unknown patient '" + m.patient_id + "'");
    if (!seen.insert(m.patient_id).second) throw IntegrityError("duplicate metadata row for '" + m.patient_id + "'");
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace triage
