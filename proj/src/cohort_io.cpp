#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "triage/cohort.hpp"
#include "triage/errors.hpp"
#include "io_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace triage {
namespace {

using namespace io;

json sidecar_json(const EcgRecord& r) {
  json j;
  j["patient_id"] = r.patient_id;
  j["segment_id"] = r.segment_id;
  j["fs"] = r.fs;
  j["start_offset"] = r.start_offset;
  return j;
}

void apply_sidecar(const fs::path& path, EcgRecord& r) {
  json j;
  try {
    j = json::parse(open_in(path));
    r.patient_id = j.at("patient_id").get<std::string>();
    r.segment_id = j.at("segment_id").get<std::string>();
    r.fs = j.at("fs").get<double>();
    r.start_offset = j.at("start_offset").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 1, e.what());
  }
}

std::string segment_stem(const EcgRecord& r) { return r.patient_id + "__" + r.segment_id; }

}  // namespace

std::vector<fs::path> list_segments(const fs::path& ecg_dir) {
  if (!fs::is_directory(ecg_dir)) throw Error("ECG directory not found: " + ecg_dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(ecg_dir)) {
    const auto ext = entry.path().extension();
    if (ext == ".csv" || ext == ".bin") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::string, std::vector<fs::path>> segments_by_patient(const fs::path& ecg_dir) {
  std::map<std::string, std::vector<fs::path>> out;
  for (const auto& path : list_segments(ecg_dir)) {
    fs::path sidecar = path;
    sidecar.replace_extension(".json");
    std::string pid;
    if (fs::exists(sidecar)) {
      try {
        pid = json::parse(open_in(sidecar)).at("patient_id").get<std::string>();
      } catch (const json::exception& e) {
        throw ParseError(sidecar.string(), 1, e.what());
      }
    } else {
      const std::string stem = path.stem().string();
      const auto sep = stem.find("__");
      if (sep == std::string::npos) throw ParseError(path.string(), 1, "stem must be <patient>__<segment>");
      pid = stem.substr(0, sep);
    }
    out[pid].push_back(path);
  }
  return out;
}

EcgRecord read_segment(const fs::path& path) {
  EcgRecord r;
  fs::path sidecar = path;
  sidecar.replace_extension(".json");
  const bool has_sidecar = fs::exists(sidecar);

  if (path.extension() == ".bin") {
    if (!has_sidecar) throw Error("binary segment without sidecar: " + path.string());
    apply_sidecar(sidecar, r);
    auto in = open_in(path, std::ios::binary);
    const auto bytes = static_cast<std::size_t>(fs::file_size(path));
    if (bytes % 4 != 0) throw ParseError(path.string(), 1, "binary size is not a multiple of 4");
    std::vector<std::uint32_t> raw(bytes / 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    r.samples.resize(static_cast<Eigen::Index>(raw.size()));
    for (std::size_t i = 0; i < raw.size(); ++i) {
      std::uint32_t w = raw[i];
      if constexpr (std::endian::native == std::endian::big) w = __builtin_bswap32(w);
      r.samples[static_cast<Eigen::Index>(i)] = static_cast<double>(std::bit_cast<float>(w));
    }
  } else {
    auto in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path.string(), 1, "empty file");
    ++lineno;
    if (trim(line) != "t_s,mv") throw ParseError(path.string(), lineno, "expected header 't_s,mv'");
    std::vector<double> t, v;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      const auto cells = split_csv(line);
      if (cells.size() != 2) throw ParseError(path.string(), lineno, "expected 2 columns");
      t.push_back(parse_number(cells[0], path, lineno));
      v.push_back(parse_number(cells[1], path, lineno));
    }
    r.samples = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    if (has_sidecar) {
      apply_sidecar(sidecar, r);
    } else {
      const std::string stem = path.stem().string();
      const auto sep = stem.find("__");
      if (sep == std::string::npos) throw ParseError(path.string(), 1, "stem must be <patient>__<segment>");
      r.patient_id = stem.substr(0, sep);
      r.segment_id = stem.substr(sep + 2);
      if (t.size() < 2) throw ParseError(path.string(), lineno, "need at least two samples to infer fs");
      r.fs = static_cast<double>(t.size() - 1) / (t.back() - t.front());
      r.start_offset = t.front();
    }
  }
  r.validate();
  return r;
}

void write_segment(const fs::path& ecg_dir, const EcgRecord& r, EcgFormat format) {
  const fs::path base = ecg_dir / segment_stem(r);
  {
    fs::path sidecar = base;
    sidecar += ".json";
    open_out(sidecar) << sidecar_json(r).dump(2) << '\n';
  }
  if (format == EcgFormat::binary) {
    fs::path p = base;
    p += ".bin";
    auto out = open_out(p, std::ios::binary);
    std::vector<std::uint32_t> raw(static_cast<std::size_t>(r.samples.size()));
    for (std::size_t i = 0; i < raw.size(); ++i) {
      std::uint32_t w = std::bit_cast<std::uint32_t>(static_cast<float>(r.samples[static_cast<Eigen::Index>(i)]));
      if constexpr (std::endian::native == std::endian::big) w = __builtin_bswap32(w);
      raw[i] = w;
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  } else {
    fs::path p = base;
    p += ".csv";
    auto out = open_out(p);
    std::string buf = "t_s,mv\n";
    for (Eigen::Index i = 0; i < r.samples.size(); ++i) {
      buf += format_double(r.start_offset + static_cast<double>(i) / r.fs);
      buf += ',';
      buf += format_double(r.samples[i]);
      buf += '\n';
    }
    out << buf;
  }
}

std::vector<SeizureEvent> read_annotations(const fs::path& path) {
  auto in = open_in(path);
  std::vector<SeizureEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    SeizureEvent e;
    try {
      const json j = json::parse(line);
      e.patient_id = j.at("patient_id").get<std::string>();
      e.t_start = j.at("t_start").get<double>();
      e.t_end = j.at("t_end").get<double>();
      e.manifestation = parse_manifestation(j.value("manifestation", std::string("unknown")));
    } catch (const json::exception& ex) {
      throw ParseError(path.string(), lineno, ex.what());
    } catch (const ParseError&) {
      throw;
    } catch (const Error& ex) {
      throw ParseError(path.string(), lineno, ex.what());
    }
    if (!(e.t_start >= 0.0) || !(e.t_end > e.t_start))
      throw ParseError(path.string(), lineno, "require t_end > t_start >= 0");
    out.push_back(std::move(e));
  }
  return out;
}

void write_annotations(const fs::path& path, std::span<const SeizureEvent> events) {
  auto out = open_out(path);
  for (const auto& e : events) {
    json j;
    j["patient_id"] = e.patient_id;
    j["t_start"] = e.t_start;
    j["t_end"] = e.t_end;
    j["manifestation"] = std::string(to_string(e.manifestation));
    out << j.dump() << '\n';
  }
}

std::vector<PatientMeta> read_metadata(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "empty metadata file");
  ++lineno;
  const auto header = split_csv(trim(line));
  std::vector<std::string> expected{"patient_id"};
  for (auto n : PatientMeta::kColumnNames) expected.emplace_back(n);
  if (header.size() != expected.size()) throw ParseError(path.string(), lineno, "expected 17 columns");
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (trim(header[i]) != expected[i])
      throw ParseError(path.string(), lineno, "column " + std::to_string(i) + " must be '" + expected[i] + "'");

  std::vector<PatientMeta> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(trim(line));
    if (cells.size() != expected.size()) throw ParseError(path.string(), lineno, "expected 17 columns");
    PatientMeta m;
    m.patient_id = trim(cells[0]);
    if (m.patient_id.empty()) throw ParseError(path.string(), lineno, "empty patient_id");
    m.age = parse_number(cells[1], path, lineno);
    if (!(m.age >= 0.0)) throw ParseError(path.string(), lineno, "age must be >= 0");
    const std::string g = trim(cells[2]);
    if (g == "M") m.gender = Gender::male;
    else if (g == "F") m.gender = Gender::female;
    else if (g.empty() || g == "NA") m.gender = Gender::missing;
    else throw ParseError(path.string(), lineno, "gender must be M, F or empty");
    for (std::size_t i = 0; i < PatientMeta::kFlagCount; ++i) {
      const std::string c = trim(cells[3 + i]);
      if (c == "1") m.flags[i] = true;
      else if (c == "0") m.flags[i] = false;
      else if (c.empty() || c == "NA") m.flags[i] = std::nullopt;
      else throw ParseError(path.string(), lineno, "flag " + std::string(PatientMeta::kFlagNames[i]) + " must be 0, 1 or empty");
    }
    out.push_back(std::move(m));
  }
  return out;
}

void write_metadata(const fs::path& path, std::span<const PatientMeta> meta) {
  auto out = open_out(path);
  out << "patient_id";
  for (auto n : PatientMeta::kColumnNames) out << ',' << n;
  out << '\n';
  for (const auto& m : meta) {
    out << m.patient_id << ',' << format_double(m.age) << ',';
    out << (m.gender == Gender::male ? "M" : m.gender == Gender::female ? "F" : "");
    for (const auto& f : m.flags) out << ',' << (f ? (*f ? "1" : "0") : "");
    out << '\n';
  }
}

Cohort load_cohort(const fs::path& ecg_dir, const fs::path& annotations_path, const fs::path& metadata_path) {
  Cohort c;
  for (const auto& p : list_segments(ecg_dir)) c.records.push_back(read_segment(p));
  c.events = read_annotations(annotations_path);
  c.meta = read_metadata(metadata_path);
  c.check_integrity();
  c.canonicalize();
  return c;
}

void write_cohort(const Cohort& cohort, const fs::path& ecg_dir, const fs::path& annotations_path,
                  const fs::path& metadata_path, EcgFormat format) {
  Cohort c = cohort;
  c.canonicalize();
  fs::create_directories(ecg_dir);
  for (const auto& r : c.records) write_segment(ecg_dir, r, format);
  write_annotations(annotations_path, c.events);
  write_metadata(metadata_path, c.meta);
}

}  // namespace triage
