#include "triage/mor.hpp"

#include <algorithm>
#include <string>

#include "triage/errors.hpp"
#include "triage/stats.hpp"

namespace triage {

const std::array<std::string_view, MorVector::kSize> MorVector::kNames = {
    "DmedP",       "DmeanP",       "DstdP",       "DmaxP",       "DmedPR",      "DmeanPR",     "DstdPR",
    "DmaxPR",      "DmedPRseg",    "DmeanPRseg",  "DstdPRseg",   "DmaxPRseg",   "DmedQRS",     "DmeanQRS",
    "DstdQRS",     "DmaxQRS",      "DmedQT",      "DmeanQT",     "DstdQT",      "DmaxQT",      "DmedT",
    "DmeanT",      "DstdT",        "DmaxT",       "DmedRR",      "DmeanRR",     "DstdRR",      "DmaxRR",
    "IRmed",       "IRmean",       "IRstd",       "IRmax",       "MDPR",        "MAPR",        "DmedQT_b",
    "DmedQT_fre",  "DmedQT_fra",   "DmedQT_hod",  "medP",        "meanP",       "stdP",        "maxP",
    "medST",       "meanST",       "stdST",       "maxST",       "medR",        "meanR",       "stdR",
    "maxR",        "medDR",        "meanDR",      "stdDR",       "maxDR",       "medQRS",      "meanQRS",
    "stdQRS",      "maxQRS",       "SmedQRS",     "SmeanQRS",    "SstdQRS",     "SmaxQRS",     "SmedQRSdiff",
    "SmeanQRSdiff", "SstdQRSdiff", "SmaxQRSdiff", "DmedQRSdiff", "DmeanQRSdiff", "DstdQRSdiff", "DmaxQRSdiff",
    "medJ",        "meanJ",        "stdJ",        "maxJ"};

std::size_t MorVector::index(std::string_view name) {
  const auto it = std::find(kNames.begin(), kNames.end(), name);
  if (it == kNames.end()) throw ParameterError("unknown morphology feature: " + std::string(name));
  return static_cast<std::size_t>(it - kNames.begin());
}

void MorVector::merge(const MorVector& other) {
  for (std::size_t i = 0; i < kSize; ++i)
    if (!std::isnan(other.values[i])) values[i] = other.values[i];
}

double qtc_bazett(double qt_ms, double rr_ms) { return qt_ms / std::sqrt(rr_ms / 1000.0); }
double qtc_fridericia(double qt_ms, double rr_ms) { return qt_ms / std::cbrt(rr_ms / 1000.0); }
double qtc_framingham(double qt_ms, double rr_ms) { return qt_ms + 0.154 * (1000.0 - rr_ms); }
double qtc_hodges(double qt_ms, double rr_ms) { return qt_ms + 1.75 * (60000.0 / rr_ms - 60.0); }

namespace {

/// Writes med/mean/std/max of `v` at the four slots starting at `prefix_first`.
void put_summary(MorVector& out, std::string_view first, const std::vector<double>& v, std::size_t min_count) {
  if (v.size() < min_count || v.empty()) return;
  const auto s = summarize(v);
  const std::size_t i = MorVector::index(first);
  out.values[i] = s.med;
  out.values[i + 1] = s.mean;
  out.values[i + 2] = s.std;
  out.values[i + 3] = s.max;
}

}  // namespace

MorVector mor_intervals(const FiducialSet& fid, const std::vector<bool>& keep, const MorConfig& cfg) {
  MorVector out;
  const double ms = 1000.0 / fid.fs;
  const auto dur = [&](Eigen::Index a, Eigen::Index b) { return static_cast<double>(b - a) * ms; };
  std::vector<double> p, pr, prseg, qrs, qt, t, rr, ir, mao, qb, qfre, qfra, qhod;

  std::optional<double> prev_rr;
  for (std::size_t i = 0; i < fid.size(); ++i) {
    const auto& b = fid.beats[i];
    std::optional<double> rr_i;
    if (i > 0 && (keep.empty() || (i - 1 < keep.size() && keep[i - 1]))) rr_i = dur(fid.beats[i - 1].r, b.r);
    if (rr_i) {
      rr.push_back(*rr_i);
      if (prev_rr) ir.push_back(*rr_i / *prev_rr);
    }
    prev_rr = rr_i;

    if (b.has_p()) {
      p.push_back(dur(*b.p_on, *b.p_off));
      mao.push_back(dur(*b.p_on, b.r));
      if (b.qrs_on) {
        pr.push_back(dur(*b.p_on, *b.qrs_on));
        prseg.push_back(dur(*b.p_off, *b.qrs_on));
      }
    }
    if (b.has_qrs()) qrs.push_back(dur(*b.qrs_on, *b.qrs_off));
    if (b.has_t()) t.push_back(dur(*b.t_on, *b.t_off));
    if (b.qrs_on && b.t_off) {
      const double q = dur(*b.qrs_on, *b.t_off);
      qt.push_back(q);
      if (rr_i) {
        qb.push_back(qtc_bazett(q, *rr_i));
        qfre.push_back(qtc_fridericia(q, *rr_i));
        qfra.push_back(qtc_framingham(q, *rr_i));
        qhod.push_back(qtc_hodges(q, *rr_i));
      }
    }
  }

  const std::size_t k = cfg.min_beats;
  put_summary(out, "DmedP", p, k);
  put_summary(out, "DmedPR", pr, k);
  put_summary(out, "DmedPRseg", prseg, k);
  put_summary(out, "DmedQRS", qrs, k);
  put_summary(out, "DmedQT", qt, k);
  put_summary(out, "DmedT", t, k);
  put_summary(out, "DmedRR", rr, k);
  put_summary(out, "IRmed", ir, k);
  if (mao.size() >= k && !mao.empty()) {
    const auto s = summarize(mao);
    out["MDPR"] = s.med;
    out["MAPR"] = s.mean;
  }
  if (qb.size() >= k && !qb.empty()) {
    out["DmedQT_b"] = median(qb);
    out["DmedQT_fre"] = median(qfre);
    out["DmedQT_fra"] = median(qfra);
    out["DmedQT_hod"] = median(qhod);
  }
  return out;
}

MorVector mor_waves(const EcgRecord& record, const FiducialSet& fid, const MorConfig& cfg) {
  MorVector out;
  const auto& x = record.samples;
  const Eigen::Index n = x.size();
  constexpr double kUnit = 10.0;  // mV -> 1e-4 V
  const auto fallback = static_cast<Eigen::Index>(std::lround(cfg.fallback_baseline_s * record.fs));

  std::vector<double> pa, st, ra, dr, qa, area, width, j;
  double prev_r = kNaN<double>;
  for (const auto& b : fid.beats) {
    if (!b.has_qrs() || b.r < 0 || b.r >= n || *b.qrs_off >= n) {
      prev_r = kNaN<double>;
      continue;
    }
    Eigen::Index lo = std::max<Eigen::Index>(0, *b.qrs_on - fallback);
    Eigen::Index hi = *b.qrs_on;
    if (b.has_p() && *b.p_off < *b.qrs_on) lo = *b.p_off;
    const double base = median(x.segment(lo, hi - lo + 1));

    if (b.has_p()) pa.push_back(kUnit * (x[*b.p_peak] - base));
    const double r_amp = kUnit * (x[b.r] - base);
    ra.push_back(r_amp);
    if (!std::isnan(prev_r)) dr.push_back(std::abs(r_amp - prev_r));
    prev_r = r_amp;

    const auto seg = x.segment(*b.qrs_on, *b.qrs_off - *b.qrs_on + 1);
    qa.push_back(kUnit * (seg.maxCoeff() - seg.minCoeff()));
    area.push_back(kUnit * (seg.array() - base).abs().sum() / record.fs);
    width.push_back(static_cast<double>(*b.qrs_off - *b.qrs_on) * 1000.0 / record.fs);
    j.push_back(kUnit * (x[*b.qrs_off] - base));
    if (b.t_on && *b.t_on >= *b.qrs_off && *b.t_on < n)
      st.push_back(kUnit * (x.segment(*b.qrs_off, *b.t_on - *b.qrs_off + 1).mean() - base));
  }

  const std::size_t k = cfg.min_beats;
  put_summary(out, "medP", pa, k);
  put_summary(out, "medST", st, k);
  put_summary(out, "medR", ra, k);
  put_summary(out, "medDR", dr, k);
  put_summary(out, "medQRS", qa, k);
  put_summary(out, "SmedQRS", area, k);

  if (area.size() >= k && !area.empty()) {
    // Reference beat: the one holding the (lower) median area.
    std::vector<std::size_t> order(area.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return area[a] < area[b]; });
    const std::size_t ref = order[(order.size() - 1) / 2];
    if (area[ref] > 0.0 && width[ref] > 0.0) {
      std::vector<double> sdiff, ddiff;
      for (std::size_t i = 0; i < area.size(); ++i) {
        sdiff.push_back(100.0 * std::abs(area[i] - area[ref]) / area[ref]);
        ddiff.push_back(100.0 * std::abs(width[i] - width[ref]) / width[ref]);
      }
      put_summary(out, "SmedQRSdiff", sdiff, k);
      put_summary(out, "DmedQRSdiff", ddiff, k);
    }
  }
  put_summary(out, "medJ", j, k);
  return out;
}

MorVector compute_mor(const EcgRecord& morph, const BeatSeries& beats, const NnSeries& nn,
                      const DelineationConfig& dcfg, const MorConfig& cfg) {
  const FiducialSet fid = delineate(morph, beats, dcfg);
  MorVector out = mor_intervals(fid, nn.keep_mask, cfg);
  out.merge(mor_waves(morph, fid, cfg));
  return out;
}

}  // namespace triage
