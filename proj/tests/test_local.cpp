#include <doctest.h>

#include <random>
#include <sstream>

#include "triage/errors.hpp"
#include "triage/local.hpp"
#include "triage/synth.hpp"

using namespace triage;

namespace {

struct Series {
  std::vector<double> rr, t;
};

// Piecewise-constant HR: (bpm, seconds) segments.
Series hr_steps(std::initializer_list<std::pair<double, double>> steps) {
  Series s;
  double now = 0.0;
  for (auto [bpm, secs] : steps) {
    const double end = now + secs;
    const double rr = 60000.0 / bpm;
    while (now + rr / 1000.0 <= end + 1e-9) {
      now += rr / 1000.0;
      s.rr.push_back(rr);
      s.t.push_back(now);
    }
  }
  return s;
}

Series ledger(const SynthResult& r) {
  Series s;
  for (std::size_t i = 1; i < r.beat_times_s.size(); ++i) {
    s.rr.push_back(1000.0 * (r.beat_times_s[i] - r.beat_times_s[i - 1]));
    s.t.push_back(r.beat_times_s[i]);
  }
  return s;
}

std::vector<Detection> run(const Series& s, OsorioMode m) { return osorio_detect(baseline_hr(s.rr, s.t), m); }

}  // namespace

TEST_CASE("baseline of a constant rate") {
  const auto s = hr_steps({{100.0, 600.0}});
  const auto tr = baseline_hr(s.rr, s.t);
  for (std::size_t i = 0; i < tr.t_s.size(); ++i) {
    if (tr.t_s[i] < 120.0) {
      CHECK(std::isnan(tr.baseline_bpm[i]));
    } else {
      CHECK(tr.baseline_bpm[i] == doctest::Approx(100.0));
    }
  }
  CHECK(run(s, OsorioMode::osorio15).empty());
  const auto short_s = hr_steps({{100.0, 100.0}});
  CHECK_THROWS_AS(baseline_hr(short_s.rr, short_s.t), InsufficientDataError);
}

TEST_CASE("baseline lags a step by at least 60 s") {
  const auto s = hr_steps({{100.0, 300.0}, {130.0, 300.0}});
  const auto tr = baseline_hr(s.rr, s.t);
  double reached = -1.0;
  for (std::size_t i = 0; i < tr.t_s.size(); ++i) {
    if (tr.t_s[i] > 300.0 && tr.baseline_bpm[i] == doctest::Approx(130.0)) {
      reached = tr.t_s[i];
      break;
    }
  }
  CHECK(reached >= 360.0 - 1e-6);
  CHECK(reached <= 362.0);
}

TEST_CASE("single-beat spike leaves the baseline unchanged") {
  auto s = hr_steps({{100.0, 400.0}});
  s.rr[300] = 400.0;
  const auto tr = baseline_hr(s.rr, s.t);
  for (std::size_t i = 300; i < tr.t_s.size(); ++i) CHECK(tr.baseline_bpm[i] == doctest::Approx(100.0));
  const auto d15 = osorio_detect(tr, OsorioMode::osorio15);
  REQUIRE(d15.size() == 1);
  CHECK(d15[0].t == s.t[300]);
  CHECK(osorio_detect(tr, OsorioMode::osorio30).empty());
}

TEST_CASE("hand-built rises against both parameter sets") {
  const auto six = hr_steps({{100.0, 300.0}, {135.0, 6.0}, {100.0, 60.0}});
  CHECK(run(six, OsorioMode::osorio15).size() == 1);
  CHECK(run(six, OsorioMode::osorio30).size() == 1);
  const auto three = hr_steps({{100.0, 300.0}, {135.0, 3.0}, {100.0, 60.0}});
  CHECK(run(three, OsorioMode::osorio15).size() == 1);
  CHECK(run(three, OsorioMode::osorio30).empty());
  const auto twenty = hr_steps({{100.0, 300.0}, {120.0, 30.0}, {100.0, 60.0}});
  CHECK(run(twenty, OsorioMode::osorio15).size() == 1);
  CHECK(run(twenty, OsorioMode::osorio30).empty());
}

TEST_CASE("generator episodes") {
  SynthProfile p;
  p.duration_s = 600.0;
  p.hrv_level = 0.02;
  p.episodes = {{300.0, 30.0, 0.20}};
  const auto mild = ledger(synth_record(p, 41));
  const auto d15 = run(mild, OsorioMode::osorio15);
  REQUIRE_FALSE(d15.empty());
  bool in_episode = false;
  for (const auto& d : d15) in_episode = in_episode || (d.t >= 299.0 && d.t <= 331.0);
  CHECK(in_episode);
  CHECK(run(mild, OsorioMode::osorio30).empty());

  p.episodes = {{300.0, 6.0, 0.35}};
  const auto strong = ledger(synth_record(p, 42));
  CHECK_FALSE(run(strong, OsorioMode::osorio30).empty());
  p.episodes = {{300.0, 3.0, 0.35}};
  const auto brief = ledger(synth_record(p, 43));
  CHECK_FALSE(run(brief, OsorioMode::osorio15).empty());
  CHECK(run(brief, OsorioMode::osorio30).empty());
}

TEST_CASE("osorio30 detections lie inside osorio15 runs") {
  std::mt19937_64 rng(44);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Series s;
    double now = 0.0, level = 0.0;
    while (now < 900.0) {
      level = 0.97 * level + 0.08 * g(rng);  // slow random walk in log-rate
      const double rr = 600.0 * std::exp(-level) * (1.0 + 0.02 * g(rng));
      now += rr / 1000.0;
      s.rr.push_back(rr);
      s.t.push_back(now);
    }
    const auto tr = baseline_hr(s.rr, s.t);
    const auto d15 = osorio_detect(tr, OsorioMode::osorio15);
    for (const auto& d : osorio_detect(tr, OsorioMode::osorio30)) {
      bool covered = false;
      for (const auto& e : d15) covered = covered || (e.t <= d.t && d.t_end <= e.t_end);
      CHECK(covered);
    }
  }
}

TEST_CASE("SQI suppression flags without removing") {
  SqiSeries sqi;
  sqi.window_start_s = {0.0, 60.0, 120.0};
  sqi.bsqi = {0.9, 0.5, 0.8};
  std::vector<Detection> d{{30.0, 31.0}, {90.0, 91.0}, {150.0, 151.0}, {500.0, 501.0}};
  const auto s = sqi_suppress(d, sqi);
  REQUIRE(s.size() == d.size());
  CHECK_FALSE(s[0].suppressed);
  CHECK(s[1].suppressed);
  CHECK_FALSE(s[2].suppressed);
  CHECK_FALSE(s[3].suppressed);
}

TEST_CASE("event matching") {
  const std::vector<SeizureEvent> refs{{"P", 1000.0, 1100.0, Manifestation::subclinical},
                                       {"P", 5000.0, 5050.0, Manifestation::subclinical}};
  std::vector<Detection> d{{970.0, 975.0}};
  auto r = match_events(d, refs);
  CHECK(r.tp == 1);
  CHECK(r.fp == 0);
  CHECK(r.fn == 1);
  CHECK(r.se == 0.5);
  CHECK(r.ppv == 1.0);

  d = {{1190.0, 1191.0}};
  r = match_events(d, std::span(refs).first(1));
  CHECK(r.tp == 0);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);

  r = match_events({}, refs);
  CHECK(r.tp == 0);
  CHECK(r.fn == 2);
  CHECK(r.se == 0.0);
  CHECK(std::isnan(r.ppv));

  // Edges are inclusive; several detections may share one reference.
  d = {{940.0, 941.0}, {1160.0, 1161.0}, {1050.0, 1051.0}, {3000.0, 3001.0}};
  r = match_events(d, refs);
  CHECK(r.tp == 3);
  CHECK(r.fp == 1);
  CHECK(r.tp_events == 1);
  CHECK(r.tp_events + r.fn == refs.size());
  CHECK(r.ppv == 0.75);

  d[3].suppressed = true;
  r = match_events(d, refs);
  CHECK(r.fp == 0);
}

TEST_CASE("table 3 CSV") {
  EventMatchReport a;
  a.tp = 549;
  a.fp = 21438;
  a.fn = 3577;
  a.tp_events = 549;
  a.finalize();
  CHECK(a.se == doctest::Approx(0.133).epsilon(0.01));
  CHECK(a.ppv == doctest::Approx(0.025).epsilon(0.01));
  EventMatchReport b;
  b.finalize();
  std::ostringstream os;
  write_table3(os, a, b);
  const std::string text = os.str();
  CHECK(text.rfind("mode,TP,FP,FN,Se,PPV\nosorio15,549,21438,3577,", 0) == 0);
  CHECK(text.find("osorio30,0,0,0,,\n") != std::string::npos);
}
