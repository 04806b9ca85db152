#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <string>
#include <vector>

#include "delaycast/rng.hpp"
#include "delaycast/stream_core.hpp"
#include "doctest.h"
#include "stream_fixtures.hpp"

using namespace delaycast;

TEST_CASE("label encoding is a bijection over the three classes") {
  CHECK(encode_label(DelayLabel::before_time) == 0);
  CHECK(encode_label(DelayLabel::on_time) == 1);
  CHECK(encode_label(DelayLabel::delayed) == 2);
  for (int i = 0; i < kNumLabels; ++i) {
    CHECK(encode_label(decode_label(i)) == i);
  }
  CHECK_THROWS_AS(decode_label(-1), InputError);
  CHECK_THROWS_AS(decode_label(3), InputError);
}

TEST_CASE("label names round-trip and reject unknowns") {
  for (int i = 0; i < kNumLabels; ++i) {
    const DelayLabel l = decode_label(i);
    CHECK(label_from_name(label_name(l)) == l);
  }
  CHECK_THROWS_AS(label_from_name("late"), InputError);
  CHECK_THROWS_AS(label_from_name(""), InputError);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  CHECK(argmax_label({0.2, 0.5, 0.3}) == DelayLabel::on_time);
  CHECK(argmax_label({0.4, 0.4, 0.2}) == DelayLabel::before_time);
  CHECK(argmax_label({0.0, 0.5, 0.5}) == DelayLabel::on_time);
  CHECK(argmax_label({1.0 / 3, 1.0 / 3, 1.0 / 3}) == DelayLabel::before_time);
}

TEST_CASE("selector arity is a pure function of mode and K") {
  FeatureSelector all{SelectorMode::all};
  FeatureSelector coords{SelectorMode::coords_only};
  FeatureSelector delays{SelectorMode::delays_only};
  for (int k = 0; k <= 8; ++k) {
    CHECK(all.arity(k) == 3 * (k + 1));
    CHECK(coords.arity(k) == 2 * (k + 1));
    CHECK(delays.arity(k) == k + 1);
  }
}

TEST_CASE("selector names parse back to the same mode") {
  for (SelectorMode m :
       {SelectorMode::all, SelectorMode::coords_only, SelectorMode::delays_only}) {
    FeatureSelector s{m};
    CHECK(FeatureSelector::parse(s.name()).mode == m);
  }
  CHECK_THROWS_AS(FeatureSelector::parse("everything"), InputError);
}

// Independent flattening: build the expected vector directly from the window
// fields in the documented order.
static std::vector<double> flatten_oracle(const WindowedInstance& w,
                                          SelectorMode mode) {
  std::vector<double> out;
  if (mode == SelectorMode::all || mode == SelectorMode::coords_only) {
    for (const auto& c : w.coords) {
      out.push_back(c.lat);
      out.push_back(c.lon);
    }
  }
  if (mode == SelectorMode::all || mode == SelectorMode::delays_only) {
    for (double d : w.delays) out.push_back(d);
  }
  return out;
}

TEST_CASE("select_features matches the element-order oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const WindowedInstance w = fixtures::random_window(rng, trial);
    for (SelectorMode m : {SelectorMode::all, SelectorMode::coords_only,
                           SelectorMode::delays_only}) {
      const FeatureVector f = select_features(w, FeatureSelector{m});
      const std::vector<double> want = flatten_oracle(w, m);
      REQUIRE(f.values.size() == want.size());
      CHECK(f.values.size() ==
            static_cast<std::size_t>(FeatureSelector{m}.arity(w.window_k())));
      for (std::size_t j = 0; j < want.size(); ++j) {
        CHECK(f.values[j] == want[j]);
      }
    }
  }
}

TEST_CASE("window validation enforces equal lengths and finite values") {
  Rng rng(3);
  WindowedInstance good = fixtures::random_window(rng, 1);
  CHECK_NOTHROW(good.validate());
  CHECK(good.window_k() == fixtures::kFixtureK);

  WindowedInstance short_delays = good;
  short_delays.delays.pop_back();
  CHECK_THROWS_AS(short_delays.validate(), InputError);

  WindowedInstance short_statuses = good;
  short_statuses.statuses.pop_back();
  CHECK_THROWS_AS(short_statuses.validate(), InputError);

  WindowedInstance empty = good;
  empty.coords.clear();
  empty.delays.clear();
  empty.statuses.clear();
  CHECK_THROWS_AS(empty.validate(), InputError);

  WindowedInstance nan_delay = good;
  nan_delay.delays[0] = std::nan("");
  CHECK_THROWS_AS(nan_delay.validate(), InputError);

  WindowedInstance no_vehicle = good;
  no_vehicle.vehicle_id.clear();
  CHECK_THROWS_AS(no_vehicle.validate(), InputError);
}

TEST_CASE("window JSON round-trips exactly") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    WindowedInstance w = fixtures::random_window(rng, trial);
    w.label = decode_label(trial % 3);
    const WindowedInstance back = window_from_json(window_to_json(w));
    CHECK(back.vehicle_id == w.vehicle_id);
    CHECK(back.direction == w.direction);
    CHECK(back.t == w.t);
    CHECK(back.label == w.label);
    REQUIRE(back.coords.size() == w.coords.size());
    for (std::size_t j = 0; j < w.coords.size(); ++j) {
      CHECK(back.coords[j] == w.coords[j]);
      CHECK(back.delays[j] == w.delays[j]);
      CHECK(back.statuses[j] == w.statuses[j]);
    }
  }
  CHECK_THROWS_AS(window_from_json("{not json"), InputError);
  CHECK_THROWS_AS(window_from_json("{}"), InputError);
}

TEST_CASE("windows file round-trips through jsonl") {
  const std::string path = "stream_core_roundtrip.jsonl";
  std::vector<WindowedInstance> ws = fixtures::simple_rule_stream(25, 5);
  write_windows_jsonl(path, ws);
  const std::vector<WindowedInstance> back = read_windows_jsonl(path);
  REQUIRE(back.size() == ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    CHECK(back[i].vehicle_id == ws[i].vehicle_id);
    CHECK(back[i].t == ws[i].t);
    CHECK(back[i].label == ws[i].label);
    CHECK(back[i].delays == ws[i].delays);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_windows_jsonl("no_such_file.jsonl"), InputError);
}
