#include <fstream>
#include <numeric>

#include "bfps/accuracy_proxy.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bfps;
using bfps::test::make_layer;

namespace {

ModelDesc two_layer_model() {
  ModelDesc m;
  m.name = "two";
  m.layers = {make_layer(3, 8, 8, 8, 3, 1, 1), make_layer(8, 16, 8, 8, 3, 2, 1)};
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    m.layers[i].index = static_cast<int>(i);
    m.layers[i].name = "c" + std::to_string(i);
  }
  return m;
}

std::vector<LayerFormats> uniform_formats(const ModelDesc& m, int qb, int se, int bs) {
  return std::vector<LayerFormats>(m.layers.size(), LayerFormats::uniform(qb, se, bs));
}

}  // namespace

TEST_CASE("synthetic samples are deterministic and shaped by the layer") {
  auto l = make_layer(200, 32, 20, 20, 3, 1, 1);
  l.index = 3;
  const auto a = synthetic_samples(l);
  const auto b = synthetic_samples(l);
  CHECK(a.of(TensorRole::input).values == b.of(TensorRole::input).values);
  CHECK(a.of(TensorRole::input).layout == BlockLayout{1, 96, 64});
  CHECK(a.of(TensorRole::output).layout == BlockLayout{1, 32, 64});
  CHECK(a.of(TensorRole::weight).layout == BlockLayout{16, 96, 9});
  CHECK(a.synthetic == std::array<bool, 3>{true, true, true});

  auto other = l;
  other.index = 4;
  CHECK(synthetic_samples(other).of(TensorRole::input).values !=
        a.of(TensorRole::input).values);
  SampleOptions seeded;
  seeded.seed = 1;
  CHECK(synthetic_samples(l, seeded).of(TensorRole::weight).values !=
        a.of(TensorRole::weight).values);
}

TEST_CASE("proxy loss grows as mantissa bits shrink") {
  const auto l = make_layer(32, 32, 8, 8, 3, 1, 1);
  const auto s = synthetic_samples(l);
  for (int qb : {8, 16}) {
    for (int bs : {1, 8, 48}) {
      double previous = -1.0;
      for (int se = 2; se <= (qb == 8 ? 6 : 7); ++se) {
        const double loss = layer_proxy_loss(s, LayerFormats::uniform(qb, se, bs));
        CHECK(loss > previous);
        previous = loss;
      }
    }
  }
}

TEST_CASE("constant samples lose nothing") {
  LayerSamples s;
  for (std::size_t r = 0; r < 3; ++r) {
    s.tensors[r].layout = {2, 16, 9};
    s.tensors[r].values.assign(288, 1.0);
  }
  for (int se = 2; se <= 6; ++se) {
    for (int bs : {1, 2, 48}) {
      CHECK(layer_proxy_loss(s, LayerFormats::uniform(8, se, bs)) == 0.0);
    }
  }
}

TEST_CASE("larger blocks cost accuracy on fixed-seed samples") {
  const auto l = make_layer(64, 64, 8, 8, 3, 1, 1);
  const auto s = synthetic_samples(l);
  const double small = layer_proxy_loss(s, LayerFormats::uniform(8, 3, 2));
  const double large = layer_proxy_loss(s, LayerFormats::uniform(8, 3, 48));
  CHECK(large > small);
}

TEST_CASE("layer weights follow output volume and sum to one") {
  const auto m = two_layer_model();
  const auto w = layer_loss_weights(m);
  REQUIRE(w.size() == 2);
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0));
  const double v0 = 8.0 * 64, v1 = 16.0 * 16;
  CHECK(w[0] == doctest::Approx(v0 / (v0 + v1)));

  const auto samples = load_samples(m);
  const auto f = uniform_formats(m, 8, 4, 8);
  const double total = proxy_acc_loss(m, samples, f);
  CHECK(total == doctest::Approx(w[0] * layer_proxy_loss(samples[0], f[0]) +
                                 w[1] * layer_proxy_loss(samples[1], f[1])));
}

TEST_CASE("sample files replace synthetic tensors") {
  const auto dir = test::scratch_dir("samples");
  auto m = two_layer_model();
  m.base_directory = dir;
  const auto& l0 = m.layers[0];
  std::vector<float> acts(static_cast<std::size_t>(2 * l0.input_volume()));
  std::vector<float> wts(static_cast<std::size_t>(l0.weight_volume()));
  for (std::size_t i = 0; i < acts.size(); ++i) acts[i] = float(int(i % 13) - 6) * 0.25f;
  for (std::size_t i = 0; i < wts.size(); ++i) wts[i] = float(int(i % 5) - 2) * 0.5f;
  write_f32_file((dir / "in0.f32").string(), acts);
  write_f32_file((dir / "w0.f32").string(), wts);
  m.layers[0].input_samples = "in0.f32";
  m.layers[0].weight_samples = "w0.f32";

  const auto s = load_samples(m);
  CHECK(s[0].synthetic == std::array<bool, 3>{false, true, false});
  CHECK(s[0].of(TensorRole::input).layout == BlockLayout{2, 3, 64});
  CHECK(s[0].of(TensorRole::weight).layout == BlockLayout{8, 3, 9});
  CHECK(s[0].of(TensorRole::input).values.front() == -1.5);

  SampleOptions strict;
  strict.synthetic_fallback = false;
  CHECK_THROWS_AS(load_samples(m, strict), Error);

  m.layers[0].weight_samples = "missing.f32";
  try {
    load_samples(m);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
  }

  write_f32_file((dir / "short.f32").string(), std::vector<float>(10, 1.0f));
  m.layers[0].weight_samples = "short.f32";
  CHECK_THROWS_AS(load_samples(m), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("accuracy table parsing") {
  const auto t = parse_accuracy_table(
      "# measured losses\n"
      "model all 3 8 8 0.0029\n"
      "layer:0 all 3 8 8 0.001   # shared format\n"
      "layer:1 input 3 8 8 0.002\n",
      "t.acc");
  CHECK(t.size() == 3);
  CHECK(t.find({-1, TableRole::all, 3, 8, 8}) == 0.0029);
  CHECK(t.find({1, TableRole::input, 3, 8, 8}) == 0.002);
  CHECK_FALSE(t.find({1, TableRole::output, 3, 8, 8}).has_value());

  const auto again = parse_accuracy_table(serialize_accuracy_table(t), "again");
  CHECK(again.entries() == t.entries());

  auto error_of = [](std::string_view text) {
    try {
      parse_accuracy_table(text, "bad.acc");
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("model input 3 8 8 0.1\n").find("bad.acc:1") != std::string::npos);
  CHECK(error_of("layer:x all 3 8 8 0.1\n").find("scope") != std::string::npos);
  CHECK(error_of("model all 3 8 8 -0.1\n").find(">= 0") != std::string::npos);
  CHECK(error_of("model all 3 8 8\n").find("fields") != std::string::npos);
  const auto two = error_of("model all 3 8 8 0.1\nmodel all 3 8 8 0.2\nbogus all 1 1 1 1\n");
  CHECK(two.find("bad.acc:2") != std::string::npos);
  CHECK(two.find("bad.acc:3") != std::string::npos);

  try {
    load_accuracy_table("/nonexistent/table.acc");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
  }
}

TEST_CASE("table lookup prefers whole-model entries") {
  const auto m = two_layer_model();
  AccuracyTable t;
  // A stored drop of 0.29 points, as measured for one configuration.
  t.add({-1, TableRole::all, 3, 8, 8}, 0.0029);
  t.add({0, TableRole::all, 3, 8, 8}, 0.5);
  t.add({1, TableRole::all, 3, 8, 8}, 0.5);
  CHECK(lookup_acc_loss(t, m, uniform_formats(m, 8, 3, 8)) == 0.0029);

  // Top-1 69.70% before and 69.71% after quantization clamps to no loss.
  CHECK(accuracy_loss_from_top1(0.6970, 0.6971) == 0.0);
  CHECK(accuracy_loss_from_top1(0.6970, 0.6842) == doctest::Approx(0.0128));
}

TEST_CASE("per-layer entries compose by summation") {
  const auto m = two_layer_model();
  AccuracyTable t;
  t.add({0, TableRole::all, 4, 16, 8}, 0.25);
  t.add({1, TableRole::input, 4, 16, 8}, 0.125);
  t.add({1, TableRole::output, 4, 16, 8}, 0.0625);
  t.add({1, TableRole::weight, 4, 16, 8}, 0.5);
  const auto f = uniform_formats(m, 8, 4, 16);
  CHECK(lookup_acc_loss(t, m, f) == 0.25 + 0.125 + 0.0625 + 0.5);

  LookupOptions strict;
  strict.compose = false;
  CHECK_THROWS_AS(lookup_acc_loss(t, m, f, strict), Error);
  CHECK_THROWS_AS(lookup_acc_loss(AccuracyTable{}, m, f, strict), Error);
  CHECK_THROWS_AS(lookup_acc_loss(AccuracyTable{}, m, f), Error);

  // Mixed per-role formats fall back to role entries.
  auto mixed = f;
  mixed[0].weight.exponent_bits = 5;
  CHECK_THROWS_AS(lookup_acc_loss(t, m, mixed), Error);
  t.add({0, TableRole::input, 4, 16, 8}, 0.01);
  t.add({0, TableRole::output, 4, 16, 8}, 0.02);
  t.add({0, TableRole::weight, 5, 16, 8}, 0.04);
  CHECK(lookup_acc_loss(t, m, mixed) == doctest::Approx(0.07 + 0.6875));
}

TEST_CASE("table entries are validated on insertion") {
  AccuracyTable t;
  CHECK_THROWS_AS(t.add({-1, TableRole::input, 3, 8, 8}, 0.1), Error);
  CHECK_THROWS_AS(t.add({0, TableRole::all, 3, 8, 8}, -1.0), Error);
  t.add({0, TableRole::all, 3, 8, 8}, 0.1);
  CHECK_THROWS_AS(t.add({0, TableRole::all, 3, 8, 8}, 0.2), Error);
}
