#include <string>

#include "bfps/error.hpp"
#include "bfps/model_ir.hpp"
#include "doctest.h"

using namespace bfps;

namespace {

const char* kSingle = R"(format_version = 1
name = single
[conv]
in_channels = 1
out_channels = 1
input = 6x6
kernel = 3
stride = 1
padding = 0
output = 4x4
)";

std::string error_text(std::string_view text) {
  try {
    parse_model(text, "m.model");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_argument);
    return e.what();
  }
  FAIL("expected a parse error");
  return {};
}

}  // namespace

TEST_CASE("output dims follow the shape formula") {
  const auto loaded = parse_model(kSingle, "single.model");
  REQUIRE(loaded.model.layers.size() == 1);
  const auto& l = loaded.model.layers[0];
  CHECK(l.index == 0);
  CHECK(l.out_h == 4);
  CHECK(l.out_w == 4);
  CHECK(loaded.diagnostics.empty());
  CHECK(layer_volumes(l) == LayerVolumes{36, 16, 9});

  CHECK(conv_output_extent(224, 7, 2, 3) == 112);
  CHECK(conv_output_extent(32, 3, 1, 1) == 32);
  CHECK(conv_output_extent(5, 3, 3, 0) == 1);
}

TEST_CASE("volumes use stored dims") {
  ConvLayer l;
  l.in_channels = 3;
  l.out_channels = 64;
  l.in_h = l.in_w = 32;
  l.kernel_h = l.kernel_w = 3;
  l.pad_h = l.pad_w = 1;
  derive_output_dims(l);
  CHECK(layer_volumes(l) == LayerVolumes{3072, 65536, 1728});

  ConvLayer a = l;  // asymmetric padding changes only the output dims
  a.pad_w = 0;
  derive_output_dims(a);
  CHECK(a.out_h == 32);
  CHECK(a.out_w == 30);
  CHECK(layer_volumes(a).inputs == 3072);
  CHECK(layer_volumes(a).outputs == 64 * 32 * 30);
  CHECK(a.mac_count() == 64 * 32 * 30 * 3 * 9);
}

TEST_CASE("bundled models load cleanly") {
  const std::string dir = BFPS_SOURCE_DIR "/models/";
  const auto r18 = load_model(dir + "resnet18.model");
  CHECK(r18.diagnostics.empty());
  CHECK(r18.model.layers.size() == 20);
  CHECK(r18.model.layers.front().out_h == 112);
  std::int64_t downsample = 0;
  for (const auto& l : r18.model.layers) {
    if (l.kernel_h == 1) ++downsample;
    CHECK(l.index == static_cast<int>(&l - r18.model.layers.data()));
  }
  CHECK(downsample == 3);
  CHECK(r18.model.base_directory == std::filesystem::path(dir).parent_path());

  const auto tiny = load_model(dir + "tiny4.model");
  CHECK(tiny.model.layers.size() == 4);
  CHECK(load_model(dir + "resnet20.model").model.layers.size() == 20);
}

TEST_CASE("an 18-conv residual body loads without diagnostics") {
  // Stem plus four stages of two basic blocks (two convs each), no shortcuts.
  std::string text = "format_version = 1\nname = body18\n";
  std::int64_t c = 64, hw = 56;
  auto add = [&](std::int64_t cin, std::int64_t cout, std::int64_t in, int k,
                 int s, int p) {
    text += "[conv]\nin_channels = " + std::to_string(cin) +
            "\nout_channels = " + std::to_string(cout) + "\ninput = " +
            std::to_string(in) + "x" + std::to_string(in) + "\nkernel = " +
            std::to_string(k) + "\nstride = " + std::to_string(s) +
            "\npadding = " + std::to_string(p) + "\n";
  };
  add(3, 64, 224, 7, 2, 3);
  for (int stage = 0; stage < 4; ++stage) {
    for (int conv = 0; conv < 4; ++conv) {
      const bool down = stage > 0 && conv == 0;
      const auto cout = down ? c * 2 : c;
      add(c, cout, hw, 3, down ? 2 : 1, 1);
      if (down) {
        c = cout;
        hw /= 2;
      }
    }
  }
  add(c, 1000, 1, 1, 1, 0);  // classifier as a 1x1 conv
  const auto loaded = parse_model(text, "body18");
  CHECK(loaded.model.layers.size() == 18);
  CHECK(loaded.diagnostics.empty());
}

TEST_CASE("non-convolution blocks are ignored with a warning") {
  std::string text = kSingle;
  text += "[pool]\nkind = max\n[conv]\nin_channels = 1\nout_channels = 2\n"
          "input = 4x4\nkernel = 1\n";
  const auto loaded = parse_model(text, "m.model");
  CHECK(loaded.model.layers.size() == 2);
  CHECK(loaded.model.layers[1].index == 1);
  REQUIRE(loaded.diagnostics.size() == 1);
  CHECK(loaded.diagnostics[0].severity == Diagnostic::Severity::warning);
  CHECK(loaded.diagnostics[0].line == 11);
  CHECK(format_diagnostic(loaded.diagnostics[0], "m.model").find("m.model:11") !=
        std::string::npos);
}

TEST_CASE("errors carry line numbers and are all reported") {
  std::string text = kSingle;
  text.replace(text.find("output = 4x4"), 12, "output = 5x5");
  text += "[conv]\nin_channels = x\nout_channels = 1\ninput = 4x4\nkernel = 1\n";
  const auto what = error_text(text);
  CHECK(what.find("m.model:10") != std::string::npos);
  CHECK(what.find("disagrees") != std::string::npos);
  CHECK(what.find("m.model:12") != std::string::npos);

  CHECK(error_text("format_version = 2\n").find("format_version") != std::string::npos);
  CHECK(error_text("format_version = 1\n[conv]\nin_channels = 1\n")
            .find("missing") != std::string::npos);
  CHECK(error_text("format_version = 1\n[conv]\nin_channels = 3\nout_channels = 4\n"
                   "input = 4x4\nkernel = 1\ngroups = 2\n")
            .find("group") != std::string::npos);
  CHECK(error_text("format_version = 1\n[conv]\nin_channels = 1\nout_channels = 1\n"
                   "input = 2x2\nkernel = 3\n")
            .size() > 0);
  CHECK(error_text("format_version = 1\nbogus = 1\n").find("bogus") != std::string::npos);
}

TEST_CASE("missing files are I/O errors naming the path") {
  try {
    load_model("/nonexistent/dir/x.model");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
    CHECK(std::string(e.what()).find("/nonexistent/dir/x.model") != std::string::npos);
  }
}

TEST_CASE("serialization round-trips") {
  const auto a = load_model(BFPS_SOURCE_DIR "/models/resnet18.model").model;
  const auto b = parse_model(serialize_model(a), "round").model;
  CHECK(a.name == b.name);
  CHECK(a.layers == b.layers);
}
