#include "bfps/model_ir.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "bfps/error.hpp"

namespace bfps {

std::int64_t conv_output_extent(std::int64_t in, std::int64_t kernel,
                                std::int64_t stride, std::int64_t pad) {
  const std::int64_t span = in + 2 * pad - kernel;
  if (span < 0 || stride < 1) return 0;
  return span / stride + 1;
}

void derive_output_dims(ConvLayer& layer) {
  layer.out_h = conv_output_extent(layer.in_h, layer.kernel_h, layer.stride_h,
                                   layer.pad_h);
  layer.out_w = conv_output_extent(layer.in_w, layer.kernel_w, layer.stride_w,
                                   layer.pad_w);
}

void validate_layer(const ConvLayer& l) {
  const std::string where = "layer " + std::to_string(l.index) + ": ";
  if (l.in_channels < 1 || l.out_channels < 1) fail(where + "channels must be >= 1");
  if (l.in_h < 1 || l.in_w < 1) fail(where + "input dims must be >= 1");
  if (l.kernel_h < 1 || l.kernel_w < 1) fail(where + "kernel dims must be >= 1");
  if (l.stride_h < 1 || l.stride_w < 1) fail(where + "strides must be >= 1");
  if (l.pad_h < 0 || l.pad_w < 0) fail(where + "paddings must be >= 0");
  if (l.groups < 1 || l.in_channels % l.groups != 0 ||
      l.out_channels % l.groups != 0) {
    fail(where + "groups=" + std::to_string(l.groups) +
         " must divide both channel counts");
  }
  const auto oh = conv_output_extent(l.in_h, l.kernel_h, l.stride_h, l.pad_h);
  const auto ow = conv_output_extent(l.in_w, l.kernel_w, l.stride_w, l.pad_w);
  if (oh < 1 || ow < 1) fail(where + "kernel larger than padded input");
  if (l.out_h != oh || l.out_w != ow) {
    fail(where + "output " + std::to_string(l.out_h) + "x" +
         std::to_string(l.out_w) + " disagrees with shape formula " +
         std::to_string(oh) + "x" + std::to_string(ow));
  }
}

LayerVolumes layer_volumes(const ConvLayer& layer) {
  return {layer.input_volume(), layer.output_volume(), layer.weight_volume()};
}

std::string format_diagnostic(const Diagnostic& d, std::string_view source) {
  const char* sev = d.severity == Diagnostic::Severity::error     ? "error"
                    : d.severity == Diagnostic::Severity::warning ? "warning"
                                                                  : "note";
  std::ostringstream out;
  out << source << ':' << d.line << ": " << sev << ": " << d.message;
  return out.str();
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_int(std::string_view s, std::int64_t& out) {
  s = trim(s);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

// "7" -> (7, 7), "7x5" -> (7, 5)
bool parse_pair(std::string_view s, std::int64_t& a, std::int64_t& b) {
  const auto x = s.find('x');
  if (x == std::string_view::npos) {
    if (!parse_int(s, a)) return false;
    b = a;
    return true;
  }
  return parse_int(s.substr(0, x), a) && parse_int(s.substr(x + 1), b);
}

struct PendingLayer {
  ConvLayer layer;
  int line = 0;
  bool has_in_channels = false;
  bool has_out_channels = false;
  bool has_input = false;
  bool has_kernel = false;
  std::optional<std::pair<std::int64_t, std::int64_t>> output;
  int output_line = 0;
};

class ModelParser {
 public:
  explicit ModelParser(std::string_view source) : source_(source) {}

  LoadedModel parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string_view line = raw;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) {
        line = line.substr(0, hash);
      }
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        section(line, line_no);
      } else {
        key_value(line, line_no);
      }
    }
    finish_layer();
    if (!version_seen_) error(0, "missing format_version");
    if (result_.model.layers.empty() && errors_.empty()) {
      error(0, "model declares no conv layers");
    }
    if (!errors_.empty()) {
      std::string what;
      for (const auto& d : errors_) {
        if (!what.empty()) what += '\n';
        what += format_diagnostic(d, source_);
      }
      fail(what);
    }
    return std::move(result_);
  }

 private:
  enum class Section { header, conv, ignored };

  void error(int line, std::string message) {
    errors_.push_back({line, Diagnostic::Severity::error, std::move(message)});
  }
  void warn(int line, std::string message) {
    result_.diagnostics.push_back(
        {line, Diagnostic::Severity::warning, std::move(message)});
  }

  void section(std::string_view line, int line_no) {
    finish_layer();
    if (line.back() != ']') {
      error(line_no, "unterminated section header");
      section_ = Section::ignored;
      return;
    }
    const auto name = trim(line.substr(1, line.size() - 2));
    if (name == "conv") {
      section_ = Section::conv;
      pending_ = PendingLayer{};
      pending_->line = line_no;
      pending_->layer.index = static_cast<int>(result_.model.layers.size());
    } else {
      section_ = Section::ignored;
      warn(line_no, "ignoring non-convolution block [" + std::string(name) + "]");
    }
  }

  void key_value(std::string_view line, int line_no) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      error(line_no, "expected 'key = value'");
      return;
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    switch (section_) {
      case Section::header:
        header_key(key, value, line_no);
        break;
      case Section::conv:
        conv_key(key, value, line_no);
        break;
      case Section::ignored:
        break;
    }
  }

  void header_key(std::string_view key, std::string_view value, int line_no) {
    if (key == "format_version") {
      std::int64_t v = 0;
      if (!parse_int(value, v) || v != kModelFormatVersion) {
        error(line_no, "unsupported format_version '" + std::string(value) +
                           "' (expected " +
                           std::to_string(kModelFormatVersion) + ")");
      }
      version_seen_ = true;
    } else if (key == "name") {
      result_.model.name = std::string(value);
    } else {
      error(line_no, "unknown header key '" + std::string(key) + "'");
    }
  }

  void conv_key(std::string_view key, std::string_view value, int line_no) {
    auto& p = *pending_;
    auto& l = p.layer;
    auto bad = [&] {
      error(line_no, "bad value '" + std::string(value) + "' for '" +
                         std::string(key) + "'");
    };
    if (key == "name") {
      l.name = std::string(value);
    } else if (key == "in_channels") {
      if (!parse_int(value, l.in_channels)) bad();
      p.has_in_channels = true;
    } else if (key == "out_channels") {
      if (!parse_int(value, l.out_channels)) bad();
      p.has_out_channels = true;
    } else if (key == "input") {
      if (!parse_pair(value, l.in_h, l.in_w)) bad();
      p.has_input = true;
    } else if (key == "kernel") {
      if (!parse_pair(value, l.kernel_h, l.kernel_w)) bad();
      p.has_kernel = true;
    } else if (key == "stride") {
      if (!parse_pair(value, l.stride_h, l.stride_w)) bad();
    } else if (key == "padding") {
      if (!parse_pair(value, l.pad_h, l.pad_w)) bad();
    } else if (key == "groups") {
      if (!parse_int(value, l.groups)) bad();
    } else if (key == "output") {
      std::int64_t h = 0, w = 0;
      if (!parse_pair(value, h, w)) bad();
      p.output = {h, w};
      p.output_line = line_no;
    } else if (key == "input_samples") {
      l.input_samples = std::string(value);
    } else if (key == "output_samples") {
      l.output_samples = std::string(value);
    } else if (key == "weight_samples") {
      l.weight_samples = std::string(value);
    } else {
      error(line_no, "unknown conv key '" + std::string(key) + "'");
    }
  }

  void finish_layer() {
    if (!pending_) return;
    auto p = std::move(*pending_);
    pending_.reset();
    auto& l = p.layer;
    const auto errors_before = errors_.size();
    if (!p.has_in_channels) error(p.line, "conv block missing in_channels");
    if (!p.has_out_channels) error(p.line, "conv block missing out_channels");
    if (!p.has_input) error(p.line, "conv block missing input");
    if (!p.has_kernel) error(p.line, "conv block missing kernel");
    if (errors_.size() != errors_before) return;

    derive_output_dims(l);
    if (p.output && (p.output->first != l.out_h || p.output->second != l.out_w)) {
      error(p.output_line,
            "output " + std::to_string(p.output->first) + "x" +
                std::to_string(p.output->second) +
                " disagrees with shape formula " + std::to_string(l.out_h) +
                "x" + std::to_string(l.out_w));
      return;
    }
    try {
      validate_layer(l);
    } catch (const Error& e) {
      error(p.line, e.what());
      return;
    }
    result_.model.layers.push_back(std::move(l));
  }

  std::string source_;
  LoadedModel result_;
  std::vector<Diagnostic> errors_;
  Section section_ = Section::header;
  std::optional<PendingLayer> pending_;
  bool version_seen_ = false;
};

std::string pair_text(std::int64_t a, std::int64_t b) {
  return std::to_string(a) + "x" + std::to_string(b);
}

}  // namespace

LoadedModel parse_model(std::string_view text, std::string_view source_name) {
  return ModelParser(source_name).parse(text);
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open model file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto loaded = parse_model(buffer.str(), path.string());
  loaded.model.base_directory = path.parent_path();
  return loaded;
}

std::string serialize_model(const ModelDesc& model) {
  std::ostringstream out;
  out << "format_version = " << kModelFormatVersion << '\n';
  if (!model.name.empty()) out << "name = " << model.name << '\n';
  for (const auto& l : model.layers) {
    out << "\n[conv]\n";
    if (!l.name.empty()) out << "name = " << l.name << '\n';
    out << "in_channels = " << l.in_channels << '\n'
        << "out_channels = " << l.out_channels << '\n'
        << "input = " << pair_text(l.in_h, l.in_w) << '\n'
        << "kernel = " << pair_text(l.kernel_h, l.kernel_w) << '\n'
        << "stride = " << pair_text(l.stride_h, l.stride_w) << '\n'
        << "padding = " << pair_text(l.pad_h, l.pad_w) << '\n'
        << "groups = " << l.groups << '\n'
        << "output = " << pair_text(l.out_h, l.out_w) << '\n';
    if (!l.input_samples.empty()) out << "input_samples = " << l.input_samples << '\n';
    if (!l.output_samples.empty()) out << "output_samples = " << l.output_samples << '\n';
    if (!l.weight_samples.empty()) out << "weight_samples = " << l.weight_samples << '\n';
  }
  return out.str();
}

}  // namespace bfps
