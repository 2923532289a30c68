#include "bfps/accuracy_proxy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "bfps/error.hpp"

namespace bfps {

namespace {

constexpr std::array<TensorRole, 3> kRoles = {TensorRole::input, TensorRole::output,
                                              TensorRole::weight};

const BfpSpec& spec_of(const LayerFormats& f, TensorRole r) {
  switch (r) {
    case TensorRole::input:
      return f.input;
    case TensorRole::output:
      return f.output;
    case TensorRole::weight:
      return f.weight;
  }
  return f.input;
}

SampleTensor gaussian(BlockLayout layout, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  SampleTensor t;
  t.layout = layout;
  t.values.resize(static_cast<std::size_t>(layout.element_count()));
  for (auto& v : t.values) v = unit(rng);
  return t;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined words.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a * 4 + b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SampleTensor load_activation(const std::filesystem::path& path,
                             std::int64_t channels, std::int64_t spatial) {
  const auto raw = read_f32_file(path.string(), -1);
  const auto per_item = channels * spatial;
  const auto n = static_cast<std::int64_t>(raw.size());
  if (n == 0 || n % per_item != 0) {
    fail_io("sample file '" + path.string() + "' holds " + std::to_string(n) +
            " floats, not a multiple of " + std::to_string(per_item));
  }
  SampleTensor t;
  t.layout = {n / per_item, channels, spatial};
  t.values.assign(raw.begin(), raw.end());
  return t;
}

}  // namespace

LayerSamples synthetic_samples(const ConvLayer& layer,
                               const SampleOptions& options) {
  const auto idx = static_cast<std::uint64_t>(layer.index);
  const auto spatial = [&](std::int64_t h, std::int64_t w) {
    return std::min(h, options.max_spatial) * std::min(w, options.max_spatial);
  };
  LayerSamples s;
  s.tensors[0] = gaussian({1, std::min(layer.in_channels, options.max_channels),
                           spatial(layer.in_h, layer.in_w)},
                          mix(options.seed, idx, 0));
  s.tensors[1] = gaussian({1, std::min(layer.out_channels, options.max_channels),
                           spatial(layer.out_h, layer.out_w)},
                          mix(options.seed, idx, 1));
  s.tensors[2] = gaussian({std::min(layer.out_channels, options.max_out_channels),
                           std::min(layer.in_channels_per_group(), options.max_channels),
                           layer.kernel_h * layer.kernel_w},
                          mix(options.seed, idx, 2));
  s.synthetic = {true, true, true};
  return s;
}

std::vector<LayerSamples> load_samples(const ModelDesc& model,
                                       const SampleOptions& options) {
  std::vector<LayerSamples> out;
  out.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    auto s = synthetic_samples(layer, options);
    const std::array<const std::string*, 3> paths = {
        &layer.input_samples, &layer.output_samples, &layer.weight_samples};
    for (std::size_t r = 0; r < 3; ++r) {
      if (paths[r]->empty()) {
        if (!options.synthetic_fallback) {
          fail("layer '" + layer.name + "' has no " +
               std::string(to_string(kRoles[r])) +
               " samples and synthetic fallback is disabled");
        }
        continue;
      }
      const auto path = model.base_directory / *paths[r];
      if (r == 0) {
        s.tensors[r] = load_activation(path, layer.in_channels, layer.in_h * layer.in_w);
      } else if (r == 1) {
        s.tensors[r] =
            load_activation(path, layer.out_channels, layer.out_h * layer.out_w);
      } else {
        const auto raw = read_f32_file(path.string(), layer.weight_volume());
        s.tensors[r].layout = {layer.out_channels, layer.in_channels_per_group(),
                               layer.kernel_h * layer.kernel_w};
        s.tensors[r].values.assign(raw.begin(), raw.end());
      }
      s.synthetic[r] = false;
    }
    out.push_back(std::move(s));
  }
  return out;
}

double role_proxy_loss(const SampleTensor& samples, const BfpSpec& spec,
                       const CodecOptions& codec) {
  return quantization_error(samples.values, samples.layout, spec, codec)
      .normalized_mse();
}

double layer_proxy_loss(const LayerSamples& samples, const LayerFormats& formats,
                        const CodecOptions& codec) {
  double loss = 0.0;
  for (auto r : kRoles) loss += role_proxy_loss(samples.of(r), spec_of(formats, r), codec);
  return loss;
}

std::vector<double> layer_loss_weights(const ModelDesc& model) {
  double total = 0.0;
  for (const auto& l : model.layers) total += static_cast<double>(l.output_volume());
  std::vector<double> w;
  w.reserve(model.layers.size());
  for (const auto& l : model.layers) {
    w.push_back(static_cast<double>(l.output_volume()) / total);
  }
  return w;
}

double proxy_acc_loss(const ModelDesc& model, std::span<const LayerSamples> samples,
                      std::span<const LayerFormats> formats,
                      const CodecOptions& codec) {
  if (samples.size() != model.layers.size() || formats.size() != model.layers.size()) {
    fail("proxy loss needs samples and formats for every layer");
  }
  const auto w = layer_loss_weights(model);
  double loss = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    loss += w[l] * layer_proxy_loss(samples[l], formats[l], codec);
  }
  return loss;
}

std::string_view to_string(TableRole role) {
  switch (role) {
    case TableRole::input:
      return "input";
    case TableRole::output:
      return "output";
    case TableRole::weight:
      return "weight";
    case TableRole::all:
      return "all";
  }
  return "?";
}

void AccuracyTable::add(const AccuracyKey& key, double loss) {
  if (!std::isfinite(loss) || loss < 0.0) {
    fail("accuracy loss must be a finite value >= 0");
  }
  if (key.layer < 0 && key.role != TableRole::all) {
    fail("whole-model accuracy entries must use role 'all'");
  }
  if (!entries_.emplace(key, loss).second) fail("duplicate accuracy table entry");
}

std::optional<double> AccuracyTable::find(const AccuracyKey& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> AccuracyTable::layer_loss(int layer,
                                                const LayerFormats& formats) const {
  const auto key = [&](TableRole role, const BfpSpec& s) {
    return AccuracyKey{layer, role, s.exponent_bits, s.block_size, s.total_bits};
  };
  // Specs carry their role tag, so compare the format fields only.
  const auto same = [](const BfpSpec& a, const BfpSpec& b) {
    return a.total_bits == b.total_bits && a.exponent_bits == b.exponent_bits &&
           a.block_size == b.block_size;
  };
  if (same(formats.input, formats.output) && same(formats.input, formats.weight)) {
    if (auto v = find(key(TableRole::all, formats.input))) return v;
  }
  double sum = 0.0;
  const std::array<std::pair<TableRole, const BfpSpec*>, 3> roles = {{
      {TableRole::input, &formats.input},
      {TableRole::output, &formats.output},
      {TableRole::weight, &formats.weight},
  }};
  for (const auto& [role, spec] : roles) {
    const auto v = find(key(role, *spec));
    if (!v) return std::nullopt;
    sum += *v;
  }
  return sum;
}

AccuracyTable parse_accuracy_table(std::string_view text,
                                   std::string_view source_name) {
  AccuracyTable table;
  std::vector<std::string> errors;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::vector<std::string> f;
    for (std::string w; fields >> w;) f.push_back(w);
    if (f.empty()) continue;
    auto error = [&](const std::string& msg) {
      errors.push_back(std::string(source_name) + ":" + std::to_string(number) +
                       ": error: " + msg);
    };
    if (f.size() != 6) {
      error("expected '<scope> <role> <se> <bs> <qb> <loss>', got " +
            std::to_string(f.size()) + " fields");
      continue;
    }
    AccuracyKey key;
    if (f[0] == "model") {
      key.layer = -1;
    } else if (f[0].rfind("layer:", 0) == 0) {
      const auto digits = std::string_view(f[0]).substr(6);
      int v = -1;
      const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec != std::errc{} || p != digits.data() + digits.size() || v < 0) {
        error("bad layer scope '" + f[0] + "'");
        continue;
      }
      key.layer = v;
    } else {
      error("scope must be 'model' or 'layer:<index>', got '" + f[0] + "'");
      continue;
    }
    if (f[1] == "input") {
      key.role = TableRole::input;
    } else if (f[1] == "output") {
      key.role = TableRole::output;
    } else if (f[1] == "weight") {
      key.role = TableRole::weight;
    } else if (f[1] == "all") {
      key.role = TableRole::all;
    } else {
      error("unknown role '" + f[1] + "'");
      continue;
    }
    std::array<int, 3> ints{};
    bool ok = true;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& s = f[2 + i];
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), ints[i]);
      if (ec != std::errc{} || p != s.data() + s.size() || ints[i] < 1) {
        error("expected a positive integer, got '" + s + "'");
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    key.exponent_bits = ints[0];
    key.block_size = ints[1];
    key.total_bits = ints[2];
    double loss = 0.0;
    {
      const auto& s = f[5];
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), loss);
      if (ec != std::errc{} || p != s.data() + s.size()) {
        error("expected a number, got '" + s + "'");
        continue;
      }
    }
    try {
      table.add(key, loss);
    } catch (const Error& e) {
      error(e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    fail(msg);
  }
  return table;
}

AccuracyTable load_accuracy_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open accuracy table '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_accuracy_table(text.str(), path.string());
}

std::string serialize_accuracy_table(const AccuracyTable& table) {
  std::ostringstream out;
  out.precision(17);
  out << "# scope role se bs qb loss\n";
  for (const auto& [k, v] : table.entries()) {
    out << (k.layer < 0 ? std::string("model") : "layer:" + std::to_string(k.layer))
        << ' ' << to_string(k.role) << ' ' << k.exponent_bits << ' ' << k.block_size
        << ' ' << k.total_bits << ' ' << v << '\n';
  }
  return out.str();
}

double lookup_acc_loss(const AccuracyTable& table, const ModelDesc& model,
                       std::span<const LayerFormats> formats,
                       const LookupOptions& options) {
  if (formats.size() != model.layers.size()) {
    fail("accuracy lookup needs formats for every layer");
  }
  if (formats.empty()) fail("accuracy lookup on an empty model");
  const auto& ref = formats.front().input;
  const bool uniform = std::all_of(formats.begin(), formats.end(), [&](const LayerFormats& f) {
    return std::all_of(kRoles.begin(), kRoles.end(), [&](TensorRole r) {
      const auto& s = spec_of(f, r);
      return s.total_bits == ref.total_bits && s.exponent_bits == ref.exponent_bits &&
             s.block_size == ref.block_size;
    });
  });
  if (uniform) {
    if (auto v = table.find({-1, TableRole::all, ref.exponent_bits, ref.block_size,
                             ref.total_bits})) {
      return *v;
    }
  }
  if (!options.compose) {
    fail("accuracy table has no whole-model entry for this configuration");
  }
  double sum = 0.0;
  for (std::size_t l = 0; l < formats.size(); ++l) {
    const auto v = table.layer_loss(static_cast<int>(l), formats[l]);
    if (!v) {
      fail("accuracy table does not cover layer " + std::to_string(l) + " ('" +
           model.layers[l].name + "') under SE=" +
           std::to_string(formats[l].weight.exponent_bits) +
           " BS=" + std::to_string(formats[l].weight.block_size));
    }
    sum += *v;
  }
  return sum;
}

double accuracy_loss_from_top1(double baseline, double quantized) {
  return std::max(0.0, baseline - quantized);
}

}  // namespace bfps
