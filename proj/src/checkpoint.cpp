#include "hmlc/checkpoint.hpp"

#include <sstream>
#include <vector>

#include "hmlc/csv.hpp"
#include "hmlc/error.hpp"

namespace hmlc {
namespace {

constexpr std::string_view kMagic = "hmlc-checkpoint";
constexpr int kVersion = 1;

void put_values(std::string& out, std::string_view tag, std::span<const double> values) {
  out += tag;
  for (double v : values) {
    out.push_back(' ');
    out += csv::format_double(v);
  }
  out.push_back('\n');
}

class Reader {
 public:
  explicit Reader(std::string_view text) : in_(std::string(text)) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) fail("unexpected end of checkpoint");
    return w;
  }
  void expect(std::string_view w) {
    const std::string got = word();
    if (got != w) fail("expected '" + std::string(w) + "', found '" + got + "'");
  }
  std::size_t count() {
    const std::string w = word();
    std::size_t n = 0;
    std::size_t pos = 0;
    try {
      n = std::stoull(w, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != w.size() || w.empty() || w[0] == '-') fail("expected a count, found '" + w + "'");
    return n;
  }
  double value() {
    const std::string w = word();
    double v = 0;
    if (!csv::parse_double(w, v)) fail("bad number '" + w + "'");
    return v;
  }
  void values(std::span<double> out) {
    for (double& v : out) v = value();
  }
  [[noreturn]] static void fail(const std::string& msg) { throw DataError("checkpoint: " + msg); }

 private:
  std::istringstream in_;
};

}  // namespace

std::string format_checkpoint(const Checkpoint& ckpt) {
  std::string out;
  out += std::string(kMagic) + " " + std::to_string(kVersion) + "\n";
  const auto layers = ckpt.model.layers();
  out += "layers " + std::to_string(layers.size()) + "\n";
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    out += "layer " + std::to_string(l) + " " + std::to_string(layer.outputs()) + " " +
           std::to_string(layer.inputs()) + " " + (layer.frozen ? "1" : "0") + "\n";
    put_values(out, "w", layer.weights.values());
    put_values(out, "b", layer.bias);
  }
  if (ckpt.optimizer) {
    const AdamState& s = *ckpt.optimizer;
    out += "adam " + std::to_string(s.t) + "\n";
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string idx = " " + std::to_string(l);
      put_values(out, "mw" + idx, s.m_weights[l].values());
      put_values(out, "vw" + idx, s.v_weights[l].values());
      put_values(out, "mb" + idx, s.m_bias[l]);
      put_values(out, "vb" + idx, s.v_bias[l]);
    }
  } else {
    out += "adam none\n";
  }
  out += "end\n";
  return out;
}

Checkpoint parse_checkpoint(std::string_view text) {
  Reader r(text);
  r.expect(kMagic);
  if (r.count() != kVersion) Reader::fail("unsupported version");
  r.expect("layers");
  const std::size_t n = r.count();
  if (n == 0) Reader::fail("no layers");
  std::vector<Layer> layers(n);
  for (std::size_t l = 0; l < n; ++l) {
    r.expect("layer");
    if (r.count() != l) Reader::fail("layer blocks out of order");
    const std::size_t outputs = r.count();
    const std::size_t inputs = r.count();
    const std::size_t frozen = r.count();
    if (frozen > 1) Reader::fail("frozen flag must be 0 or 1");
    layers[l].weights = Matrix(outputs, inputs);
    layers[l].bias.assign(outputs, 0.0);
    layers[l].frozen = frozen == 1;
    r.expect("w");
    r.values(layers[l].weights.values());
    r.expect("b");
    r.values(layers[l].bias);
  }
  Checkpoint ckpt;
  try {
    ckpt.model = Mlp(std::move(layers));
  } catch (const ConfigError& e) {
    Reader::fail(e.what());
  }
  r.expect("adam");
  const std::string t = r.word();
  if (t != "none") {
    AdamState s = AdamState::for_model(ckpt.model);
    try {
      s.t = std::stoull(t);
    } catch (const std::exception&) {
      Reader::fail("bad adam step '" + t + "'");
    }
    for (std::size_t l = 0; l < n; ++l) {
      const auto tagged = [&](std::string_view tag, std::span<double> dst) {
        r.expect(tag);
        if (r.count() != l) Reader::fail("optimizer blocks out of order");
        r.values(dst);
      };
      tagged("mw", s.m_weights[l].values());
      tagged("vw", s.v_weights[l].values());
      tagged("mb", s.m_bias[l]);
      tagged("vb", s.v_bias[l]);
    }
    ckpt.optimizer = std::move(s);
  }
  r.expect("end");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  csv::write_file(path, format_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return parse_checkpoint(csv::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace hmlc
