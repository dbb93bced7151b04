#include "parafac/serialization.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "parafac/error.hpp"

namespace parafac {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw InvalidInput(std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bad field '") + key + "': " + e.what());
  }
}

std::vector<std::uint8_t> read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<double> seq_values(const MatrixSeq& seq) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(seq.length()) * seq.rows() * seq.cols());
  for (int n = seq.first(); n <= seq.last(); ++n)
    for (int r = 0; r < seq.rows(); ++r)
      for (int c = 0; c < seq.cols(); ++c) v.push_back(seq.tap(n)(r, c));
  return v;
}

Json seq_header(const MatrixSeq& seq) {
  return Json{{"rows", seq.rows()},   {"cols", seq.cols()}, {"lo", -seq.first()},
              {"hi", seq.last()},     {"dtype", "f64"},     {"order", "row-major, n-major"}};
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw InvalidInput("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> q{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        q[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw InvalidInput("base64 padding in the middle of a group");
      q[k] = decode_char(c);
      if (q[k] < 0) throw InvalidInput(std::string("invalid base64 character '") + c + "'");
    }
    const std::uint32_t v = (q[0] << 18) | (q[1] << 12) | (q[2] << 6) | q[3];
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::vector<std::uint8_t> pack_doubles(std::span<const double> values) {
  std::vector<std::uint8_t> out(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) out[i * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return out;
}

std::vector<double> unpack_doubles(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 8 != 0) throw InvalidInput("binary payload is not a whole number of doubles");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", base64_encode(pack_doubles(v))}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = field<long long>(j, "rows");
  const auto cols = field<long long>(j, "cols");
  if (rows < 0 || cols < 0) throw InvalidInput("negative matrix dimensions");
  const auto v = unpack_doubles(base64_decode(field<std::string>(j, "data")));
  if (v.size() != static_cast<std::size_t>(rows * cols)) {
    throw InvalidInput("matrix payload has " + std::to_string(v.size()) + " values, expected " +
                       std::to_string(rows * cols));
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[k++];
  return m;
}

Json seq_to_json(const MatrixSeq& seq) {
  Json j = seq_header(seq);
  j["data"] = base64_encode(pack_doubles(seq_values(seq)));
  return j;
}

Json seq_to_json(const MatrixSeq& seq, const std::filesystem::path& sidecar) {
  const auto bytes = pack_doubles(seq_values(seq));
  std::ofstream out(sidecar, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + sidecar.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidInput("failed writing " + sidecar.string());
  Json j = seq_header(seq);
  j["data_file"] = sidecar.filename().string();
  return j;
}

MatrixSeq seq_from_json(const Json& j, const std::filesystem::path& base_dir) {
  const int rows = field<int>(j, "rows");
  const int cols = field<int>(j, "cols");
  const int lo = field<int>(j, "lo");
  const int hi = field<int>(j, "hi");
  if (j.contains("dtype") && j.at("dtype") != "f64") throw InvalidInput("only f64 sequences are supported");
  if (rows < 1 || cols < 1 || lo < 0 || hi < 0) throw InvalidInput("invalid sequence header");
  std::vector<double> v;
  if (j.contains("data_file")) {
    v = unpack_doubles(read_binary(base_dir / field<std::string>(j, "data_file")));
  } else {
    v = unpack_doubles(base64_decode(field<std::string>(j, "data")));
  }
  const std::size_t per_tap = static_cast<std::size_t>(rows) * cols;
  if (v.size() != per_tap * static_cast<std::size_t>(lo + hi + 1)) {
    throw InvalidInput("sequence payload has " + std::to_string(v.size()) + " values, expected " +
                       std::to_string(per_tap * (lo + hi + 1)));
  }
  std::vector<Eigen::MatrixXd> taps;
  std::size_t k = 0;
  for (int n = -lo; n <= hi; ++n) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = v[k++];
    taps.push_back(std::move(m));
  }
  return MatrixSeq(rows, cols, lo, hi, std::move(taps));
}

Json factors_to_json(const ParaunitaryFactors& f) {
  Json j{{"channels", f.channels}, {"q", matrix_to_json(f.q.matrix())}};
  j["neg_factors"] = Json::array();
  j["pos_factors"] = Json::array();
  for (const auto& u : f.neg_factors) j["neg_factors"].push_back(matrix_to_json(u.matrix()));
  for (const auto& u : f.pos_factors) j["pos_factors"].push_back(matrix_to_json(u.matrix()));
  return j;
}

ParaunitaryFactors factors_from_json(const Json& j) {
  ParaunitaryFactors f;
  f.channels = field<int>(j, "channels");
  f.q = OrthoMatrix(matrix_from_json(field<Json>(j, "q")));
  for (const auto& u : field<Json>(j, "neg_factors")) f.neg_factors.emplace_back(matrix_from_json(u));
  for (const auto& u : field<Json>(j, "pos_factors")) f.pos_factors.emplace_back(matrix_from_json(u));
  f.validate();
  return f;
}

Json spec_to_json(const ConvSpec& spec) {
  spec.validate();
  Json j{{"kind", kind_name(spec.kind)}, {"rate", spec.rate}, {"groups", spec.groups}};
  j["filters"] = Json::array();
  for (const auto& f : spec.filters) j["filters"].push_back(seq_to_json(f));
  return j;
}

ConvSpec spec_from_json(const Json& j, const std::filesystem::path& base_dir) {
  ConvSpec spec;
  spec.kind = parse_kind(field<std::string>(j, "kind"));
  spec.rate = field<int>(j, "rate");
  spec.groups = field<int>(j, "groups");
  for (const auto& f : field<Json>(j, "filters")) spec.filters.push_back(seq_from_json(f, base_dir));
  spec.validate();
  return spec;
}

Json signal_to_json(const Signal& x) {
  return Json{{"channels", x.channels()},
              {"length", x.length()},
              {"dtype", "f64"},
              {"order", "channel-fastest, sample-major"},
              {"data", base64_encode(pack_doubles(x.data()))}};
}

Signal signal_from_json(const Json& j) {
  const int channels = field<int>(j, "channels");
  const int length = field<int>(j, "length");
  return Signal(channels, length, unpack_doubles(base64_decode(field<std::string>(j, "data"))));
}

Json report_to_json(const OrthoReport& r) {
  Json j{{"kind", kind_name(r.kind)},
         {"rate", r.rate},
         {"groups", r.groups},
         {"dtype", dtype_name(r.dtype)},
         {"in_channels", r.in_channels},
         {"out_channels", r.out_channels},
         {"length", r.length},
         {"trials", r.trials},
         {"seed", r.seed},
         {"mean_dev", r.ratio_dev_mean},
         {"std_dev", r.ratio_dev_std},
         {"mean_abs_dev", r.mean_abs_dev},
         {"max_abs_dev", r.max_abs_dev},
         {"spectral_residual", r.spectral_residual}};
  j["oracle_residual"] = r.oracle_residual ? Json(*r.oracle_residual) : Json(nullptr);
  j["tolerance"] = r.tolerance;
  j["orthogonal"] = r.orthogonal;
  return j;
}

OrthoReport report_from_json(const Json& j) {
  OrthoReport r;
  r.kind = parse_kind(field<std::string>(j, "kind"));
  r.rate = field<int>(j, "rate");
  r.groups = field<int>(j, "groups");
  r.dtype = parse_dtype(field<std::string>(j, "dtype"));
  r.in_channels = field<int>(j, "in_channels");
  r.out_channels = field<int>(j, "out_channels");
  r.length = field<int>(j, "length");
  r.trials = field<int>(j, "trials");
  r.seed = field<std::uint64_t>(j, "seed");
  r.ratio_dev_mean = field<double>(j, "mean_dev");
  r.ratio_dev_std = field<double>(j, "std_dev");
  r.mean_abs_dev = field<double>(j, "mean_abs_dev");
  r.max_abs_dev = field<double>(j, "max_abs_dev");
  r.spectral_residual = field<double>(j, "spectral_residual");
  if (j.contains("oracle_residual") && !j.at("oracle_residual").is_null()) {
    r.oracle_residual = field<double>(j, "oracle_residual");
  }
  r.tolerance = field<double>(j, "tolerance");
  r.orthogonal = field<bool>(j, "orthogonal");
  return r;
}

std::string report_csv_header() {
  return "kind,R,G,dtype,mean_dev,std_dev,spectral_residual,oracle_residual";
}

std::string report_csv_row(const OrthoReport& r) {
  std::string row = std::string(kind_name(r.kind)) + "," + std::to_string(r.rate) + "," +
                    std::to_string(r.groups) + "," + std::string(dtype_name(r.dtype)) + "," +
                    fmt(r.ratio_dev_mean) + "," + fmt(r.ratio_dev_std) + "," +
                    fmt(r.spectral_residual) + ",";
  if (r.oracle_residual) row += fmt(*r.oracle_residual);
  return row;
}

Chain chain_from_json(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_array()) throw InvalidInput("chain must be a JSON list of layers");
  Chain chain;
  for (const auto& layer : j) {
    const auto type = field<std::string>(layer, "type");
    if (type == "conv") {
      if (layer.contains("inline")) {
        chain.push_back(conv_layer(spec_from_json(layer.at("inline"), base_dir)));
      } else {
        const auto path = base_dir / field<std::string>(layer, "spec");
        chain.push_back(conv_layer(spec_from_json(read_json_file(path), path.parent_path())));
      }
    } else if (type == "groupsort") {
      chain.push_back(group_sort_layer(field<int>(layer, "group_size")));
    } else if (type == "additive") {
      chain.push_back(additive_block(field<double>(layer, "alpha"),
                                     chain_from_json(field<Json>(layer, "first"), base_dir),
                                     chain_from_json(field<Json>(layer, "second"), base_dir)));
    } else if (type == "concat") {
      chain.push_back(concat_block(field<int>(layer, "split"), field<std::vector<int>>(layer, "perm"),
                                   chain_from_json(field<Json>(layer, "first"), base_dir),
                                   chain_from_json(field<Json>(layer, "second"), base_dir)));
    } else {
      throw InvalidInput("unknown layer type '" + type + "'");
    }
  }
  return chain;
}

Json chain_to_json(const Chain& chain) {
  Json out = Json::array();
  for (const auto& layer : chain) {
    if (const auto* spec = std::get_if<ConvSpec>(&layer.op)) {
      out.push_back(Json{{"type", "conv"}, {"inline", spec_to_json(*spec)}});
    } else if (const auto* gs = std::get_if<GroupSort>(&layer.op)) {
      out.push_back(Json{{"type", "groupsort"}, {"group_size", gs->group_size}});
    } else {
      const auto& b = *std::get<std::shared_ptr<const ResidualBlock>>(layer.op);
      if (b.kind == ResidualBlock::Kind::kAdditive) {
        out.push_back(Json{{"type", "additive"},
                           {"alpha", b.alpha},
                           {"first", chain_to_json(b.first)},
                           {"second", chain_to_json(b.second)}});
      } else {
        out.push_back(Json{{"type", "concat"},
                           {"split", b.split},
                           {"perm", b.perm},
                           {"first", chain_to_json(b.first)},
                           {"second", chain_to_json(b.second)}});
      }
    }
  }
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
  if (!out) throw InvalidInput("failed writing " + path.string());
}

}  // namespace parafac
