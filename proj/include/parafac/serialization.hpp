#pragma once

// JSON forms of the library types. Matrix data is stored row-major as
// little-endian IEEE doubles, base64 encoded inline or in a sidecar file.
// Round trips are bit-exact.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "parafac/convops.hpp"
#include "parafac/lipnet.hpp"
#include "parafac/paraunitary.hpp"
#include "parafac/polymat.hpp"
#include "parafac/signal.hpp"

namespace parafac {

using Json = nlohmann::ordered_json;

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws InvalidInput on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::vector<std::uint8_t> pack_doubles(std::span<const double> values);
std::vector<double> unpack_doubles(std::span<const std::uint8_t> bytes);

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);

// {rows, cols, lo, hi, dtype, order, data}; taps n-major, each row-major.
// Stored lo/hi describe the support [-lo, hi] of the trimmed sequence.
Json seq_to_json(const MatrixSeq& seq);
// Writes the taps to `sidecar` and references it by file name instead of
// embedding them.
Json seq_to_json(const MatrixSeq& seq, const std::filesystem::path& sidecar);
// Sidecar references resolve relative to base_dir.
MatrixSeq seq_from_json(const Json& j, const std::filesystem::path& base_dir = {});

Json factors_to_json(const ParaunitaryFactors& f);
ParaunitaryFactors factors_from_json(const Json& j);

Json spec_to_json(const ConvSpec& spec);
ConvSpec spec_from_json(const Json& j, const std::filesystem::path& base_dir = {});

Json signal_to_json(const Signal& x);
Signal signal_from_json(const Json& j);

Json report_to_json(const OrthoReport& r);
OrthoReport report_from_json(const Json& j);
std::string report_csv_header();
std::string report_csv_row(const OrthoReport& r);

// A chain is a JSON list of layers:
//   {"type": "conv", "spec": "relative/path.json"} or {"type": "conv", "inline": {...}}
//   {"type": "groupsort", "group_size": g}
//   {"type": "additive", "alpha": a, "first": [...], "second": [...]}
//   {"type": "concat", "split": k, "perm": [...], "first": [...], "second": [...]}
// Spec paths resolve relative to base_dir.
Chain chain_from_json(const Json& j, const std::filesystem::path& base_dir = {});
// Convolutions are written inline.
Json chain_to_json(const Chain& chain);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace parafac
