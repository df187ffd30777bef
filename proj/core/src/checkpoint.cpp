// Copyright 2026 The UberNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ubernet/checkpoint.hpp"

#include <openssl/sha.h>

#include <cmath>
#include <fstream>
#include <map>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "ubernet/csv.hpp"
#include "ubernet/error.hpp"

namespace ubernet {
namespace {

using nlohmann::json;

std::string quoted(const std::string& s) { return json(s).dump(); }

std::string number(double v) {
  if (!std::isfinite(v)) throw NumericError("cannot store a non-finite value in a checkpoint");
  return csv::format_double17(v);
}

template <typename T, typename F>
void write_list(std::ostream& out, const std::vector<T>& xs, F&& fmt) {
  out << '[';
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ',';
    out << fmt(xs[i]);
  }
  out << ']';
}

void write_config(std::ostream& out, const NetworkConfig& c) {
  out << "{\n    \"inputs\": [";
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    const auto& in = c.inputs[i];
    out << (i ? ",\n      " : "\n      ") << "{\"name\": " << quoted(in.name) << ", \"kind\": "
        << quoted(std::string(to_string(in.kind))) << ", \"cardinality\": " << in.cardinality
        << '}';
  }
  out << "\n    ],\n";
  out << "    \"lookback\": " << c.lookback << ",\n";
  out << "    \"channels\": " << c.channels << ",\n";
  out << "    \"column_width\": " << c.column_width << ",\n";
  out << "    \"dilations\": ";
  write_list(out, c.dilations, [](std::size_t d) { return std::to_string(d); });
  out << ",\n    \"head\": " << (c.head == HeadKind::Regression ? "\"regression\"" : "\"softmax\"");
  out << ",\n    \"bin_edges\": ";
  write_list(out, c.bin_edges, number);
  out << ",\n    \"bin_values\": ";
  write_list(out, c.bin_values, number);
  out << ",\n    \"max_pool\": " << (c.max_pool ? "true" : "false");
  out << ",\n    \"layer_norm_epsilon\": " << number(c.layer_norm_epsilon) << "\n  }";
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string("checkpoint is missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("checkpoint field '") + key + "' has the wrong type");
  }
}

NetworkConfig read_config(const json& j) {
  NetworkConfig c;
  const auto inputs = field<json>(j, "inputs");
  if (!inputs.is_array()) throw FormatError("checkpoint field 'inputs' must be a list");
  for (const auto& in : inputs) {
    InputColumn col;
    col.name = field<std::string>(in, "name");
    const auto kind = field<std::string>(in, "kind");
    if (kind == "continuous") {
      col.kind = FeatureKind::Continuous;
    } else if (kind == "categorical") {
      col.kind = FeatureKind::Categorical;
    } else {
      throw FormatError("unknown input kind '" + kind + "'");
    }
    col.cardinality = field<int>(in, "cardinality");
    c.inputs.push_back(col);
  }
  c.lookback = field<std::size_t>(j, "lookback");
  c.channels = field<std::size_t>(j, "channels");
  c.column_width = field<std::size_t>(j, "column_width");
  c.dilations = field<std::vector<std::size_t>>(j, "dilations");
  const auto head = field<std::string>(j, "head");
  if (head == "regression") {
    c.head = HeadKind::Regression;
  } else if (head == "softmax") {
    c.head = HeadKind::Softmax;
  } else {
    throw FormatError("unknown head '" + head + "'");
  }
  c.bin_edges = field<std::vector<double>>(j, "bin_edges");
  c.bin_values = field<std::vector<double>>(j, "bin_values");
  c.max_pool = field<bool>(j, "max_pool");
  c.layer_norm_epsilon = field<double>(j, "layer_norm_epsilon");
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint config is invalid: ") + e.what());
  }
  return c;
}

}  // namespace

std::string schema_fingerprint(const std::vector<InputColumn>& inputs) {
  std::string canon;
  for (const auto& in : inputs) {
    canon += in.name;
    canon += '\t';
    canon += to_string(in.kind);
    canon += '\t';
    canon += std::to_string(in.cardinality);
    canon += '\n';
  }
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(canon.data()), canon.size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned char b : digest) {
    hex += kHex[b >> 4];
    hex += kHex[b & 15];
  }
  return hex;
}

void write_checkpoint(std::ostream& out, const Network& net, const Normalizer& normalizer,
                      const CheckpointMeta& meta) {
  net.config.validate();
  out << "{\n  \"format_version\": " << kCheckpointFormatVersion << ",\n";
  out << "  \"config\": ";
  write_config(out, net.config);
  out << ",\n  \"schema_sha\": " << quoted(schema_fingerprint(net.config.inputs)) << ",\n";
  out << "  \"normalizer\": [";
  const auto& cols = normalizer.columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i ? ",\n    " : "\n    ") << "{\"name\": " << quoted(cols[i].name)
        << ", \"mean\": " << number(cols[i].mean) << ", \"stddev\": " << number(cols[i].stddev)
        << ", \"constant\": " << (cols[i].constant ? "true" : "false") << '}';
  }
  out << (cols.empty() ? "],\n" : "\n  ],\n");
  out << "  \"params\": [";
  bool first = true;
  net.params.for_each(net.config.inputs, [&](const std::string& name, const Tensor& t, bool) {
    out << (first ? "\n    " : ",\n    ") << "{\"name\": " << quoted(name) << ", \"shape\": ";
    write_list(out, t.shape, [](std::size_t d) { return std::to_string(d); });
    out << ", \"values\": ";
    write_list(out, t.values, number);
    out << '}';
    first = false;
  });
  out << "\n  ],\n";
  out << "  \"meta\": {\"seed\": " << meta.seed << ", \"iterations\": " << meta.iterations
      << ", \"final_loss\": " << number(meta.final_loss) << "}\n}\n";
}

void save_checkpoint(const std::string& path, const Network& net, const Normalizer& normalizer,
                     const CheckpointMeta& meta) {
  std::ostringstream buf;
  write_checkpoint(buf, net, normalizer, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << buf.str();
  if (!out.flush()) throw InputError("failed writing checkpoint '" + path + "'");
}

Checkpoint read_checkpoint(std::istream& in, const std::optional<std::string>& expected_schema_sha) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed or truncated checkpoint: ") + e.what());
  }
  const auto version = field<int>(doc, "format_version");
  if (version != kCheckpointFormatVersion) {
    throw CompatibilityError("unsupported checkpoint format_version " + std::to_string(version));
  }

  Checkpoint ck;
  ck.network.config = read_config(field<json>(doc, "config"));
  ck.schema_sha = field<std::string>(doc, "schema_sha");
  if (ck.schema_sha != schema_fingerprint(ck.network.config.inputs)) {
    throw FormatError("checkpoint schema_sha does not match its own input list");
  }
  if (expected_schema_sha && *expected_schema_sha != ck.schema_sha) {
    throw CompatibilityError("checkpoint schema fingerprint " + ck.schema_sha +
                             " does not match the data schema " + *expected_schema_sha);
  }

  std::vector<ColumnStats> stats;
  for (const auto& c : field<json>(doc, "normalizer")) {
    stats.push_back({field<std::string>(c, "name"), field<double>(c, "mean"),
                     field<double>(c, "stddev"), field<bool>(c, "constant")});
  }
  ck.normalizer = Normalizer(std::move(stats));

  std::map<std::string, const json*> stored;
  const auto params = field<json>(doc, "params");
  if (!params.is_array()) throw FormatError("checkpoint field 'params' must be a list");
  for (const auto& p : params) stored[field<std::string>(p, "name")] = &p;

  // Shapes come from the config; the file must agree with them exactly.
  ck.network = init_params(ck.network.config, 0);
  std::size_t matched = 0;
  ck.network.params.for_each(ck.network.config.inputs, [&](const std::string& name, Tensor& t, bool) {
    const auto it = stored.find(name);
    if (it == stored.end()) throw FormatError("checkpoint is missing parameter '" + name + "'");
    const auto shape = field<std::vector<std::size_t>>(*it->second, "shape");
    if (shape != t.shape) throw FormatError("parameter '" + name + "' has an unexpected shape");
    auto values = field<std::vector<double>>(*it->second, "values");
    if (values.size() != t.values.size()) {
      throw FormatError("parameter '" + name + "' has the wrong number of values");
    }
    t.values = std::move(values);
    ++matched;
  });
  if (matched != stored.size()) throw FormatError("checkpoint holds unknown parameter arrays");

  const auto meta = field<json>(doc, "meta");
  ck.meta.seed = field<std::uint64_t>(meta, "seed");
  ck.meta.iterations = field<std::size_t>(meta, "iterations");
  ck.meta.final_loss = field<double>(meta, "final_loss");
  return ck;
}

Checkpoint load_checkpoint(const std::string& path,
                           const std::optional<std::string>& expected_schema_sha) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in, expected_schema_sha);
}

}  // namespace ubernet
