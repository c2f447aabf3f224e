// SPDX-License-Identifier: Apache-2.0
#include "acorl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "acorl/errors.hpp"

namespace acorl {

namespace {

constexpr const char* kMagic = "ACORL1";

std::string shape_field(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  return os.str();
}

std::vector<std::size_t> parse_shape_field(const std::string& s, const std::string& ctx) {
  std::vector<std::size_t> shape;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find('x', pos);
    std::string tok = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    try {
      shape.push_back(static_cast<std::size_t>(std::stoull(tok)));
    } catch (const std::exception&) {
      throw DataError("checkpoint: bad shape '" + s + "' in " + ctx);
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (shape.empty() || shape.size() > 2) {
    throw DataError("checkpoint: bad shape '" + s + "' in " + ctx);
  }
  return shape;
}

std::vector<std::size_t> list_to_sizes(const std::string& s, const std::string& ctx) {
  // comma-separated positive integers, "-" encodes the empty list
  std::vector<std::size_t> out;
  if (s == "-") return out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t next = s.find(',', pos);
    std::string tok = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    try {
      out.push_back(static_cast<std::size_t>(std::stoull(tok)));
    } catch (const std::exception&) {
      throw DataError("checkpoint: bad integer list '" + s + "' in " + ctx);
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string sizes_to_list(const std::vector<std::size_t>& v) {
  if (v.empty()) return "-";
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v[i];
  }
  return os.str();
}

}  // namespace

void write_container(const std::filesystem::path& path, const Container& c) {
  std::ostringstream manifest;
  manifest << kMagic << "\n";
  manifest << "type " << c.type << "\n";
  for (const auto& [k, v] : c.fields) manifest << k << " " << v << "\n";

  std::vector<unsigned char> blob;
  std::size_t offset = 0;
  for (const auto& [name, t] : c.params) {
    manifest << "param " << name << " " << shape_field(t.shape) << " " << offset << " " << t.size()
             << "\n";
    for (double d : t.data) {
      float f = static_cast<float>(d);
      std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
      for (int i = 0; i < 4; ++i) blob.push_back(static_cast<unsigned char>(bits >> (8 * i)));
    }
    offset += 4 * t.size();
  }
  manifest << "blob_bytes " << blob.size() << "\n";
  manifest << "END\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("checkpoint: cannot open '" + path.string() + "' for writing");
  const std::string header = manifest.str();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (!out) throw DataError("checkpoint: write failed for '" + path.string() + "'");
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open '" + path.string() + "'");

  auto fail = [&](const std::string& msg) -> DataError {
    return DataError("checkpoint '" + path.string() + "': " + msg);
  };

  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw fail("bad magic (expected " + std::string(kMagic) + ")");
  }
  if (!std::getline(in, line) || line.rfind("type ", 0) != 0) {
    throw fail("missing type line");
  }

  Container c;
  c.type = line.substr(5);

  struct ParamEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset;
    std::size_t count;
  };
  std::vector<ParamEntry> entries;
  std::size_t blob_bytes = 0;
  bool saw_blob_bytes = false;
  bool saw_end = false;

  while (std::getline(in, line)) {
    if (line == "END") {
      saw_end = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "param") {
      ParamEntry e;
      std::string shape_tok;
      if (!(ls >> e.name >> shape_tok >> e.offset >> e.count)) {
        throw fail("malformed param line '" + line + "'");
      }
      e.shape = parse_shape_field(shape_tok, "param " + e.name);
      if (shape_numel(e.shape) != e.count) {
        throw fail("param " + e.name + ": shape does not match element count");
      }
      entries.push_back(std::move(e));
    } else if (key == "blob_bytes") {
      if (!(ls >> blob_bytes)) throw fail("malformed blob_bytes line");
      saw_blob_bytes = true;
    } else if (key.empty()) {
      throw fail("empty manifest line");
    } else {
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      c.fields.emplace_back(key, value);
    }
  }
  if (!saw_end) throw fail("truncated manifest (no END)");
  if (!saw_blob_bytes) throw fail("missing blob_bytes");

  std::size_t expect_offset = 0;
  for (const auto& e : entries) {
    if (e.offset != expect_offset) {
      throw fail("param " + e.name + ": offset " + std::to_string(e.offset) +
                 " is not contiguous (expected " + std::to_string(expect_offset) + ")");
    }
    expect_offset += 4 * e.count;
  }
  if (expect_offset != blob_bytes) {
    throw fail("blob_bytes " + std::to_string(blob_bytes) + " does not match param total " +
               std::to_string(expect_offset));
  }

  std::streamoff blob_start = in.tellg();
  std::vector<unsigned char> blob(blob_bytes);
  in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob_bytes));
  std::size_t got = static_cast<std::size_t>(in.gcount());
  if (got != blob_bytes) {
    throw fail("truncated blob at byte offset " +
               std::to_string(static_cast<std::size_t>(blob_start) + got) + " (expected " +
               std::to_string(static_cast<std::size_t>(blob_start) + blob_bytes) + " bytes)");
  }
  char extra;
  if (in.read(&extra, 1)) {
    throw fail("trailing bytes after blob at offset " +
               std::to_string(static_cast<std::size_t>(blob_start) + blob_bytes));
  }

  for (const auto& e : entries) {
    std::vector<double> data(e.count);
    for (std::size_t i = 0; i < e.count; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(blob[e.offset + 4 * i + b]) << (8 * b);
      }
      data[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    c.params.emplace_back(e.name, Tensor(e.shape, std::move(data)));
  }
  return c;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  Container c;
  c.type = "model";
  c.fields = {
      {"head", head_kind_to_string(model.spec.head)},
      {"input_dim", std::to_string(model.spec.input_dim)},
      {"hidden_dims", sizes_to_list(model.spec.hidden_dims)},
      {"repr_dim", std::to_string(model.spec.repr_dim)},
      {"num_classes", std::to_string(model.spec.num_classes)},
      {"activation", model.spec.activation},
  };
  c.params = model.params;
  write_container(path, c);
}

Model load_model(const std::filesystem::path& path) {
  Container c = read_container(path);
  if (c.type != "model") {
    throw DataError("checkpoint '" + path.string() + "': expected type model, got " + c.type);
  }
  Model m;
  for (const auto& [k, v] : c.fields) {
    try {
      if (k == "head") {
        m.spec.head = head_kind_from_string(v);
      } else if (k == "input_dim") {
        m.spec.input_dim = std::stoull(v);
      } else if (k == "hidden_dims") {
        m.spec.hidden_dims = list_to_sizes(v, "hidden_dims");
      } else if (k == "repr_dim") {
        m.spec.repr_dim = std::stoull(v);
      } else if (k == "num_classes") {
        m.spec.num_classes = std::stoull(v);
      } else if (k == "activation") {
        m.spec.activation = v;
      } else {
        throw DataError("checkpoint '" + path.string() + "': unknown field '" + k + "'");
      }
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError("checkpoint '" + path.string() + "': bad value for field '" + k + "'");
    }
  }
  m.params = std::move(c.params);

  // Cross-check the manifest against the declared architecture.
  try {
    m.spec.validate();
  } catch (const ConfigError& e) {
    throw DataError("checkpoint '" + path.string() + "': inconsistent spec: " + e.what());
  }
  Model expect = build_model(m.spec, 0);
  if (expect.params.size() != m.params.size()) {
    throw DataError("checkpoint '" + path.string() + "': parameter count does not match spec");
  }
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (expect.params[i].first != m.params[i].first ||
        !same_shape(expect.params[i].second.shape, m.params[i].second.shape)) {
      throw DataError("checkpoint '" + path.string() + "': parameter " + m.params[i].first +
                      " does not match spec");
    }
  }
  return m;
}

}  // namespace acorl
