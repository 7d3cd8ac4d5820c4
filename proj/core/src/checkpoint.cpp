#include "mgrn/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mgrn/errors.hpp"

namespace mgrn {

namespace {

constexpr std::string_view kMagic = "mgrn-checkpoint 1";

void append_tensor(std::ostringstream& out, const std::string& name, int rows,
                   int cols, const double* values) {
  out << "tensor " << name << ' ' << rows << ' ' << cols << '\n';
  char buf[32];
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", values[r * cols + c]);
      out << (c ? " " : "") << buf;
    }
    out << '\n';
  }
}

struct RawTensor {
  int rows = 0, cols = 0;
  std::vector<double> values;
};

}  // namespace

std::string checkpoint_to_text(const Checkpoint& ck) {
  ck.spec.validate();
  const ParamLayout layout(ck.spec);
  if (ck.params.size() != layout.total_size())
    detail::length_mismatch("checkpoint: params vs layout", ck.params.size(),
                            layout.total_size());
  std::ostringstream out;
  out << kMagic << '\n';
  for (const auto& t : layout.tensors())
    append_tensor(out, t.name, t.rows, t.cols, ck.params.data() + t.offset);
  if (!ck.normalization.empty()) {
    append_tensor(out, "norm.shift", 1, kInputColumns, ck.normalization.shift.data());
    append_tensor(out, "norm.scale", 1, kInputColumns, ck.normalization.scale.data());
  }
  out << "spec arch=" << arch_name(ck.spec.arch)
      << " input_dim=" << ck.spec.input_dim
      << " state_dim=" << ck.spec.state_dim;
  if (ck.spec.grouped()) {
    out << " marginal_dim=" << ck.spec.dims.marginal_dim
        << " lambda=" << ck.spec.dims.lambda_factor
        << " groups=" << ck.spec.grouping.to_token_string();
  }
  out << '\n';
  return out.str();
}

Checkpoint checkpoint_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw ParseError("checkpoint: missing '" + std::string(kMagic) + "' header");

  std::map<std::string, RawTensor> tensors;
  std::string spec_line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "tensor") {
      std::string name;
      RawTensor t;
      if (!(ls >> name >> t.rows >> t.cols) || t.rows <= 0 || t.cols <= 0)
        throw ParseError("checkpoint: bad tensor header '" + line + "'");
      t.values.resize(static_cast<std::size_t>(t.rows) * t.cols);
      for (double& v : t.values)
        if (!(in >> v))
          throw ParseError("checkpoint: truncated values for tensor " + name);
      std::getline(in, line);  // consume the remainder of the last value row
      tensors[name] = std::move(t);
    } else if (kind == "spec") {
      std::getline(ls, spec_line);
      break;
    } else {
      throw ParseError("checkpoint: unexpected line '" + line + "'");
    }
  }
  if (spec_line.empty()) throw ParseError("checkpoint: missing trailing spec line");

  std::map<std::string, std::string> fields;
  {
    std::istringstream fs(spec_line);
    std::string kv;
    while (fs >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw ParseError("checkpoint: bad spec field '" + kv + "'");
      fields[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
  }
  auto field = [&](const char* key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end())
      throw ParseError("checkpoint: spec line missing '" + std::string(key) + "'");
    return it->second;
  };

  Checkpoint ck;
  ck.spec.arch = arch_from_name(field("arch"));
  ck.spec.input_dim = std::stoi(field("input_dim"));
  ck.spec.state_dim = std::stoi(field("state_dim"));
  if (ck.spec.grouped()) {
    ck.spec.dims.marginal_dim = std::stoi(field("marginal_dim"));
    ck.spec.dims.lambda_factor = std::stoi(field("lambda"));
    ck.spec.dims.joint_dim = ck.spec.dims.marginal_dim * ck.spec.dims.lambda_factor;
    ck.spec.grouping = GroupingScheme::from_token_string(field("groups"));
  }
  ck.spec.validate();

  const ParamLayout layout(ck.spec);
  ck.params.assign(layout.total_size(), 0.0);
  for (const auto& t : layout.tensors()) {
    const auto it = tensors.find(t.name);
    if (it == tensors.end())
      throw ParseError("checkpoint: missing tensor " + t.name);
    const RawTensor& raw = it->second;
    if (raw.rows != t.rows || raw.cols != t.cols)
      throw ParseError("checkpoint: tensor " + t.name + " has shape " +
                       std::to_string(raw.rows) + "x" + std::to_string(raw.cols) +
                       ", layout expects " + std::to_string(t.rows) + "x" +
                       std::to_string(t.cols));
    for (std::size_t i = 0; i < raw.values.size(); ++i)
      ck.params[t.offset + i] = raw.values[i];
    tensors.erase(it);
  }
  if (auto it = tensors.find("norm.shift"); it != tensors.end()) {
    ck.normalization.shift = it->second.values;
    tensors.erase(it);
    const auto sc = tensors.find("norm.scale");
    if (sc == tensors.end())
      throw ParseError("checkpoint: norm.shift without norm.scale");
    ck.normalization.scale = sc->second.values;
    tensors.erase(sc);
  }
  if (!tensors.empty())
    throw ParseError("checkpoint: unknown tensor " + tensors.begin()->first);
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& file) {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + file.string());
    out << checkpoint_to_text(ck);
    if (!out) throw IoError("write failed for " + file.string());
  }
  std::filesystem::rename(tmp, file);
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return checkpoint_from_text(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
}

}  // namespace mgrn
