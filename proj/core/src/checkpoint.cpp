#include "focal/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <map>
#include <sstream>

#include "focal/errors.hpp"
#include "fs_util.hpp"

namespace focal {

using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kPayload = "tensors.bin";

void append_le(std::string& out, const Eigen::MatrixXd& m) {
  const std::size_t start = out.size();
  out.resize(start + static_cast<std::size_t>(m.size()) * sizeof(double));
  char* dst = out.data() + start;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(m.data()[i]);
    for (int b = 0; b < 8; ++b) {
      *dst++ = static_cast<char>(bits & 0xffU);
      bits >>= 8;
    }
  }
}

void read_le(const std::string& payload, std::size_t offset, Eigen::MatrixXd& m) {
  const auto* src = reinterpret_cast<const unsigned char*>(payload.data() + offset);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | src[b];
    m.data()[i] = std::bit_cast<double>(bits);
    src += 8;
  }
}

struct TensorEntry {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;
  std::size_t nbytes = 0;
};

[[noreturn]] void corrupt(const std::filesystem::path& dir, const std::string& why) {
  throw PersistenceError("checkpoint " + dir.string() + ": " + why);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const TrainState& state, const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw PersistenceError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());

  const auto params = state.model.parameters();
  if (state.optimizer.m.size() != params.size() || state.optimizer.v.size() != params.size()) {
    throw UsageError("optimizer state does not match the model parameters");
  }
  std::string payload;
  json tensors = json::array();
  auto add = [&](const std::string& name, const Eigen::MatrixXd& m) {
    const std::size_t offset = payload.size();
    append_le(payload, m);
    tensors.push_back({{"name", name},
                       {"shape", {m.rows(), m.cols()}},
                       {"dtype", "float64"},
                       {"offset", offset},
                       {"nbytes", payload.size() - offset}});
  };
  for (const Parameter* p : params) add(p->name, p->value);
  for (std::size_t i = 0; i < params.size(); ++i) add("adam.m/" + params[i]->name, state.optimizer.m[i]);
  for (std::size_t i = 0; i < params.size(); ++i) add("adam.v/" + params[i]->name, state.optimizer.v[i]);

  json shapes = json::array();
  for (std::size_t j = 0; j < state.model.num_modalities(); ++j) {
    const auto& s = state.model.encoder(j).shape();
    shapes.push_back({{"id", s.id},
                      {"channels", s.channels},
                      {"intervals", s.intervals},
                      {"bins", s.bins},
                      {"interval_len", s.interval_len}});
  }
  std::ostringstream rng;
  rng << state.rng;

  const json manifest = {{"format_version", kCheckpointFormatVersion},
                         {"payload", kPayload},
                         {"payload_bytes", payload.size()},
                         {"tensors", tensors},
                         {"modalities", shapes},
                         {"config", config_to_json(config)},
                         {"rng_state", rng.str()},
                         {"epoch", state.epoch},
                         {"step", state.step},
                         {"optimizer_step", state.optimizer.step}};
  detail::write_file_atomic(dir / kPayload, payload);
  detail::write_file_atomic(dir / kManifest, manifest.dump(2) + "\n");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw PersistenceError("checkpoint directory not found: " + dir.string());
  if (!std::filesystem::exists(dir / kManifest)) corrupt(dir, "missing manifest.json");
  if (!std::filesystem::exists(dir / kPayload)) corrupt(dir, "missing tensors.bin");

  json manifest;
  try {
    manifest = json::parse(detail::read_file(dir / kManifest));
  } catch (const json::exception& e) {
    corrupt(dir, std::string("unreadable manifest: ") + e.what());
  }
  const std::string payload = detail::read_file(dir / kPayload);

  LoadedCheckpoint out;
  std::vector<TensorEntry> entries;
  std::vector<ModalityShape> shapes;
  try {
    if (manifest.at("format_version").get<int>() != kCheckpointFormatVersion) {
      corrupt(dir, "unsupported format_version " + manifest.at("format_version").dump());
    }
    const auto declared = manifest.at("payload_bytes").get<std::size_t>();
    if (declared != payload.size()) {
      corrupt(dir, "payload size mismatch: manifest declares " + std::to_string(declared) + " bytes, tensors.bin has " +
                       std::to_string(payload.size()));
    }
    for (const auto& t : manifest.at("tensors")) {
      TensorEntry e;
      e.name = t.at("name").get<std::string>();
      if (t.at("dtype").get<std::string>() != "float64") corrupt(dir, "tensor " + e.name + " has unsupported dtype");
      const auto& shape = t.at("shape");
      if (shape.size() != 2) corrupt(dir, "tensor " + e.name + " must be two-dimensional");
      e.rows = shape[0].get<Eigen::Index>();
      e.cols = shape[1].get<Eigen::Index>();
      e.offset = t.at("offset").get<std::size_t>();
      e.nbytes = t.at("nbytes").get<std::size_t>();
      if (e.rows < 0 || e.cols < 0 ||
          e.nbytes != static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.cols) * sizeof(double)) {
        corrupt(dir, "tensor " + e.name + " byte count does not match its shape");
      }
      if (e.offset > payload.size() || e.nbytes > payload.size() - e.offset) {
        corrupt(dir, "tensor " + e.name + " extends past the end of tensors.bin");
      }
      entries.push_back(std::move(e));
    }
    for (const auto& s : manifest.at("modalities")) {
      shapes.push_back({s.at("id").get<std::string>(), s.at("channels").get<int>(), s.at("intervals").get<int>(),
                        s.at("bins").get<int>(), s.at("interval_len").get<int>()});
    }
    out.config = config_from_json(manifest.at("config"));
    out.state.epoch = manifest.at("epoch").get<int>();
    out.state.step = manifest.at("step").get<long>();
    out.state.optimizer.step = manifest.at("optimizer_step").get<long>();
    std::istringstream rng(manifest.at("rng_state").get<std::string>());
    rng >> out.state.rng;
    if (!rng) corrupt(dir, "unreadable rng_state");
  } catch (const json::exception& e) {
    corrupt(dir, std::string("malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    corrupt(dir, std::string("invalid config snapshot: ") + e.what());
  }

  std::vector<const TensorEntry*> by_offset;
  for (const auto& e : entries) by_offset.push_back(&e);
  std::sort(by_offset.begin(), by_offset.end(), [](auto* a, auto* b) { return a->offset < b->offset; });
  for (std::size_t i = 1; i < by_offset.size(); ++i) {
    if (by_offset[i - 1]->offset + by_offset[i - 1]->nbytes > by_offset[i]->offset) {
      corrupt(dir, "tensors " + by_offset[i - 1]->name + " and " + by_offset[i]->name + " overlap");
    }
  }
  std::map<std::string, const TensorEntry*> index;
  for (const auto& e : entries) {
    if (!index.emplace(e.name, &e).second) corrupt(dir, "tensor " + e.name + " appears more than once");
  }

  Rng scratch(0);
  try {
    out.state.model = FocalModel(shapes, out.config.encoder, scratch);
  } catch (const std::exception& e) {
    corrupt(dir, std::string("cannot rebuild model: ") + e.what());
  }
  auto params = out.state.model.parameters();
  out.state.optimizer.m.resize(params.size());
  out.state.optimizer.v.resize(params.size());
  auto fill = [&](const std::string& name, const Eigen::MatrixXd& like, Eigen::MatrixXd& dst) {
    const auto it = index.find(name);
    if (it == index.end()) corrupt(dir, "missing tensor " + name);
    const TensorEntry& e = *it->second;
    if (e.rows != like.rows() || e.cols != like.cols()) {
      corrupt(dir, "tensor " + name + " has shape " + std::to_string(e.rows) + "x" + std::to_string(e.cols) +
                       ", model expects " + std::to_string(like.rows()) + "x" + std::to_string(like.cols()));
    }
    dst.resize(e.rows, e.cols);
    read_le(payload, e.offset, dst);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    fill(p.name, p.value, p.value);
    fill("adam.m/" + p.name, p.value, out.state.optimizer.m[i]);
    fill("adam.v/" + p.name, p.value, out.state.optimizer.v[i]);
    p.grad.setZero(p.value.rows(), p.value.cols());
  }
  if (index.size() != 3 * params.size()) corrupt(dir, "manifest lists tensors the model does not have");
  return out;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc) {
  if (!out_) throw PersistenceError("cannot open metrics file " + path.string());
}

void MetricsWriter::write(const json& record) {
  if (!out_.is_open()) return;
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw PersistenceError("failed to write metrics record");
}

}  // namespace focal
