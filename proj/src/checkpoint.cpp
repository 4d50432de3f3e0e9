#include "gatedgan/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "json.hpp"

namespace gatedgan {
namespace {

using nlohmann::ordered_json;

constexpr char kMagic[8] = {'G', 'G', 'A', 'N', 'C', 'K', 'P', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

std::mt19937_64 rng_from_text(const std::string& text) {
  std::mt19937_64 rng;
  std::istringstream in(text);
  in >> rng;
  if (!in) throw DecodeError("invalid random generator state");
  return rng;
}

ordered_json config_json(const TrainConfig& c) {
  ordered_json j;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["k_d"] = c.k_d;
  j["k_g"] = c.k_g;
  j["iterations"] = c.iterations;
  j["image_size"] = c.image_size;
  j["scale_size"] = c.scale_size;
  j["lambda_cls"] = c.weights.lambda_cls;
  j["lambda_tv"] = c.weights.lambda_tv;
  j["lambda_r"] = c.weights.lambda_r;
  j["seed"] = c.seed;
  j["style_count"] = c.style_count;
  j["width_scale"] = c.width_scale;
  j["branch_depth"] = c.branch_depth;
  j["mode"] = to_string(c.mode);
  j["buffer_capacity"] = c.buffer_capacity;
  j["log_interval"] = c.log_interval;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["record_wall_time"] = c.record_wall_time;
  return j;
}

TrainConfig config_from_json(const ordered_json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.k_d = j.at("k_d").get<std::size_t>();
  c.k_g = j.at("k_g").get<std::size_t>();
  c.iterations = j.at("iterations").get<std::size_t>();
  c.image_size = j.at("image_size").get<std::size_t>();
  c.scale_size = j.at("scale_size").get<std::size_t>();
  c.weights.lambda_cls = j.at("lambda_cls").get<double>();
  c.weights.lambda_tv = j.at("lambda_tv").get<double>();
  c.weights.lambda_r = j.at("lambda_r").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.style_count = j.at("style_count").get<std::size_t>();
  c.width_scale = j.at("width_scale").get<double>();
  c.branch_depth = j.at("branch_depth").get<std::size_t>();
  c.mode = parse_train_mode(j.at("mode").get<std::string>());
  c.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
  c.log_interval = j.at("log_interval").get<std::size_t>();
  c.checkpoint_interval = j.at("checkpoint_interval").get<std::size_t>();
  c.record_wall_time = j.at("record_wall_time").get<bool>();
  return c;
}

class PayloadWriter {
 public:
  void add(const std::string& name, const TensorF& t) {
    ordered_json entry;
    entry["name"] = name;
    entry["shape"] = t.shape();
    entry["dtype"] = "f32";
    entry["offset"] = payload.size();
    manifest.push_back(std::move(entry));
    for (float v : t.data()) put_u32(payload, std::bit_cast<std::uint32_t>(v));
  }

  ordered_json manifest = ordered_json::array();
  std::vector<std::uint8_t> payload;
};

class PayloadReader {
 public:
  PayloadReader(const ordered_json& manifest, const std::uint8_t* payload, std::size_t size,
                std::string source)
      : payload_(payload), size_(size), source_(std::move(source)) {
    for (const auto& entry : manifest) {
      const std::string name = entry.at("name").get<std::string>();
      if (entry.at("dtype").get<std::string>() != "f32") {
        throw FormatError(source_ + ": tensor " + name + " has unsupported dtype");
      }
      if (!entries_.emplace(name, entry).second) {
        throw DecodeError(source_ + ": duplicate tensor name " + name);
      }
    }
  }

  TensorF read(const std::string& name) {
    const auto it = entries_.find(name);
    if (it == entries_.end()) throw DecodeError(source_ + ": missing tensor " + name);
    const Shape shape = it->second.at("shape").get<Shape>();
    const std::size_t offset = it->second.at("offset").get<std::size_t>();
    const std::size_t n = shape_numel(shape);
    if (shape.empty() || offset > size_ || (size_ - offset) / 4 < n) {
      throw DecodeError(source_ + ": tensor " + name + " exceeds the payload");
    }
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) {
      data[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(payload_ + offset + 4 * i, 4)));
    }
    ++used_;
    return TensorF(shape, std::move(data));
  }

  void assign(const std::string& name, TensorF& target) {
    TensorF t = read(name);
    if (t.shape() != target.shape()) {
      throw ShapeError(source_ + ": tensor " + name + " has shape " + shape_string(t.shape()) +
                       ", model expects " + shape_string(target.shape()));
    }
    target = std::move(t);
  }

  std::size_t unused() const { return entries_.size() - used_; }

 private:
  const std::uint8_t* payload_;
  std::size_t size_;
  std::string source_;
  std::map<std::string, ordered_json> entries_;
  std::size_t used_ = 0;
};

void write_optimizer(PayloadWriter& w, ordered_json& meta, const std::string& key,
                     const Adam<float>& adam) {
  ordered_json j;
  j["steps"] = adam.steps();
  ordered_json slots = ordered_json::object();
  for (const auto& [name, slot] : adam.slots()) {
    slots[name] = slot.t;
    w.add(key + "/" + name + "/m", slot.m);
    w.add(key + "/" + name + "/v", slot.v);
  }
  j["slots"] = std::move(slots);
  meta[key] = std::move(j);
}

void read_optimizer(PayloadReader& r, const ordered_json& meta, const std::string& key,
                    Adam<float>& adam) {
  const ordered_json& j = meta.at(key);
  std::map<std::string, AdamSlot<float>> slots;
  for (const auto& [name, t] : j.at("slots").items()) {
    AdamSlot<float> slot;
    slot.t = t.get<std::uint64_t>();
    slot.m = r.read(key + "/" + name + "/m");
    slot.v = r.read(key + "/" + name + "/v");
    slots.emplace(name, std::move(slot));
  }
  adam.restore(j.at("steps").get<std::uint64_t>(), std::move(slots));
}

}  // namespace

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<std::uint8_t> checkpoint_bytes(const TrainState& s) {
  PayloadWriter w;
  s.generator.visit(ConstParamVisitor<float>(
      [&w](const std::string& name, const TensorF& t) { w.add("generator/" + name, t); }));
  s.discriminator.visit(ConstParamVisitor<float>(
      [&w](const std::string& name, const TensorF& t) { w.add("discriminator/" + name, t); }));

  ordered_json meta;
  meta["format_version"] = kCheckpointVersion;
  meta["config"] = config_json(s.config);
  meta["iteration"] = s.iteration;
  meta["style_names"] = s.style_names;
  meta["frozen_styles"] = s.frozen_styles;
  meta["rng"] = rng_text(s.rng);
  write_optimizer(w, meta, "adam.discriminator", s.d_optimizer);
  write_optimizer(w, meta, "adam.generator", s.g_optimizer);
  write_optimizer(w, meta, "adam.autoencoder", s.ae_optimizer);
  ordered_json buffer;
  buffer["capacity"] = s.buffer.capacity();
  buffer["rng"] = rng_text(s.buffer.rng());
  buffer["history_returns"] = s.buffer.history_returns();
  ordered_json labels = ordered_json::array();
  for (std::size_t i = 0; i < s.buffer.size(); ++i) {
    labels.push_back(s.buffer.entries()[i].style);
    w.add("buffer/" + std::to_string(i), s.buffer.entries()[i].image);
  }
  buffer["labels"] = std::move(labels);
  meta["replay_buffer"] = std::move(buffer);

  ordered_json header;
  header["metadata"] = std::move(meta);
  header["manifest"] = std::move(w.manifest);
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  put_u64(out, w.payload.size());
  out.insert(out.end(), w.payload.begin(), w.payload.end());
  put_u64(out, fnv1a(out.data(), out.size()));
  return out;
}

TrainState checkpoint_from_bytes(const std::vector<std::uint8_t>& bytes, const std::string& source,
                                 std::optional<std::size_t> expected_styles) {
  constexpr std::size_t kPrefix = 8 + 4 + 8;
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw FormatError(source + ": not a gatedgan checkpoint");
  }
  if (bytes.size() < kPrefix + 16) throw DecodeError(source + ": truncated checkpoint");
  const auto version = static_cast<std::uint32_t>(get_le(bytes.data() + 8, 4));
  if (version != kCheckpointVersion) {
    throw VersionError(source + ": checkpoint format version " + std::to_string(version) +
                       " (supported: " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t body = bytes.size() - 8;
  if (get_le(bytes.data() + body, 8) != fnv1a(bytes.data(), body)) {
    throw ChecksumError(source + ": checksum mismatch, checkpoint is corrupted");
  }
  const std::uint64_t header_len = get_le(bytes.data() + 12, 8);
  if (header_len > body - kPrefix - 8) throw DecodeError(source + ": header exceeds file");
  const std::size_t payload_at = kPrefix + header_len + 8;
  const std::uint64_t payload_len = get_le(bytes.data() + kPrefix + header_len, 8);
  if (payload_len != body - payload_at) throw DecodeError(source + ": payload length mismatch");

  try {
    const ordered_json header = ordered_json::parse(bytes.begin() + kPrefix,
                                                    bytes.begin() + std::ptrdiff_t(kPrefix + header_len));
    const ordered_json& meta = header.at("metadata");
    PayloadReader r(header.at("manifest"), bytes.data() + payload_at, payload_len, source);

    TrainState s;
    s.config = config_from_json(meta.at("config"));
    if (expected_styles && *expected_styles != s.config.style_count) {
      throw ShapeError(source + ": checkpoint has " + std::to_string(s.config.style_count) +
                       " style branches, expected " + std::to_string(*expected_styles));
    }
    std::mt19937_64 scratch(0);
    s.generator = GeneratorParams<float>::initialize(s.config.model(), scratch);
    s.discriminator = DiscriminatorParams<float>::initialize(s.config.model(), scratch);
    s.generator.visit(ParamVisitor<float>(
        [&r](const std::string& name, TensorF& t) { r.assign("generator/" + name, t); }));
    s.discriminator.visit(ParamVisitor<float>(
        [&r](const std::string& name, TensorF& t) { r.assign("discriminator/" + name, t); }));

    s.iteration = meta.at("iteration").get<std::uint64_t>();
    s.style_names = meta.at("style_names").get<std::vector<std::string>>();
    if (s.style_names.size() != s.config.style_count) {
      throw DecodeError(source + ": style name count does not match the branch count");
    }
    s.frozen_styles = meta.at("frozen_styles").get<std::size_t>();
    s.rng = rng_from_text(meta.at("rng").get<std::string>());
    const AdamSettings adam{s.config.learning_rate};
    s.d_optimizer = Adam<float>(adam);
    s.g_optimizer = Adam<float>(adam);
    s.ae_optimizer = Adam<float>(adam);
    read_optimizer(r, meta, "adam.discriminator", s.d_optimizer);
    read_optimizer(r, meta, "adam.generator", s.g_optimizer);
    read_optimizer(r, meta, "adam.autoencoder", s.ae_optimizer);

    const ordered_json& buffer = meta.at("replay_buffer");
    s.buffer = ReplayBuffer(buffer.at("capacity").get<std::size_t>(), 0);
    std::vector<ReplayBuffer::Entry> entries;
    const auto labels = buffer.at("labels").get<std::vector<std::size_t>>();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      entries.push_back({r.read("buffer/" + std::to_string(i)), labels[i]});
    }
    s.buffer.restore(std::move(entries), rng_from_text(buffer.at("rng").get<std::string>()),
                     buffer.at("history_returns").get<std::uint64_t>());
    if (r.unused() != 0) throw DecodeError(source + ": checkpoint holds unknown tensors");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(source + ": malformed checkpoint header: " + e.what());
  }
}

void save_checkpoint(const TrainState& state, const std::string& path) {
  const std::vector<std::uint8_t> bytes = checkpoint_bytes(state);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("failed writing " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path + ": " + ec.message());
}

TrainState load_checkpoint(const std::string& path, std::optional<std::size_t> expected_styles) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return checkpoint_from_bytes(bytes, path, expected_styles);
}

std::size_t resolve_style(const TrainState& state, const std::string& style) {
  const std::size_t k = state.generator.style_count();
  for (std::size_t c = 0; c < state.style_names.size(); ++c) {
    if (state.style_names[c] == style) return c;
  }
  std::size_t index = 0;
  const auto [ptr, ec] = std::from_chars(style.data(), style.data() + style.size(), index);
  if (ec != std::errc() || ptr != style.data() + style.size() || style.empty()) {
    throw ArgumentError("unknown style '" + style + "'");
  }
  if (index >= k) {
    throw IndexError("style index " + std::to_string(index) + " out of range for " +
                     std::to_string(k) + " styles");
  }
  return index;
}

}  // namespace gatedgan
