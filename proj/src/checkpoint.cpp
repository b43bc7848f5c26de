#include <cstdio>

#include "lyre/error.hpp"
#include "lyre/trainer.hpp"

namespace lyre {

namespace {

constexpr std::string_view kMagic = "LYRECKPT";

void write_model(ByteWriter& w, const ModelConfig& m) {
  for (std::size_t v : {m.embed_dim, m.hidden, m.noise_dim, m.layers, m.disc_hidden, m.q_hidden}) w.u64(v);
}

ModelConfig read_model(ByteReader& r) {
  ModelConfig m;
  for (std::size_t* v : {&m.embed_dim, &m.hidden, &m.noise_dim, &m.layers, &m.disc_hidden, &m.q_hidden})
    *v = r.u64();
  m.validate();
  return m;
}

void write_train(ByteWriter& w, const TrainConfig& c) {
  w.u64(c.seed);
  for (std::size_t v : {c.batch_size, c.steps, c.pretrain_steps, c.d_steps_per_g_step, c.checkpoint_interval})
    w.u64(v);
  for (double v : {c.lr_g, c.lr_d, c.lr_q, c.lambda_mi, c.tau_start, c.tau_end, c.clip_norm, c.lr_pretrain}) w.f64(v);
}

TrainConfig read_train(ByteReader& r) {
  TrainConfig c;
  c.seed = r.u64();
  for (std::size_t* v : {&c.batch_size, &c.steps, &c.pretrain_steps, &c.d_steps_per_g_step, &c.checkpoint_interval})
    *v = r.u64();
  for (double* v : {&c.lr_g, &c.lr_d, &c.lr_q, &c.lambda_mi, &c.tau_start, &c.tau_end, &c.clip_norm, &c.lr_pretrain})
    *v = r.f64();
  return c;
}

void write_doubles(ByteWriter& w, const std::vector<double>& v) {
  w.u64(v.size());
  for (double x : v) w.f64(x);
}

std::vector<double> read_doubles(ByteReader& r) {
  const std::uint64_t n = r.u64();
  if (n * 8 > r.remaining()) throw FormatError("truncated value list", FormatError::Fault::truncated);
  std::vector<double> v(n);
  for (double& x : v) x = r.f64();
  return v;
}

void write_params(ByteWriter& w, const std::vector<const Parameter*>& params) {
  w.u64(params.size());
  for (const Parameter* p : params) {
    w.str(p->name);
    w.tensor(p->value);
  }
}

/// Fills an already-shaped parameter set, checking names and shapes.
void read_params(ByteReader& r, const std::vector<Parameter*>& params) {
  if (r.u64() != params.size()) throw FormatError("parameter count does not match the model config");
  for (Parameter* p : params) {
    const std::string name = r.str();
    Tensor value = r.tensor();
    if (name != p->name) throw FormatError("expected parameter " + p->name + ", found " + name);
    if (value.shape != p->value.shape)
      throw FormatError("parameter " + name + " has shape " + shape_string(value.shape) + ", expected " +
                        shape_string(p->value.shape));
    p->value = std::move(value);
  }
}

void write_adam(ByteWriter& w, const AdamState& s) {
  w.u64(s.step_count);
  w.u64(s.first_moment.size());
  for (std::size_t i = 0; i < s.first_moment.size(); ++i) {
    w.tensor(s.first_moment[i]);
    w.tensor(s.second_moment[i]);
  }
}

AdamState read_adam(ByteReader& r) {
  AdamState s;
  s.step_count = r.u64();
  const std::uint64_t n = r.u64();
  if (n > r.remaining()) throw FormatError("truncated optimizer state", FormatError::Fault::truncated);
  for (std::uint64_t i = 0; i < n; ++i) {
    s.first_moment.push_back(r.tensor());
    s.second_moment.push_back(r.tensor());
  }
  return s;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& c) {
  ByteWriter w;
  write_model(w, c.model);
  write_train(w, c.train);
  write_doubles(w, c.attributes.pitches);
  write_doubles(w, c.attributes.durations);
  write_doubles(w, c.attributes.rests);
  write_embedding(w, c.syllables);
  write_embedding(w, c.words);
  write_params(w, c.generator.all());
  write_params(w, c.discriminator.all());
  write_params(w, c.posterior.all());
  write_adam(w, c.adam_g);
  write_adam(w, c.adam_d);
  write_adam(w, c.adam_q);
  w.u64(c.step);
  return seal_container(kMagic, Checkpoint::kFormatVersion, w.bytes());
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  const OpenedContainer box = open_container(bytes, kMagic, Checkpoint::kFormatVersion);
  ByteReader r(box.payload);
  Checkpoint c;
  c.model = read_model(r);
  c.train = read_train(r);
  c.attributes.pitches = read_doubles(r);
  c.attributes.durations = read_doubles(r);
  c.attributes.rests = read_doubles(r);
  try {
    c.attributes.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("attribute vocabulary: ") + e.what());
  }
  c.syllables = read_embedding(r);
  c.words = read_embedding(r);
  // Shapes come from the configs; values are overwritten below.
  Rng shape_only(0);
  c.generator = init_generator(c.model, c.attributes, shape_only);
  c.discriminator = init_discriminator(c.model, c.attributes, shape_only);
  c.posterior = init_posterior(c.model, shape_only);
  read_params(r, c.generator.all());
  read_params(r, c.discriminator.all());
  read_params(r, c.posterior.all());
  c.adam_g = read_adam(r);
  c.adam_d = read_adam(r);
  c.adam_q = read_adam(r);
  c.step = r.u64();
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint payload");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(read_file(path)); }

std::string fingerprint(std::span<const std::uint8_t> checkpoint_bytes) {
  return sha256_hex(checkpoint_bytes).substr(0, 16);
}

std::string fingerprint(const Checkpoint& ckpt) { return fingerprint(serialize_checkpoint(ckpt)); }

std::string metrics_csv_header() { return "step,loss_d,loss_g,loss_mi,tau"; }

std::string metrics_csv_row(const MetricsRow& row) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f", row.step, row.loss_d, row.loss_g, row.loss_mi,
                row.tau);
  return buf;
}

}  // namespace lyre
