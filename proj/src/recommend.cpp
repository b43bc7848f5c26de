#include "lyre/recommend.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "lyre/binary_io.hpp"
#include "lyre/error.hpp"
#include "lyre/lyrics.hpp"

namespace lyre {

std::vector<Candidate> top_k(std::span<const double> probs, std::span<const double> values, std::size_t k) {
  if (probs.size() != values.size())
    throw ContractError("top_k got " + std::to_string(probs.size()) + " probabilities for " +
                        std::to_string(values.size()) + " values");
  if (k < 1 || k > values.size())
    throw ContractError("k must be in 1.." + std::to_string(values.size()) + ", got " + std::to_string(k));
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return values[a] < values[b];
  });
  std::vector<Candidate> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({values[order[i]], probs[order[i]]});
  return out;
}

std::string result_to_json(const GenerationResult& result) {
  using nlohmann::json;
  json steps = json::array();
  for (const auto& step : result.candidates) {
    json s = json::object();
    for (Attribute a : kAttributes) {
      json list = json::array();
      for (const auto& c : step[static_cast<std::size_t>(a)])
        list.push_back({{"value", c.value}, {"probability", c.probability}});
      s[std::string(to_string(a))] = std::move(list);
    }
    steps.push_back(std::move(s));
  }
  const json j{{"score", json::parse(score_to_json(result.score))},
               {"candidates", std::move(steps)},
               {"k", result.k},
               {"model", result.model}};
  return j.dump();
}

Model Model::from_checkpoint(Checkpoint ckpt) {
  Model m;
  m.fingerprint = lyre::fingerprint(ckpt);
  m.checkpoint = std::move(ckpt);
  return m;
}

Model Model::load(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  Model m;
  m.checkpoint = deserialize_checkpoint(bytes);
  m.fingerprint = lyre::fingerprint(bytes);
  return m;
}

GenerationResult generate(const Model& model, std::string_view lyrics, std::uint64_t seed, std::size_t k) {
  if (k == 0) throw ContractError("k must be at least 1");
  const Checkpoint& ckpt = model.checkpoint;
  const LyricsSequence seq = tokenize_lyrics(lyrics);
  const LyricsEmbedding x = ckpt.encode(seq);
  Rng rng(seed);
  const Tensor noise = sample_noise(x.steps(), ckpt.model.noise_dim, rng);
  const AttributeDistributions dist = generator_distributions(x, noise, ckpt.generator);

  GenerationResult r;
  r.k = k;
  r.model = model.fingerprint;
  r.score.syllables = seq.syllables;
  r.score.seed = seed;
  std::vector<AttributeIndices> chosen(x.steps());
  r.candidates.resize(x.steps());
  for (Attribute a : kAttributes) {
    const Tensor& p = dist[a];
    const std::vector<double>& values = ckpt.attributes.values(a);
    const std::size_t width = values.size();
    for (std::size_t t = 0; t < x.steps(); ++t) {
      const std::span<const double> row(&p.values[t * width], width);
      chosen[t][a] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      r.candidates[t][static_cast<std::size_t>(a)] = top_k(row, values, std::min(k, width));
    }
  }
  r.score.notes = decode_attributes(chosen, ckpt.attributes);
  return r;
}

GenerationResult recompose(const GenerationResult& parent, std::span<const Override> overrides,
                           const AttributeVocab& vocab) {
  GenerationResult r = parent;
  r.score.id.clear();
  const std::size_t steps = r.score.notes.size();
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    const Override& o = overrides[i];
    const std::string label = "override " + std::to_string(i) + ": ";
    if (o.step >= steps)
      throw ContractError(label + "step " + std::to_string(o.step) + " out of range for " + std::to_string(steps) +
                          " steps");
    if (!vocab.index_of(o.attribute, o.value)) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%g", o.value);
      throw ContractError(label + buf + " is not a " + std::string(to_string(o.attribute)) + " value");
    }
  }
  for (const Override& o : overrides) {
    set_attribute(r.score.notes[o.step], o.attribute, o.value);
    auto& list = r.score.overrides;
    auto same = std::find_if(list.begin(), list.end(),
                             [&](const Override& e) { return e.step == o.step && e.attribute == o.attribute; });
    if (same != list.end())
      same->value = o.value;
    else
      list.push_back(o);
  }
  std::sort(r.score.overrides.begin(), r.score.overrides.end(), [](const Override& a, const Override& b) {
    return a.step != b.step ? a.step < b.step : a.attribute < b.attribute;
  });
  return r;
}

SessionStore::SessionStore(std::size_t capacity) : capacity_(capacity), suffix_rng_(std::random_device{}()) {
  if (capacity == 0) throw ContractError("session store capacity must be at least 1");
}

std::string SessionStore::put(GenerationResult result) {
  std::lock_guard lock(mutex_);
  char id[40];
  std::snprintf(id, sizeof id, "r%06llu-%08llx", static_cast<unsigned long long>(++counter_),
                static_cast<unsigned long long>(suffix_rng_() & 0xFFFFFFFFull));
  result.score.id = id;
  order_.emplace_front(id, std::make_shared<const GenerationResult>(std::move(result)));
  index_[id] = order_.begin();
  if (order_.size() > capacity_) {
    index_.erase(order_.back().first);
    order_.pop_back();
  }
  return id;
}

std::shared_ptr<const GenerationResult> SessionStore::get(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(id);
  if (it == index_.end()) throw NotFoundError("unknown result id \"" + id + "\"");
  order_.splice(order_.begin(), order_, it->second);
  return it->second->second;
}

bool SessionStore::contains(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return index_.count(id) > 0;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

RecommendService::RecommendService(Model model, std::size_t capacity)
    : model_(std::move(model)), store_(capacity) {}

std::shared_ptr<const GenerationResult> RecommendService::generate(std::string_view lyrics, std::uint64_t seed,
                                                                   std::size_t k) {
  return store_.get(store_.put(lyre::generate(model_, lyrics, seed, k)));
}

std::shared_ptr<const GenerationResult> RecommendService::recompose(const std::string& parent_id,
                                                                    std::span<const Override> overrides) {
  const auto parent = store_.get(parent_id);
  return store_.get(store_.put(lyre::recompose(*parent, overrides, model_.checkpoint.attributes)));
}

std::shared_ptr<const GenerationResult> RecommendService::get(const std::string& id) { return store_.get(id); }

}  // namespace lyre
