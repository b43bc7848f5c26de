#include "lyre/heatmap.hpp"

#include <map>

#include "lyre/error.hpp"

namespace lyre {

HeatmapSource parse_heatmap_source(std::string_view name) {
  if (name == "embedding") return HeatmapSource::embedding;
  if (name == "interpretable") return HeatmapSource::interpretable;
  throw ContractError("heatmap source must be embedding or interpretable, got \"" + std::string(name) + "\"");
}

Tensor mean_interpretable(const Checkpoint& ckpt, const LyricsSequence& seq, const ProbeOptions& opt) {
  if (opt.noise_draws == 0) throw ContractError("noise_draws must be at least 1");
  const LyricsEmbedding x = ckpt.encode(seq);
  Rng rng(opt.seed);
  Tensor total({x.steps(), ckpt.model.condition_width()}, 0.0);
  for (std::size_t d = 0; d < opt.noise_draws; ++d) {
    const Tensor z = sample_noise(x.steps(), ckpt.model.noise_dim, rng);
    const GeneratorOutput out = generator_forward(x, z, ckpt.generator, ckpt.train.tau_end, rng);
    for (std::size_t i = 0; i < total.size(); ++i) total.values[i] += out.interpretable.values[i];
  }
  for (double& v : total.values) v /= static_cast<double>(opt.noise_draws);
  return total;
}

namespace {

std::vector<double> row(const Tensor& t, std::size_t r) {
  const std::size_t w = t.shape[1];
  return {t.values.begin() + static_cast<std::ptrdiff_t>(r * w),
          t.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * w)};
}

void throw_missing(const std::vector<std::string>& missing, const char* where) {
  std::string list;
  for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
  throw LookupError(std::string("syllables not in ") + where + ": " + list);
}

}  // namespace

SimilarityMatrix syllable_heatmap(const Checkpoint& ckpt, const std::vector<std::string>& syllables,
                                  HeatmapSource source, const std::vector<LyricsSequence>& probe,
                                  const ProbeOptions& opt) {
  std::vector<std::string> missing;
  for (const auto& s : syllables)
    if (!ckpt.syllables.vocab.find(s)) missing.push_back(s);
  if (!missing.empty()) throw_missing(missing, "the vocabulary");

  std::vector<std::vector<double>> vectors;
  if (source == HeatmapSource::embedding) {
    for (const auto& s : syllables) {
      const auto v = ckpt.syllables.lookup(s);
      vectors.emplace_back(v.begin(), v.end());
    }
    return cosine_matrix(syllables, vectors);
  }

  std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
  for (const auto& s : syllables) sums[s] = {std::vector<double>(ckpt.model.condition_width(), 0.0), 0};
  for (const auto& seq : probe) {
    bool relevant = false;
    for (const auto& s : seq.syllables) relevant = relevant || sums.count(s) > 0;
    if (!relevant) continue;
    const Tensor m = mean_interpretable(ckpt, seq, opt);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      auto it = sums.find(seq.syllables[t]);
      if (it == sums.end()) continue;
      const auto r = row(m, t);
      for (std::size_t i = 0; i < r.size(); ++i) it->second.first[i] += r[i];
      ++it->second.second;
    }
  }
  for (const auto& s : syllables)
    if (sums[s].second == 0) missing.push_back(s);
  if (!missing.empty()) throw_missing(missing, "the probe sentences");
  for (const auto& s : syllables) {
    auto [v, n] = sums[s];
    for (double& x : v) x /= static_cast<double>(n);
    vectors.push_back(std::move(v));
  }
  return cosine_matrix(syllables, vectors);
}

double repeated_syllable_similarity(const Checkpoint& ckpt, const std::vector<LyricsSequence>& probe,
                                    const ProbeOptions& opt) {
  // syllable -> (sentence, step) of its first occurrence in each sentence
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> where;
  for (std::size_t s = 0; s < probe.size(); ++s) {
    std::map<std::string, std::size_t> first;
    for (std::size_t t = 0; t < probe[s].size(); ++t) first.emplace(probe[s].syllables[t], t);
    for (const auto& [syl, t] : first) where[syl].emplace_back(s, t);
  }
  std::vector<Tensor> m;
  std::vector<double> centre(ckpt.model.condition_width(), 0.0);
  double rows = 0.0;
  for (const auto& seq : probe) {
    m.push_back(mean_interpretable(ckpt, seq, opt));
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const auto r = row(m.back(), t);
      for (std::size_t i = 0; i < r.size(); ++i) centre[i] += r[i];
      rows += 1.0;
    }
  }
  for (double& c : centre) c /= rows;
  auto centred = [&](std::size_t s, std::size_t t) {
    auto r = row(m[s], t);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= centre[i];
    return r;
  };
  double total = 0.0;
  std::size_t pairs = 0;
  for (const auto& [syl, occ] : where)
    for (std::size_t i = 0; i + 1 < occ.size(); ++i) {
      total += cosine_similarity(centred(occ[i].first, occ[i].second), centred(occ[i + 1].first, occ[i + 1].second));
      ++pairs;
    }
  return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

}  // namespace lyre
