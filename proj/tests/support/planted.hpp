#pragma once

// Synthetic gold sets with planted similarity structure. Every text gets a
// hand-built vector so that cos(true pair) is one of {0.9, 0.95, 1.0} and
// cos(spurious pair) is one of {0.0, 0.1, 0.2, 0.3}; all other pairs are
// orthogonal.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "factalign/calibration.hpp"
#include "fixtures.hpp"

namespace planted {

inline constexpr std::size_t kDimension = 32;

struct Corpus {
  std::unique_ptr<factalign::TableProvider> provider;
  std::vector<factalign::GoldCase> golds;
};

inline std::vector<double> basis(std::size_t i) {
  std::vector<double> v(kDimension, 0.0);
  v[i] = 1.0;
  return v;
}

inline std::vector<double> blend(std::size_t i, double cosine, std::size_t fresh) {
  std::vector<double> v(kDimension, 0.0);
  v[i] = cosine;
  if (cosine < 1.0) v[fresh] = std::sqrt(1.0 - cosine * cosine);
  return v;
}

/// Case 0 always contains a spurious pair at exactly 0.3 so the planted
/// separation boundary is attained.
inline Corpus build(fixtures::Rng& rng, std::size_t cases) {
  static const double true_sims[] = {0.9, 0.95, 1.0};
  static const double spurious_sims[] = {0.0, 0.1, 0.2, 0.3};
  Corpus corpus;
  corpus.provider = std::make_unique<factalign::TableProvider>("planted", kDimension);
  for (std::size_t c = 0; c < cases; ++c) {
    const std::size_t n_true = fixtures::uniform(rng, 1, 4);
    const std::size_t extra_a = c == 0 ? 1 : fixtures::uniform(rng, 0, 2);
    const std::size_t extra_b = c == 0 ? 1 : fixtures::uniform(rng, 0, 2);
    const std::size_t n_a = n_true + extra_a;
    const std::size_t n_b = n_true + extra_b;

    // B positions of the true partners, shuffled.
    std::vector<std::size_t> b_slots(n_b);
    for (std::size_t j = 0; j < n_b; ++j) b_slots[j] = j;
    std::shuffle(b_slots.begin(), b_slots.end(), rng);

    const std::string prefix = "case" + std::to_string(c) + "-";
    factalign::GoldMatching gold;
    gold.id = prefix + "gold";
    gold.annotation_a_id = prefix + "a";
    gold.annotation_b_id = prefix + "b";

    std::vector<std::string> a_texts(n_a);
    std::vector<std::string> b_texts(n_b);
    for (std::size_t i = 0; i < n_a; ++i) {
      a_texts[i] = prefix + "a" + std::to_string(i);
      corpus.provider->set(a_texts[i], basis(i));
    }
    std::size_t fresh = n_a;
    for (std::size_t i = 0; i < n_true; ++i) {
      const std::size_t j = b_slots[i];
      b_texts[j] = prefix + "b" + std::to_string(j);
      corpus.provider->set(b_texts[j], blend(i, true_sims[fixtures::uniform(rng, 0, 2)], fresh++));
      gold.pairs.emplace_back(i, j);
    }
    for (std::size_t k = n_true; k < n_b; ++k) {
      const std::size_t j = b_slots[k];
      b_texts[j] = prefix + "b" + std::to_string(j);
      if (extra_a == 0) {
        corpus.provider->set(b_texts[j], basis(fresh++));
        continue;
      }
      const std::size_t target = n_true + fixtures::uniform(rng, 0, extra_a - 1);
      const double s = (c == 0 && k == n_true) ? 0.3 : spurious_sims[fixtures::uniform(rng, 0, 3)];
      corpus.provider->set(b_texts[j], s == 0.0 ? basis(fresh++) : blend(target, s, fresh++));
    }
    std::sort(gold.pairs.begin(), gold.pairs.end());
    corpus.golds.push_back({gold, fixtures::annotation(gold.annotation_a_id, a_texts),
                            fixtures::annotation(gold.annotation_b_id, b_texts)});
  }
  return corpus;
}

}  // namespace planted
