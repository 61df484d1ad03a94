#pragma once

#include <cstdint>

#include "emobridge/corpus/manifest.hpp"

namespace emobridge::corpus {

struct SplitSpec {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
  std::uint64_t seed = 42;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
};

/// dev = floor(dev*N), test = floor(test*N), train takes the remainder.
SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

/// Deterministic shuffle of the sorted record ids followed by contiguous assignment
/// (train, dev, test). Depends only on the id set and the ratios, not on record order.
/// Degenerate (empty) dev/test splits with a non-zero ratio are flagged in
/// provenance.warnings.
CorpusManifest make_splits(const CorpusManifest& manifest, const SplitSpec& spec);

}  // namespace emobridge::corpus
