#include "emobridge/corpus/splits.hpp"

#include <algorithm>
#include <cmath>

#include "emobridge/error.hpp"
#include "emobridge/rng.hpp"

namespace emobridge::corpus {

namespace {

void validate(const SplitSpec& spec) {
  if (spec.train < 0.0 || spec.dev < 0.0 || spec.test < 0.0) {
    throw InvalidInput("split ratios must be nonnegative");
  }
  if (std::abs(spec.train + spec.dev + spec.test - 1.0) > 1e-12) {
    throw InvalidInput("split ratios must sum to 1");
  }
}

// Guards floor() against products like 0.7 * 10 = 6.9999999999999991.
std::size_t floor_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

}  // namespace

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  validate(spec);
  SplitSizes sizes;
  sizes.dev = floor_count(spec.dev, n);
  sizes.test = floor_count(spec.test, n);
  sizes.train = n - sizes.dev - sizes.test;
  return sizes;
}

CorpusManifest make_splits(const CorpusManifest& manifest, const SplitSpec& spec) {
  validate(spec);
  const std::size_t n = manifest.records.size();
  if (spec.train > 0.0 && spec.dev > 0.0 && spec.test > 0.0 && n < 3) {
    throw InvalidInput("make_splits: need at least 3 records for a three-way split");
  }
  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& record : manifest.records) ids.push_back(record.id);
  std::sort(ids.begin(), ids.end());
  Rng rng(spec.seed);
  rng.shuffle(ids);

  const SplitSizes sizes = split_sizes(n, spec);
  CorpusManifest out = manifest;
  out.split_of.clear();
  for (std::size_t i = 0; i < n; ++i) {
    Split split = Split::train;
    if (i >= sizes.train + sizes.dev) split = Split::test;
    else if (i >= sizes.train) split = Split::dev;
    out.split_of.emplace(ids[i], split);
  }
  if (spec.dev > 0.0 && sizes.dev == 0) {
    out.provenance.warnings.push_back("degenerate split: dev is empty (" + std::to_string(n) + " records)");
  }
  if (spec.test > 0.0 && sizes.test == 0) {
    out.provenance.warnings.push_back("degenerate split: test is empty (" + std::to_string(n) + " records)");
  }
  return out;
}

}  // namespace emobridge::corpus
