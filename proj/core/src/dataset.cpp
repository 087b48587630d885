#include "fedfair/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fedfair/errors.hpp"
#include "fedfair/summation.hpp"

namespace fedfair {

TabularDataset::TabularDataset(int dim, std::vector<double> features_row_major,
                               std::vector<std::uint8_t> labels,
                               std::vector<std::uint8_t> groups)
    : d_(dim),
      features_(std::move(features_row_major)),
      labels_(std::move(labels)),
      groups_(std::move(groups)) {
  if (d_ < 1) throw ValidationError("TabularDataset: dim must be >= 1");
  if (features_.size() % static_cast<std::size_t>(d_) != 0)
    throw ValidationError("TabularDataset: feature buffer not a multiple of dim");
  n_ = static_cast<int>(features_.size() / static_cast<std::size_t>(d_));
  if (labels_.size() != static_cast<std::size_t>(n_) ||
      groups_.size() != static_cast<std::size_t>(n_))
    throw ValidationError("TabularDataset: label/group length mismatch");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] > 1) throw ValidationError("TabularDataset: labels must be 0/1");
    if (groups_[i] > 1) throw ValidationError("TabularDataset: protected flags must be 0/1");
  }
  for (double v : features_) {
    if (!std::isfinite(v)) throw ValidationError("TabularDataset: non-finite feature");
  }
}

TabularDataset TabularDataset::subset(std::span<const int> indices) const {
  std::vector<double> f;
  f.reserve(indices.size() * static_cast<std::size_t>(d_));
  std::vector<std::uint8_t> l, g;
  l.reserve(indices.size());
  g.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || i >= n_) throw ValidationError("TabularDataset::subset: index out of range");
    const auto r = row(i);
    f.insert(f.end(), r.begin(), r.end());
    l.push_back(labels_[static_cast<std::size_t>(i)]);
    g.push_back(groups_[static_cast<std::size_t>(i)]);
  }
  TabularDataset out;
  out.n_ = static_cast<int>(indices.size());
  out.d_ = d_;
  out.features_ = std::move(f);
  out.labels_ = std::move(l);
  out.groups_ = std::move(g);
  return out;
}

std::array<long, 2> TabularDataset::group_counts() const {
  std::array<long, 2> c{0, 0};
  for (std::uint8_t g : groups_) ++c[g];
  return c;
}

TabularDataset TabularDataset::concat(std::span<const TabularDataset> parts) {
  if (parts.empty()) throw ValidationError("TabularDataset::concat: no parts");
  const int d = parts.front().dim();
  TabularDataset out;
  out.d_ = d;
  for (const auto& p : parts) {
    if (p.dim() != d) throw ValidationError("TabularDataset::concat: dim mismatch");
    out.features_.insert(out.features_.end(), p.features_.begin(), p.features_.end());
    out.labels_.insert(out.labels_.end(), p.labels_.begin(), p.labels_.end());
    out.groups_.insert(out.groups_.end(), p.groups_.begin(), p.groups_.end());
    out.n_ += p.n_;
  }
  return out;
}

TabularDataset TabularDataset::transformed(std::span<const double> shift,
                                           std::span<const double> scale) const {
  if (shift.size() != static_cast<std::size_t>(d_) ||
      scale.size() != static_cast<std::size_t>(d_))
    throw ValidationError("TabularDataset::transformed: statistics dim mismatch");
  TabularDataset out = *this;
  for (int i = 0; i < n_; ++i) {
    double* r = out.features_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(d_);
    for (int j = 0; j < d_; ++j) r[j] = (r[j] - shift[static_cast<std::size_t>(j)]) * scale[static_cast<std::size_t>(j)];
  }
  return out;
}

SplitResult train_test_split(const TabularDataset& data, double test_fraction,
                             RngStream& rng) {
  if (!(test_fraction >= 0.0) || !(test_fraction < 1.0))
    throw ValidationError("train_test_split: test_fraction must be in [0, 1)");
  const int n = data.size();
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  const int n_test = static_cast<int>(std::lround(n * test_fraction));
  std::vector<int> test_idx(idx.begin(), idx.begin() + n_test);
  std::vector<int> train_idx(idx.begin() + n_test, idx.end());
  // Restore row order inside each side so splits are set-determined.
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {data.subset(train_idx), data.subset(test_idx)};
}

PartitionResult partition_by_column(const TabularDataset& data,
                                    std::span<const std::string> keys,
                                    int min_shard_size) {
  if (keys.size() != static_cast<std::size_t>(data.size()))
    throw ValidationError("partition_by_column: key column length mismatch");
  if (min_shard_size < 1) throw ValidationError("partition_by_column: min_shard_size must be >= 1");

  std::map<std::string, std::vector<int>> groups;  // sorted by key value
  for (int i = 0; i < data.size(); ++i) groups[std::string(keys[static_cast<std::size_t>(i)])].push_back(i);

  PartitionResult out;
  long kept_rows = 0;
  for (const auto& [value, rows] : groups) {
    if (static_cast<int>(rows.size()) < min_shard_size) {
      out.dropped_rows += static_cast<long>(rows.size());
      ++out.dropped_groups;
      continue;
    }
    ClientShard shard;
    shard.client_id = static_cast<int>(out.shards.size());
    shard.data = data.subset(rows);
    out.shards.push_back(std::move(shard));
    out.values.push_back(value);
    kept_rows += static_cast<long>(rows.size());
  }
  if (out.shards.empty())
    throw ValidationError("partition_by_column: every group is below min_shard_size");
  for (auto& shard : out.shards)
    shard.weight = static_cast<double>(shard.data.size()) / static_cast<double>(kept_rows);
  return out;
}

Standardizer fit_standardizer(std::span<const TabularDataset* const> parts) {
  if (parts.empty()) throw ValidationError("fit_standardizer: no datasets");
  const int d = parts.front()->dim();
  long n = 0;
  for (const auto* p : parts) {
    if (p->dim() != d) throw ValidationError("fit_standardizer: dim mismatch");
    n += p->size();
  }
  if (n < 2) throw ValidationError("fit_standardizer: need at least two rows");

  Standardizer s;
  s.mean.resize(static_cast<std::size_t>(d));
  s.inv_std.resize(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    ExactSum sum;
    for (const auto* p : parts)
      for (int i = 0; i < p->size(); ++i) sum.add(p->row(i)[static_cast<std::size_t>(j)]);
    const double mean = sum.value() / static_cast<double>(n);
    ExactSum sq;
    for (const auto* p : parts)
      for (int i = 0; i < p->size(); ++i) {
        const double c = p->row(i)[static_cast<std::size_t>(j)] - mean;
        sq.add(c * c);
      }
    const double var = sq.value() / static_cast<double>(n);
    s.mean[static_cast<std::size_t>(j)] = mean;
    s.inv_std[static_cast<std::size_t>(j)] = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return s;
}

}  // namespace fedfair
