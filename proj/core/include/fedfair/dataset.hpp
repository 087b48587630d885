#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedfair/rng.hpp"

namespace fedfair {

// Immutable tabular sample: features (row-major), binary label, binary
// protected-group flag per row.
class TabularDataset {
public:
  TabularDataset() = default;
  TabularDataset(int dim, std::vector<double> features_row_major,
                 std::vector<std::uint8_t> labels,
                 std::vector<std::uint8_t> groups);

  int size() const { return n_; }
  int dim() const { return d_; }
  bool empty() const { return n_ == 0; }

  std::span<const double> row(int i) const {
    return {features_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(d_),
            static_cast<std::size_t>(d_)};
  }
  int label(int i) const { return labels_[static_cast<std::size_t>(i)]; }
  int group(int i) const { return groups_[static_cast<std::size_t>(i)]; }

  std::span<const double> features() const { return features_; }
  std::span<const std::uint8_t> labels() const { return labels_; }
  std::span<const std::uint8_t> groups() const { return groups_; }

  // Rows in {0, 1} group membership order of `indices`.
  TabularDataset subset(std::span<const int> indices) const;

  std::array<long, 2> group_counts() const;

  static TabularDataset concat(std::span<const TabularDataset> parts);

  // Feature-wise affine transform x <- (x - shift) * scale, applied in place
  // on a copy.  Used for z-scoring with statistics fit elsewhere.
  TabularDataset transformed(std::span<const double> shift,
                             std::span<const double> scale) const;

private:
  int n_ = 0;
  int d_ = 0;
  std::vector<double> features_;
  std::vector<std::uint8_t> labels_;
  std::vector<std::uint8_t> groups_;
};

// One client's data plus its population weight (normalised across a
// federation before use).
struct ClientShard {
  int client_id = 0;
  double weight = 0.0;
  TabularDataset data;
};

struct SplitResult {
  TabularDataset train;
  TabularDataset test;
};

// Deterministic shuffle split; test gets round(n * test_fraction) rows.
SplitResult train_test_split(const TabularDataset& data, double test_fraction,
                             RngStream& rng);

struct PartitionResult {
  std::vector<ClientShard> shards;   // one per kept group value, weights sum to 1
  std::vector<std::string> values;   // group value per shard, sorted
  long dropped_rows = 0;             // rows in groups under min_shard_size
  long dropped_groups = 0;
};

// Shards a dataset by the distinct values of an aligned key column.  Groups
// smaller than min_shard_size are dropped; shard weights are proportional to
// row counts.
PartitionResult partition_by_column(const TabularDataset& data,
                                    std::span<const std::string> keys,
                                    int min_shard_size);

// Per-feature z-scoring statistics; scale holds 1/std (1 for constant
// features).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> inv_std;
};

Standardizer fit_standardizer(std::span<const TabularDataset* const> parts);

}  // namespace fedfair
