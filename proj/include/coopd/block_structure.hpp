#pragma once

#include <vector>

#include "coopd/types.hpp"

namespace coopd {

/// Column partition of an m x n operator into p contiguous blocks.
///
/// Blocks are 0-based. offsets() has p + 1 entries with offsets()[0] = 0 and
/// offsets()[p] = n.
class BlockStructure {
 public:
  BlockStructure(Index rows, std::vector<Index> widths);

  /// Blocks of width `width`; the last block is truncated to n mod width.
  static BlockStructure uniform(Index rows, Index cols, Index width);
  static BlockStructure single(Index rows, Index cols);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return offsets_.back(); }
  Index num_blocks() const noexcept { return static_cast<Index>(widths_.size()); }

  Index offset(Index i) const { return offsets_.at(static_cast<std::size_t>(i)); }
  Index width(Index i) const { return widths_.at(static_cast<std::size_t>(i)); }
  Index max_width() const noexcept;

  const std::vector<Index>& widths() const noexcept { return widths_; }
  const std::vector<Index>& offsets() const noexcept { return offsets_; }

  /// Block containing column `col`.
  Index block_of(Index col) const;

  /// This partition followed by `tail`'s blocks; rows must agree.
  BlockStructure concat(const BlockStructure& tail) const;

  void check_block(Index i) const;

  bool operator==(const BlockStructure&) const = default;

 private:
  Index rows_;
  std::vector<Index> widths_;
  std::vector<Index> offsets_;
};

}  // namespace coopd
