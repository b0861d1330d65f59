#include "coopd/block_structure.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace coopd {

BlockStructure::BlockStructure(Index rows, std::vector<Index> widths)
    : rows_(rows), widths_(std::move(widths)) {
  if (rows_ < 0) throw std::invalid_argument("BlockStructure: negative row count");
  if (widths_.empty()) throw std::invalid_argument("BlockStructure: need at least one block");
  offsets_.reserve(widths_.size() + 1);
  offsets_.push_back(0);
  for (Index w : widths_) {
    if (w < 1) throw std::invalid_argument("BlockStructure: block widths must be positive");
    offsets_.push_back(offsets_.back() + w);
  }
}

BlockStructure BlockStructure::uniform(Index rows, Index cols, Index width) {
  if (cols < 1 || width < 1) {
    throw std::invalid_argument("BlockStructure::uniform: need cols >= 1 and width >= 1");
  }
  std::vector<Index> widths(static_cast<std::size_t>(cols / width), width);
  if (cols % width != 0) widths.push_back(cols % width);
  return BlockStructure(rows, std::move(widths));
}

BlockStructure BlockStructure::single(Index rows, Index cols) {
  return BlockStructure(rows, {cols});
}

Index BlockStructure::max_width() const noexcept {
  return *std::max_element(widths_.begin(), widths_.end());
}

Index BlockStructure::block_of(Index col) const {
  if (col < 0 || col >= cols()) throw std::out_of_range("BlockStructure::block_of: column out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), col);
  return static_cast<Index>(it - offsets_.begin()) - 1;
}

BlockStructure BlockStructure::concat(const BlockStructure& tail) const {
  if (tail.rows_ != rows_) throw std::invalid_argument("BlockStructure::concat: row counts differ");
  std::vector<Index> widths = widths_;
  widths.insert(widths.end(), tail.widths_.begin(), tail.widths_.end());
  return BlockStructure(rows_, std::move(widths));
}

void BlockStructure::check_block(Index i) const {
  if (i < 0 || i >= num_blocks()) {
    throw std::out_of_range("block index " + std::to_string(i) + " out of range [0, " +
                            std::to_string(num_blocks()) + ")");
  }
}

}  // namespace coopd
