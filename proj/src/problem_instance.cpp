#include "coopd/problem_instance.hpp"

#include <stdexcept>

namespace coopd {

void ProblemInstance::validate() const {
  if (!a) throw std::invalid_argument("ProblemInstance: missing operator");
  if (b.size() != a->rows()) throw std::invalid_argument("ProblemInstance: b has wrong length");
  if (g.dim() != a->cols()) throw std::invalid_argument("ProblemInstance: g has wrong dimension");
  if (g.structure().widths() != a->structure().widths()) {
    throw std::invalid_argument("ProblemInstance: g and A use different block partitions");
  }
  if (truth.x && truth.x->size() != a->cols()) {
    throw std::invalid_argument("ProblemInstance: truth has wrong dimension");
  }
}

ProblemInstance ProblemInstance::reblocked(const BlockStructure& structure) const {
  ProblemInstance out = *this;
  out.a = with_blocks(a, structure);
  out.g = g.reblocked(structure);
  out.validate();
  return out;
}

ProblemInstance ProblemInstance::reblocked(Index block_width) const {
  return reblocked(BlockStructure::uniform(rows(), cols(), block_width));
}

std::optional<double> ProblemInstance::signal_error(const ConstVecRef& x) const {
  if (!truth.x) return std::nullopt;
  const Index len = truth.signal_length < 0 ? cols() - truth.signal_offset : truth.signal_length;
  const auto ref = truth.x->segment(truth.signal_offset, len);
  const double denom = ref.norm();
  const double diff = (x.segment(truth.signal_offset, len) - ref).norm();
  return denom > 0.0 ? diff / denom : diff;
}

double ProblemInstance::param(const std::string& key, double fallback) const {
  for (const auto& [k, v] : params)
    if (k == key) return v;
  return fallback;
}

}  // namespace coopd
