#include "crmiss/parameters.hpp"

#include <algorithm>

#include "crmiss/errors.hpp"
#include "crmiss/model.hpp"

namespace crmiss {

std::string ParameterBlock::name() const {
  switch (kind) {
    case BlockKind::beta:
      return "beta" + std::to_string(cause);
    case BlockKind::eta:
      return "eta";
    case BlockKind::psi:
      return "psi";
    case BlockKind::gamma:
      return "gamma";
  }
  return "?";
}

ParameterLayout& ParameterLayout::add(BlockKind kind, std::size_t size, int cause) {
  if (has(kind, cause)) throw ConfigError("duplicate parameter block " + ParameterBlock{kind, cause, 0, 0}.name());
  blocks_.push_back({kind, cause, size_, size});
  size_ += size;
  return *this;
}

ParameterLayout ParameterLayout::standard(std::size_t covariates, int causes,
                                          const BaselineRatioSpec* alpha, const NuModel* nu,
                                          const MissingnessModel* miss) {
  ParameterLayout layout;
  for (int k = 1; k <= causes; ++k) layout.add(BlockKind::beta, covariates, k);
  if (alpha) layout.add(BlockKind::eta, alpha->parameter_count());
  if (nu) layout.add(BlockKind::psi, nu->parameter_count());
  if (miss) layout.add(BlockKind::gamma, miss->parameter_count());
  return layout;
}

bool ParameterLayout::has(BlockKind kind, int cause) const {
  return std::any_of(blocks_.begin(), blocks_.end(),
                     [&](const auto& b) { return b.kind == kind && b.cause == cause; });
}

const ParameterBlock& ParameterLayout::at(BlockKind kind, int cause) const {
  for (const auto& b : blocks_)
    if (b.kind == kind && b.cause == cause) return b;
  throw ConfigError("parameter layout lacks block " + ParameterBlock{kind, cause, 0, 0}.name());
}

std::vector<std::string> ParameterLayout::labels() const {
  std::vector<std::string> out(size_);
  for (const auto& b : blocks_)
    for (std::size_t i = 0; i < b.size; ++i)
      out[b.offset + i] = b.name() + "[" + std::to_string(i) + "]";
  return out;
}

bool operator==(const ParameterLayout& a, const ParameterLayout& b) {
  if (a.size_ != b.size_ || a.blocks_.size() != b.blocks_.size()) return false;
  for (std::size_t i = 0; i < a.blocks_.size(); ++i) {
    const auto& x = a.blocks_[i];
    const auto& y = b.blocks_[i];
    if (x.kind != y.kind || x.cause != y.cause || x.offset != y.offset || x.size != y.size)
      return false;
  }
  return true;
}

ParameterVector::ParameterVector(ParameterLayout layout)
    : layout_(std::move(layout)),
      values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_.size()))) {}

ParameterVector::ParameterVector(ParameterLayout layout, Eigen::VectorXd values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.size()) != layout_.size())
    throw ConfigError("parameter vector length does not match its layout");
}

ParameterVector ParameterVector::pack(ParameterLayout layout,
                                      const std::vector<Eigen::VectorXd>& blocks) {
  if (blocks.size() != layout.blocks().size()) throw ConfigError("block count mismatch");
  ParameterVector out(std::move(layout));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = out.layout_.blocks()[i];
    if (static_cast<std::size_t>(blocks[i].size()) != b.size)
      throw ConfigError("block " + b.name() + " has the wrong length");
    out.values_.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.size)) =
        blocks[i];
  }
  return out;
}

std::vector<Eigen::VectorXd> ParameterVector::unpack() const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(layout_.blocks().size());
  for (const auto& b : layout_.blocks())
    out.emplace_back(
        values_.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.size)));
  return out;
}

Eigen::VectorXd ParameterVector::block(BlockKind kind, int cause) const {
  const auto& b = layout_.at(kind, cause);
  return values_.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.size));
}

void ParameterVector::set_block(BlockKind kind, const Eigen::VectorXd& v, int cause) {
  const auto& b = layout_.at(kind, cause);
  if (static_cast<std::size_t>(v.size()) != b.size) throw ConfigError("block length mismatch");
  values_.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.size)) = v;
}

}  // namespace crmiss
