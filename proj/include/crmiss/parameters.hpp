#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace crmiss {

class BaselineRatioSpec;
class NuModel;
class MissingnessModel;

enum class BlockKind { beta, eta, psi, gamma };

struct ParameterBlock {
  BlockKind kind = BlockKind::beta;
  int cause = 0;  // 1-based for beta blocks, 0 otherwise
  std::size_t offset = 0;
  std::size_t size = 0;

  std::string name() const;
};

// Named, contiguous, non-overlapping blocks covering a flat parameter vector.
// Blocks may be registered in any order; consumers look them up by kind.
class ParameterLayout {
 public:
  ParameterLayout& add(BlockKind kind, std::size_t size, int cause = 0);

  // beta[1..K] (length p each), then eta, psi, gamma when the models are given.
  static ParameterLayout standard(std::size_t covariates, int causes,
                                  const BaselineRatioSpec* alpha = nullptr,
                                  const NuModel* nu = nullptr,
                                  const MissingnessModel* miss = nullptr);

  std::size_t size() const { return size_; }
  const std::vector<ParameterBlock>& blocks() const { return blocks_; }
  bool has(BlockKind kind, int cause = 0) const;
  // Throws ConfigError when absent.
  const ParameterBlock& at(BlockKind kind, int cause = 0) const;
  // One label per coordinate, e.g. "beta2[1]" or "gamma[0]".
  std::vector<std::string> labels() const;

  friend bool operator==(const ParameterLayout&, const ParameterLayout&);

 private:
  std::vector<ParameterBlock> blocks_;
  std::size_t size_ = 0;
};

class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(ParameterLayout layout);
  ParameterVector(ParameterLayout layout, Eigen::VectorXd values);

  static ParameterVector pack(ParameterLayout layout, const std::vector<Eigen::VectorXd>& blocks);
  // Block values in layout order.
  std::vector<Eigen::VectorXd> unpack() const;

  const ParameterLayout& layout() const { return layout_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  Eigen::VectorXd block(BlockKind kind, int cause = 0) const;
  void set_block(BlockKind kind, const Eigen::VectorXd& v, int cause = 0);

 private:
  ParameterLayout layout_;
  Eigen::VectorXd values_;
};

}  // namespace crmiss
