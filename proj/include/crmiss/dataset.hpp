#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "crmiss/model.hpp"

namespace crmiss {

// Immutable collection of subject records with risk-set indexing.
class Dataset {
 public:
  // Validates every record; throws DataError on the first violation.
  // `causes` = 0 infers K from the largest observed subtype (at least 1).
  Dataset(std::vector<SubjectRecord> records, int causes = 0);

  std::size_t size() const { return records_.size(); }
  std::size_t covariate_count() const { return p_; }
  int causes() const { return causes_; }
  int strata() const { return strata_; }
  // Largest aux value + 1, at least 1.
  int aux_levels() const { return aux_levels_; }

  const std::vector<SubjectRecord>& records() const { return records_; }
  const SubjectRecord& operator[](std::size_t i) const { return records_[i]; }
  const Eigen::MatrixXd& covariates() const { return x_; }

  // Subject indices of stratum s ordered by decreasing time (stable).
  const std::vector<std::size_t>& descending(int stratum) const {
    return order_[static_cast<std::size_t>(stratum)];
  }

  std::size_t event_count() const;
  std::size_t observed_subtype_count() const;
  std::size_t missing_subtype_count() const;
  std::size_t missing_aux_event_count() const;

  // Same records with missing-subtype events removed entirely.
  Dataset without_missing_subtype_events() const;

 private:
  std::vector<SubjectRecord> records_;
  std::size_t p_ = 0;
  int causes_ = 1;
  int strata_ = 1;
  int aux_levels_ = 1;
  Eigen::MatrixXd x_;
  std::vector<std::vector<std::size_t>> order_;
};

}  // namespace crmiss
