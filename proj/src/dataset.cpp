#include "crmiss/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "crmiss/errors.hpp"

namespace crmiss {

Dataset::Dataset(std::vector<SubjectRecord> records, int causes) : records_(std::move(records)) {
  if (records_.empty()) throw DataError("dataset has no records");
  p_ = records_.front().covariates.size();
  int max_subtype = 1;
  int max_stratum = 0;
  int max_aux = 0;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    try {
      validate_record(records_[i], p_);
    } catch (const DataError& e) {
      throw DataError("record " + std::to_string(i) + ": " + e.what());
    }
    if (records_[i].subtype) max_subtype = std::max(max_subtype, *records_[i].subtype);
    if (records_[i].aux) max_aux = std::max(max_aux, *records_[i].aux);
    max_stratum = std::max(max_stratum, records_[i].stratum);
  }
  if (causes > 0 && max_subtype > causes)
    throw DataError("observed subtype exceeds the declared number of causes");
  causes_ = causes > 0 ? causes : max_subtype;
  strata_ = max_stratum + 1;
  aux_levels_ = max_aux + 1;

  x_.resize(static_cast<Eigen::Index>(records_.size()), static_cast<Eigen::Index>(p_));
  for (std::size_t i = 0; i < records_.size(); ++i)
    for (std::size_t j = 0; j < p_; ++j)
      x_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = records_[i].covariates[j];

  order_.assign(static_cast<std::size_t>(strata_), {});
  for (std::size_t i = 0; i < records_.size(); ++i)
    order_[static_cast<std::size_t>(records_[i].stratum)].push_back(i);
  for (auto& idx : order_)
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return records_[a].time > records_[b].time;
    });
}

std::size_t Dataset::event_count() const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [](const auto& r) { return r.event; }));
}

std::size_t Dataset::observed_subtype_count() const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [](const auto& r) { return r.subtype_observed; }));
}

std::size_t Dataset::missing_subtype_count() const {
  return event_count() - observed_subtype_count();
}

std::size_t Dataset::missing_aux_event_count() const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [](const auto& r) { return r.event && !r.aux; }));
}

Dataset Dataset::without_missing_subtype_events() const {
  std::vector<SubjectRecord> kept;
  kept.reserve(records_.size());
  for (const auto& r : records_)
    if (!r.event || r.subtype_observed) kept.push_back(r);
  return Dataset(std::move(kept), causes_);
}

}  // namespace crmiss
