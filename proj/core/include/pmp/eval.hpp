#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmp/raster.hpp"

namespace pmp {

// Ground truth x prediction counts over labels 1..C+1. Column 0 collects pixels the
// prediction left as ignore; they count as misses for the ground-truth class.
// Pixels whose ground truth is ignore are never counted.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const noexcept { return num_classes_; }
  int num_labels() const noexcept { return num_classes_ + 1; }

  // truth in 1..C+1, predicted in 0..C+1.
  std::uint64_t count(int truth, int predicted) const;
  std::uint64_t total() const noexcept;

  void add(int truth, int predicted, std::uint64_t n = 1);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t index(int truth, int predicted) const;

  int num_classes_;
  std::vector<std::uint64_t> counts_;
};

void accumulate(ConfusionMatrix& matrix, const LabelMask& prediction,
                const LabelMask& ground_truth);

struct IouReport {
  std::vector<double> iou;      // per label 1..C+1 (index label-1)
  std::vector<bool> evaluated;  // label had ground-truth pixels
  double mean = 0.0;            // over evaluated labels
};

// IoU = TP / (TP + FP + FN). Throws EmptyMatrix when no label has ground truth.
IouReport miou(const ConfusionMatrix& matrix);

std::string format_report(const IouReport& report);
std::string format_report_csv(const IouReport& report);

}  // namespace pmp
