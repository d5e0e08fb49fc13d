#include "pmp/eval.hpp"

#include <cstdio>
#include <numeric>

namespace pmp {

ConfusionMatrix::ConfusionMatrix(int num_classes) : num_classes_(num_classes) {
  if (num_classes < 1 || num_classes > 254) {
    throw Error(ErrorCode::kOutOfRange, "number of classes must lie in [1, 254]");
  }
  counts_.assign(static_cast<std::size_t>(num_labels()) * (num_labels() + 1), 0);
}

std::size_t ConfusionMatrix::index(int truth, int predicted) const {
  if (truth < 1 || truth > num_labels() || predicted < 0 || predicted > num_labels()) {
    throw Error(ErrorCode::kOutOfRange, "confusion matrix label out of range");
  }
  return static_cast<std::size_t>(truth - 1) * (num_labels() + 1) + predicted;
}

std::uint64_t ConfusionMatrix::count(int truth, int predicted) const {
  return counts_[index(truth, predicted)];
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void ConfusionMatrix::add(int truth, int predicted, std::uint64_t n) {
  counts_[index(truth, predicted)] += n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.num_classes_ != num_classes_) {
    throw Error(ErrorCode::kDimensionMismatch, "confusion matrices differ in class count");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

void accumulate(ConfusionMatrix& matrix, const LabelMask& prediction,
                const LabelMask& ground_truth) {
  if (!prediction.same_shape(ground_truth)) {
    throw Error(ErrorCode::kDimensionMismatch, "prediction and ground truth differ in size");
  }
  check_labels(prediction, matrix.num_classes());
  check_labels(ground_truth, matrix.num_classes());
  std::vector<std::uint64_t> local(static_cast<std::size_t>(matrix.num_labels()) *
                                       (matrix.num_labels() + 1),
                                   0);
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const int truth = ground_truth[i];
    if (truth == kIgnoreLabel) continue;
    ++local[static_cast<std::size_t>(truth - 1) * (matrix.num_labels() + 1) + prediction[i]];
  }
  for (int t = 1; t <= matrix.num_labels(); ++t) {
    for (int p = 0; p <= matrix.num_labels(); ++p) {
      const auto n = local[static_cast<std::size_t>(t - 1) * (matrix.num_labels() + 1) + p];
      if (n) matrix.add(t, p, n);
    }
  }
}

IouReport miou(const ConfusionMatrix& matrix) {
  const int labels = matrix.num_labels();
  IouReport report;
  report.iou.assign(labels, 0.0);
  report.evaluated.assign(labels, false);
  int evaluated = 0;
  double sum = 0.0;
  for (int c = 1; c <= labels; ++c) {
    std::uint64_t row = 0, column = 0;
    for (int p = 0; p <= labels; ++p) row += matrix.count(c, p);
    for (int t = 1; t <= labels; ++t) column += matrix.count(t, c);
    const std::uint64_t tp = matrix.count(c, c);
    const std::uint64_t denom = row + column - tp;  // TP + FN + FP
    report.iou[c - 1] = denom == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(denom);
    if (row > 0) {
      report.evaluated[c - 1] = true;
      sum += report.iou[c - 1];
      ++evaluated;
    }
  }
  if (evaluated == 0) throw Error(ErrorCode::kEmptyMatrix, "no ground-truth pixels counted");
  report.mean = sum / evaluated;
  return report;
}

std::string format_report(const IouReport& report) {
  std::string out = "class      IoU\n";
  char line[64];
  for (std::size_t c = 0; c < report.iou.size(); ++c) {
    if (!report.evaluated[c]) continue;
    std::snprintf(line, sizeof(line), "%5zu  %7.4f\n", c + 1, report.iou[c]);
    out += line;
  }
  std::snprintf(line, sizeof(line), "mIoU   %7.4f\n", report.mean);
  return out + line;
}

std::string format_report_csv(const IouReport& report) {
  std::string out = "class,iou\n";
  char line[64];
  for (std::size_t c = 0; c < report.iou.size(); ++c) {
    if (!report.evaluated[c]) continue;
    std::snprintf(line, sizeof(line), "%zu,%.6f\n", c + 1, report.iou[c]);
    out += line;
  }
  std::snprintf(line, sizeof(line), "mean,%.6f\n", report.mean);
  return out + line;
}

}  // namespace pmp
