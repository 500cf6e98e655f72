#ifndef EXPLMIA_DATASET_HPP
#define EXPLMIA_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

namespace explmia {

// Labeled feature vectors, row-major.
struct Dataset {
  int dim = 0;
  std::vector<double> features;  // n * dim
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }

  const double* row(std::size_t i) const { return &features[i * dim]; }

  std::vector<double> example(std::size_t i) const {
    return std::vector<double>(row(i), row(i) + dim);
  }

  int num_classes() const {
    int k = 0;
    for (int y : labels) k = y >= k ? y + 1 : k;
    return k;
  }
};

}  // namespace explmia

#endif  // EXPLMIA_DATASET_HPP
