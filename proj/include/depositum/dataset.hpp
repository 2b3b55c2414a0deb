#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "depositum/rng.hpp"

namespace depositum {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Labelled samples. Features are stored densely (N x d, one sample per row);
/// labels are +/-1 for binary data or raw integer class ids.
struct Dataset {
    RowMatrix features;
    std::vector<int> labels;

    Eigen::Index samples() const noexcept { return features.rows(); }
    Eigen::Index dim() const noexcept { return features.cols(); }

    Dataset subset(const std::vector<int>& rows) const;
    /// Sorted distinct label values.
    std::vector<int> classes() const;
    bool is_binary() const;
};

/// Reads "<label> <idx>:<val> ..." lines; indices are 1-based and strictly
/// increasing per line. Blank lines and '#' comments are skipped. The feature
/// dimension is the largest index seen unless `dim` is given.
Dataset parse_libsvm(std::istream& in, std::optional<int> dim = std::nullopt);
Dataset parse_libsvm(std::string_view text, std::optional<int> dim = std::nullopt);
Dataset load_libsvm(const std::string& path, std::optional<int> dim = std::nullopt);

/// Writes nonzero entries only; labels +1 are written with an explicit sign.
std::string serialize_libsvm(const Dataset& data);

/// Two unit-variance Gaussian clusters centred at +/- separation * u for a
/// random unit vector u; labels are +/-1 with equal probability.
Dataset synth_logistic(int dim, int samples, double separation, Rng& rng);

/// k unit-variance Gaussian clusters with centres at distance `separation`
/// from the origin along random unit directions; labels 0..k-1.
Dataset synth_classes(int dim, int samples, int classes, double separation, Rng& rng);

}  // namespace depositum
