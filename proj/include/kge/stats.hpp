#pragma once
// Pearson and Spearman correlation for metric series.
//
// A correlation against a constant series is undefined; callers get an empty
// optional and reports print an explicit marker, never a stand-in number.

#include <optional>
#include <span>
#include <vector>

namespace kge {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Pearson over fractional (average) ranks; ties share the mean rank.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

std::vector<double> fractional_ranks(std::span<const double> x);

struct CorrelationCell {
    std::optional<double> pearson;
    std::optional<double> spearman;
};

} // namespace kge
