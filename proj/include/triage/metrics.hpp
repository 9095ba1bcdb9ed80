#pragma once

#include <span>

namespace triage {

/// Mann-Whitney AUROC with ties credited one half. Labels are 0/1.
/// Throws ParameterError unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

}  // namespace triage
