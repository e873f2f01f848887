#pragma once

#include "hawkesvol/model_core.hpp"

#include <string>
#include <vector>

namespace fixtures {

using namespace hawkesvol;

// Two price components of one agent with self term s and cross term c on a
// single exponential of rate beta.
inline HawkesModel toy_model(double mu, double s, double c, double beta = 1.0, double span = 30600.0) {
    HawkesModel model{{{"A", EventType::PriceUp}, {"A", EventType::PriceDown}},
                      KernelMatrix(2, BasisDictionary({beta})),
                      PiecewiseBaseline::uniform(span, 1, 2),
                      {1.0, -1.0}};
    model.kernels.at(0, 0, 0) = s;
    model.kernels.at(1, 1, 0) = s;
    model.kernels.at(0, 1, 0) = c;
    model.kernels.at(1, 0, 0) = c;
    model.baseline.value(0, 0) = mu;
    model.baseline.value(1, 0) = mu;
    return model;
}

// Independent Poisson components for every (agent, type) pair listed.
inline HawkesModel poisson_model(const std::vector<std::string>& agents, const std::vector<EventType>& types,
                                 double rate, double span = 30600.0, std::vector<double> decays = {1.0}) {
    std::vector<ComponentLabel> labels;
    std::vector<double> jumps;
    for (const auto& a : agents) {
        for (EventType t : types) {
            labels.push_back({a, t});
            jumps.push_back(t == EventType::PriceUp ? 1.0 : t == EventType::PriceDown ? -1.0 : 0.0);
        }
    }
    const std::size_t n = labels.size();
    HawkesModel model{labels, KernelMatrix(n, BasisDictionary(std::move(decays))),
                      PiecewiseBaseline::uniform(span, 1, n), jumps};
    for (std::size_t c = 0; c < n; ++c) {
        model.baseline.value(c, 0) = rate;
    }
    return model;
}

} // namespace fixtures
