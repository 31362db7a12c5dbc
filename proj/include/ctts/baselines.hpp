#pragma once

#include <array>
#include <vector>

#include "ctts/data.hpp"

namespace ctts {

struct ClassProbPrediction {
    std::array<double, 3> probs = {0.0, 0.0, 0.0};  // ordered (-1, 0, +1)
    int predicted_class = 0;                        // argmax; tie -> lower class
    double confidence = 0.0;                        // max(probs)
};

struct ArimaOrders {
    int p = 2;
    int d = 1;
    int q = 1;
};

struct ArimaModel {
    int p = 0;
    int d = 0;
    int q = 0;
    std::vector<double> phi;
    std::vector<double> theta;
    double intercept = 0.0;
    // Final conditional residuals over the differenced series; the tail
    // feeds the MA terms of the one-step forecast.
    std::vector<double> residual_history;
};

struct ArimaFitResult {
    ArimaModel model;  // last iterate even when not converged
    bool converged = false;
    int iterations = 0;
    bool ar_only_fallback = false;  // singular regression dropped the MA terms
};

// Iterated conditional least squares on the d-times differenced prices:
// residuals start at zero, each pass regresses on lagged values and current
// residual estimates, then residuals are recomputed; stops when parameters
// move < 1e-8 or after 50 passes. p + q == 0 fits nothing (pure
// differencing). Requires window.size() - d > p + q + 5.
ArimaFitResult arima_fit(const std::vector<double>& window, const ArimaOrders& orders);

// One-step price forecast via undifferencing, classed with label_sign.
// Probabilities: confidence c = exp(-e) on the point class, (1-c)/2 on each
// other class, where e is the mean in-sample absolute one-step error
// divided by the sample standard deviation of the window prices.
ClassProbPrediction arima_predict(const ArimaModel& model, const std::vector<double>& window,
                                  double neutral_band);

struct EmaModel {
    double alpha = 1.0;  // in (0, 1]
    double initial_forecast = 0.0;
};

// Sum of squared one-step errors of the recursion started at `init`.
double ema_objective(const std::vector<double>& window, double alpha, double init);

// Least-squares optimal initial forecast for a fixed alpha.
double ema_optimal_init(const std::vector<double>& window, double alpha);

// Joint fit: alpha grid at 0.01 steps with the closed-form init, then
// golden-section refinement around the best cell. Ties prefer larger alpha.
EmaModel ema_fit(const std::vector<double>& window);

// Runs the recursion across the window and forecasts one step ahead;
// classing and probabilities as in arima_predict.
ClassProbPrediction ema_predict(const EmaModel& model, const std::vector<double>& window,
                                double neutral_band);

// Probability 1 on the fixed class, 0 elsewhere.
ClassProbPrediction naive_constant_predict(int fixed_class);

}  // namespace ctts
