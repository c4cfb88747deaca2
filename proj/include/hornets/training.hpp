#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hornets/activations.hpp"
#include "hornets/dataset.hpp"
#include "hornets/layers.hpp"
#include "hornets/matrix.hpp"
#include "hornets/rng.hpp"

namespace hornets {

enum class RoutePin { Auto, Continuous, Categorical };

struct HorNetsConfig {
    ActivationKind activation = ActivationKind::poly_clip(1);
    InteractionForm interaction = InteractionForm::WeightedSum;
    std::size_t order = 4;
    std::size_t num_rules = 64;
    double learning_rate = 0.01;
    std::size_t batch_size = 15;
    std::size_t epochs = 100;
    double dropout_rate = 0.2;
    double p_norm = 2.0;
    double epsilon = 1e-12;
    double resample_fraction = 0.5;
    std::uint64_t seed = 0;
    std::size_t early_stop_patience = 10;
    double m_init_scale = 0.5;
    RoutePin route_pin = RoutePin::Auto;
};

// Throws ConfigError on out-of-range values.
void validate_config(const HorNetsConfig& config);

struct HorNetsModel {
    HorNetsConfig config;
    LinAttParams lin_att;
    CatIntParams cat_int;
    std::optional<Route> fitted_route;
    std::size_t class_count = 0;
    std::size_t feature_count = 0;
};

struct TrainReport {
    std::vector<double> epoch_loss;
    std::size_t epochs_run = 0;
    bool stopped_early = false;
    CombTable final_comb_table;
};

// First/second-moment optimizer state for one parameter tensor.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;
};

// Standard Adam update (beta1=0.9, beta2=0.999, eps=1e-8, bias correction).
void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double learning_rate);

// Appends `order` constant +1 columns.
Matrix augment_pseudovariables(const Matrix& x, std::size_t order);

// {0,1} -> {-1,+1}; anything else is an InputError.
Matrix remap_binary_signs(const Matrix& x);

// numRules distinct sorted order-subsets of [0, augmentedDim), uniform without
// replacement among sets. Clamps numRules to the total number of subsets.
CombTable sample_combinations(std::size_t augmented_dim, std::size_t order, std::size_t num_rules,
                              RngStream& rng);

// Replaces the lowest-scoring ceil(fraction * numRules) combinations with
// fresh uniform samples avoiding duplicates of survivors; re-initializes the
// replaced M rows from U(-m_init_scale, m_init_scale). Returns the replaced
// row indices so the caller can reset per-row optimizer state.
std::vector<std::size_t> resample_combinations(CatIntParams& params,
                                               const std::vector<double>& scores, double fraction,
                                               double m_init_scale, std::size_t augmented_dim,
                                               RngStream& rng);

// Mean cross-entropy plus its gradient w.r.t. logits.
std::pair<double, Matrix> cross_entropy_loss(const Matrix& logits, const std::vector<int>& labels);

std::pair<HorNetsModel, TrainReport> fit(const Dataset& dataset, const HorNetsConfig& config);

std::vector<int> predict(const HorNetsModel& model, const Matrix& x);
Matrix predict_logits(const HorNetsModel& model, const Matrix& x);

// Versioned binary serialization; round-trips bit-exactly.
void save_model(const HorNetsModel& model, const std::string& path);
HorNetsModel load_model(const std::string& path);

}  // namespace hornets
