#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "hornets/activations.hpp"
#include "hornets/matrix.hpp"
#include "hornets/rng.hpp"

namespace hornets {

// Which block handles a batch: catInt for low-cardinality (binary) data,
// linAtt otherwise.
enum class Route { Continuous, Categorical };

// One feature combination: sorted, distinct column indices into the
// pseudovariable-augmented input.
using Combination = std::vector<std::size_t>;
using CombTable = std::vector<Combination>;

// How a combination turns its input slice and weight row into one scalar.
// WeightedSum activates the weighted sum; SignedProduct activates the product
// of the weighted entries, which on +-1 inputs makes each combination a
// signed parity detector and keeps pseudovariables exact no-ops.
enum class InteractionForm { WeightedSum, SignedProduct };

struct LinAttParams {
    Matrix w;               // inputDim x numClasses
    std::vector<double> b;  // numClasses
    double p = 2.0;
    double epsilon = 1e-12;
};

struct CatIntParams {
    Matrix m;               // numRules x order, one weight row per combination
    CombTable comb_table;   // numRules combinations
    Matrix w;               // numRules x numClasses
    std::vector<double> b;  // numClasses
    double dropout_rate = 0.2;
    InteractionForm form = InteractionForm::WeightedSum;
};

// Everything backward needs from the matching forward call.
struct ForwardCache {
    Route route = Route::Continuous;
    Matrix input;          // x as consumed by the block (augmented for catInt)
    Matrix gated;          // linAtt: act(x0) elementwise* x
    Matrix preact;         // catInt: pre-activation per combination
    Matrix f;              // catInt: activated F before dropout
    Matrix dropout_scale;  // catInt: per-entry multiplier replayed in backward
    Matrix softmax_out;    // catInt: softmax over combinations
};

struct LinAttGrads {
    Matrix w;
    std::vector<double> b;
};

struct CatIntGrads {
    Matrix m;
    Matrix w;
    std::vector<double> b;
};

// Counts distinct values over all entries of the batch; Categorical iff the
// count is at most 2. Throws InputError on an empty batch.
Route cat_router(const Matrix& batch);

// x0 = x / max(||row||_p, eps); x1 = act(x0) * x; logits = x1 w + b.
std::pair<Matrix, ForwardCache> lin_att_forward(const Matrix& x, const LinAttParams& params,
                                                const ActivationKind& act);

// Fills F (batchRows x numRules). Optionally writes the pre-activation matrix
// for gradient replay. Throws ConfigError on out-of-range indices.
Matrix comb_act_op(const Matrix& m, const Matrix& x, const CombTable& table,
                   const ActivationKind& act, InteractionForm form,
                   Matrix* preact_out = nullptr);

// logits = softmax(dropout(combActOp(...))) w + b. Dropout only when training;
// inverted scaling so inference needs no correction.
std::pair<Matrix, ForwardCache> cat_int_forward(const Matrix& x, const CatIntParams& params,
                                                const ActivationKind& act, bool training,
                                                RngStream& rng);

// Gradients of the loss w.r.t. the block parameters given dLoss/dLogits.
// Inputs are treated as constants.
LinAttGrads lin_att_backward(const ForwardCache& cache, const Matrix& dlogits,
                             const LinAttParams& params);

CatIntGrads cat_int_backward(const ForwardCache& cache, const Matrix& dlogits,
                             const CatIntParams& params, const ActivationKind& act);

}  // namespace hornets
