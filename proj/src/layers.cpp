#include "hornets/layers.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hornets {

Route cat_router(const Matrix& batch) {
    if (batch.rows == 0 || batch.cols == 0) {
        throw InputError("cat_router: empty batch");
    }
    std::set<double> seen;
    for (double v : batch.data) {
        seen.insert(v);
        if (seen.size() > 2) return Route::Continuous;
    }
    return Route::Categorical;
}

std::pair<Matrix, ForwardCache> lin_att_forward(const Matrix& x, const LinAttParams& params,
                                                const ActivationKind& act) {
    if (x.cols != params.w.rows) {
        throw ShapeError("lin_att_forward: input " + shape_str(x) + " vs weights " +
                         shape_str(params.w));
    }
    const std::vector<double> norms = row_pnorm(x, params.p);
    Matrix gated(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double denom = std::max(norms[i], params.epsilon);
        const double* xr = x.row(i);
        double* gr = gated.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) {
            gr[j] = activate(xr[j] / denom, act) * xr[j];
        }
    }
    Matrix logits = matmul(gated, params.w);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        for (std::size_t j = 0; j < logits.cols; ++j) logits.at(i, j) += params.b[j];
    }
    ForwardCache cache;
    cache.route = Route::Continuous;
    cache.input = x;
    cache.gated = std::move(gated);
    return {std::move(logits), std::move(cache)};
}

Matrix comb_act_op(const Matrix& m, const Matrix& x, const CombTable& table,
                   const ActivationKind& act, InteractionForm form, Matrix* preact_out) {
    const std::size_t num_rules = table.size();
    if (m.rows != num_rules) {
        throw ConfigError("comb_act_op: factorization matrix has " + std::to_string(m.rows) +
                          " rows for " + std::to_string(num_rules) + " combinations");
    }
    const std::size_t order = m.cols;
    for (const auto& comb : table) {
        if (comb.size() != order) {
            throw ConfigError("comb_act_op: combination size " + std::to_string(comb.size()) +
                              " does not match order " + std::to_string(order));
        }
        for (std::size_t idx : comb) {
            if (idx >= x.cols) {
                throw ConfigError("comb_act_op: combination index " + std::to_string(idx) +
                                  " out of bounds for width " + std::to_string(x.cols));
            }
        }
    }
    Matrix f(x.rows, num_rules);
    Matrix pre(x.rows, num_rules);
    for (std::size_t b = 0; b < x.rows; ++b) {
        const double* xr = x.row(b);
        for (std::size_t c = 0; c < num_rules; ++c) {
            const Combination& comb = table[c];
            const double* mr = m.row(c);
            double s;
            if (form == InteractionForm::WeightedSum) {
                s = 0.0;
                for (std::size_t j = 0; j < order; ++j) s += xr[comb[j]] * mr[j];
            } else {
                s = 1.0;
                for (std::size_t j = 0; j < order; ++j) s *= xr[comb[j]] * mr[j];
            }
            pre.at(b, c) = s;
            f.at(b, c) = activate(s, act);
        }
    }
    if (preact_out) *preact_out = std::move(pre);
    return f;
}

std::pair<Matrix, ForwardCache> cat_int_forward(const Matrix& x, const CatIntParams& params,
                                                const ActivationKind& act, bool training,
                                                RngStream& rng) {
    ForwardCache cache;
    cache.route = Route::Categorical;
    cache.input = x;
    cache.f = comb_act_op(params.m, x, params.comb_table, act, params.form, &cache.preact);

    Matrix x0 = cache.f;
    if (training && params.dropout_rate > 0.0) {
        const double keep = 1.0 - params.dropout_rate;
        cache.dropout_scale = Matrix(x0.rows, x0.cols);
        for (std::size_t i = 0; i < x0.data.size(); ++i) {
            const double scale = rng.next_double() < params.dropout_rate ? 0.0 : 1.0 / keep;
            cache.dropout_scale.data[i] = scale;
            x0.data[i] *= scale;
        }
    }
    cache.softmax_out = row_softmax(x0);

    Matrix logits = matmul(cache.softmax_out, params.w);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        for (std::size_t j = 0; j < logits.cols; ++j) logits.at(i, j) += params.b[j];
    }
    return {std::move(logits), std::move(cache)};
}

LinAttGrads lin_att_backward(const ForwardCache& cache, const Matrix& dlogits,
                             const LinAttParams& params) {
    if (cache.route != Route::Continuous || cache.gated.rows != dlogits.rows) {
        throw TrainingError("lin_att_backward: cache does not match this batch");
    }
    LinAttGrads g;
    g.w = Matrix(params.w.rows, params.w.cols);
    g.b.assign(params.b.size(), 0.0);
    // logits = gated w + b
    for (std::size_t i = 0; i < cache.gated.rows; ++i) {
        const double* xr = cache.gated.row(i);
        const double* dr = dlogits.row(i);
        for (std::size_t k = 0; k < params.w.rows; ++k) {
            if (xr[k] == 0.0) continue;
            double* gw = g.w.row(k);
            for (std::size_t j = 0; j < params.w.cols; ++j) gw[j] += xr[k] * dr[j];
        }
        for (std::size_t j = 0; j < params.b.size(); ++j) g.b[j] += dr[j];
    }
    return g;
}

CatIntGrads cat_int_backward(const ForwardCache& cache, const Matrix& dlogits,
                             const CatIntParams& params, const ActivationKind& act) {
    if (cache.route != Route::Categorical || cache.softmax_out.rows != dlogits.rows) {
        throw TrainingError("cat_int_backward: cache does not match this batch");
    }
    const std::size_t batch = dlogits.rows;
    const std::size_t num_rules = params.comb_table.size();
    const std::size_t order = params.m.cols;
    const std::size_t classes = params.w.cols;

    CatIntGrads g;
    g.m = Matrix(params.m.rows, params.m.cols);
    g.w = Matrix(params.w.rows, params.w.cols);
    g.b.assign(params.b.size(), 0.0);

    const bool have_dropout = cache.dropout_scale.rows == batch;
    std::vector<double> slot(order);

    for (std::size_t i = 0; i < batch; ++i) {
        const double* dr = dlogits.row(i);
        const double* x1 = cache.softmax_out.row(i);
        for (std::size_t j = 0; j < classes; ++j) g.b[j] += dr[j];
        // gradW = x1^T dlogits ; dX1 = dlogits w^T
        double dot = 0.0;  // sum_c dX1_c * x1_c for the softmax Jacobian
        std::vector<double> dx1(num_rules, 0.0);
        for (std::size_t c = 0; c < num_rules; ++c) {
            const double* wr = params.w.row(c);
            double* gw = g.w.row(c);
            double acc = 0.0;
            for (std::size_t j = 0; j < classes; ++j) {
                gw[j] += x1[c] * dr[j];
                acc += dr[j] * wr[j];
            }
            dx1[c] = acc;
            dot += acc * x1[c];
        }
        const double* xr = cache.input.row(i);
        for (std::size_t c = 0; c < num_rules; ++c) {
            double dx0 = x1[c] * (dx1[c] - dot);
            if (have_dropout) dx0 *= cache.dropout_scale.at(i, c);
            if (dx0 == 0.0) continue;
            const double dpre = dx0 * activate_grad(cache.preact.at(i, c), act);
            if (dpre == 0.0) continue;
            const Combination& comb = params.comb_table[c];
            const double* mr = params.m.row(c);
            double* gm = g.m.row(c);
            if (params.form == InteractionForm::WeightedSum) {
                for (std::size_t j = 0; j < order; ++j) gm[j] += dpre * xr[comb[j]];
            } else {
                // d/dm_j of prod_i (x_i m_i) = x_j * prod_{i!=j} (x_i m_i)
                for (std::size_t j = 0; j < order; ++j) slot[j] = xr[comb[j]] * mr[j];
                for (std::size_t j = 0; j < order; ++j) {
                    double rest = 1.0;
                    for (std::size_t t = 0; t < order; ++t) {
                        if (t != j) rest *= slot[t];
                    }
                    gm[j] += dpre * xr[comb[j]] * rest;
                }
            }
        }
    }
    return g;
}

}  // namespace hornets
