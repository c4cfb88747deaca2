#include "hornets/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>

namespace hornets {

void validate_config(const HorNetsConfig& config) {
    if (config.activation.is_poly() && (config.activation.k < 0 || config.activation.k > 16)) {
        throw ConfigError("activation: polyClip k must be in [0, 16], got " +
                          std::to_string(config.activation.k));
    }
    if (config.order < 1) throw ConfigError("order must be >= 1");
    if (config.num_rules < 2) throw ConfigError("numRules must be >= 2, softmax over one rule is degenerate");
    if (!(config.learning_rate > 0.0)) throw ConfigError("learningRate must be positive");
    if (config.batch_size < 1) throw ConfigError("batchSize must be >= 1");
    if (config.dropout_rate < 0.0 || config.dropout_rate >= 1.0) {
        throw ConfigError("dropoutRate must lie in [0, 1)");
    }
    if (config.p_norm < 1.0) throw ConfigError("pNorm must be >= 1");
    if (!(config.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (config.resample_fraction < 0.0 || config.resample_fraction > 1.0) {
        throw ConfigError("resampleFraction must lie in [0, 1]");
    }
    if (config.early_stop_patience < 1) throw ConfigError("earlyStopPatience must be >= 1");
    if (!(config.m_init_scale > 0.0)) throw ConfigError("mInitScale must be positive");
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double learning_rate) {
    if (params.size() != grads.size()) {
        throw ShapeError("adam_step: " + std::to_string(params.size()) + " params vs " +
                         std::to_string(grads.size()) + " grads");
    }
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
        state.t = 0;
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    ++state.t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= learning_rate * mhat / (std::sqrt(vhat) + eps);
    }
}

Matrix augment_pseudovariables(const Matrix& x, std::size_t order) {
    if (order < 1) throw ConfigError("augment_pseudovariables: order must be >= 1");
    Matrix out(x.rows, x.cols + order, 1.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        std::memcpy(out.row(i), x.row(i), x.cols * sizeof(double));
    }
    return out;
}

Matrix remap_binary_signs(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double v = x.data[i];
        if (v == 0.0) {
            out.data[i] = -1.0;
        } else if (v == 1.0) {
            out.data[i] = 1.0;
        } else {
            throw InputError("remap_binary_signs: entry " + std::to_string(v) +
                             " is not in {0, 1}");
        }
    }
    return out;
}

namespace {

// C(n, r) saturated at cap.
std::uint64_t comb_count_capped(std::size_t n, std::size_t r, std::uint64_t cap) {
    if (r > n) return 0;
    r = std::min(r, n - r);
    unsigned __int128 result = 1;
    for (std::size_t i = 1; i <= r; ++i) {
        result = result * (n - r + i) / i;
        if (result >= cap) return cap;
    }
    return static_cast<std::uint64_t>(result);
}

// `count` distinct sorted order-subsets of [0, aug) not present in `forbid`.
// Enumerates the space when it is small, otherwise rejection-samples.
CombTable sample_distinct(std::size_t aug, std::size_t order, std::size_t count,
                          const std::set<Combination>& forbid, RngStream& rng) {
    constexpr std::uint64_t kEnumLimit = 1 << 16;
    const std::uint64_t total = comb_count_capped(aug, order, kEnumLimit);
    CombTable out;
    out.reserve(count);
    if (total < kEnumLimit) {
        // lexicographic enumeration of the available subsets
        CombTable available;
        Combination cur(order);
        std::iota(cur.begin(), cur.end(), 0);
        while (true) {
            if (!forbid.count(cur)) available.push_back(cur);
            // next combination
            std::size_t i = order;
            while (i > 0) {
                --i;
                if (cur[i] != i + aug - order) {
                    ++cur[i];
                    for (std::size_t j = i + 1; j < order; ++j) cur[j] = cur[j - 1] + 1;
                    break;
                }
                if (i == 0) goto done;
            }
            if (order == 0) break;
        }
    done:
        if (available.size() < count) count = available.size();
        // partial Fisher-Yates: the first `count` entries are a uniform sample
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(available.size() - i));
            std::swap(available[i], available[j]);
            out.push_back(available[i]);
        }
        return out;
    }
    std::set<Combination> seen = forbid;
    std::vector<std::size_t> pool(aug);
    Combination draw(order);
    while (out.size() < count) {
        std::iota(pool.begin(), pool.end(), 0);
        for (std::size_t j = 0; j < order; ++j) {
            std::size_t k = j + static_cast<std::size_t>(rng.uniform_int(aug - j));
            std::swap(pool[j], pool[k]);
            draw[j] = pool[j];
        }
        std::sort(draw.begin(), draw.end());
        if (seen.insert(draw).second) out.push_back(draw);
    }
    return out;
}

}  // namespace

CombTable sample_combinations(std::size_t augmented_dim, std::size_t order, std::size_t num_rules,
                              RngStream& rng) {
    if (order == 0) throw ConfigError("sample_combinations: order must be >= 1");
    if (order > augmented_dim) {
        throw ConfigError("sample_combinations: order " + std::to_string(order) +
                          " exceeds augmented dimension " + std::to_string(augmented_dim));
    }
    const std::uint64_t total = comb_count_capped(augmented_dim, order, ~0ULL >> 1);
    if (num_rules > total) num_rules = static_cast<std::size_t>(total);
    return sample_distinct(augmented_dim, order, num_rules, {}, rng);
}

std::vector<std::size_t> resample_combinations(CatIntParams& params,
                                               const std::vector<double>& scores, double fraction,
                                               double m_init_scale, std::size_t augmented_dim,
                                               RngStream& rng) {
    const std::size_t num_rules = params.comb_table.size();
    if (scores.size() != num_rules) {
        throw ShapeError("resample_combinations: " + std::to_string(scores.size()) +
                         " scores for " + std::to_string(num_rules) + " combinations");
    }
    const std::size_t replace_count =
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(num_rules)));
    if (replace_count == 0) return {};

    std::vector<std::size_t> idx(num_rules);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<std::size_t> replaced(idx.begin(), idx.begin() + replace_count);
    std::sort(replaced.begin(), replaced.end());

    std::set<Combination> survivors;
    std::size_t r = 0;
    for (std::size_t i = 0; i < num_rules; ++i) {
        if (r < replaced.size() && replaced[r] == i) {
            ++r;
            continue;
        }
        survivors.insert(params.comb_table[i]);
    }
    CombTable fresh = sample_distinct(augmented_dim, params.m.cols, replace_count, survivors, rng);
    for (std::size_t j = 0; j < replaced.size(); ++j) {
        const std::size_t row = replaced[j];
        params.comb_table[row] = fresh[j];
        double* mr = params.m.row(row);
        for (std::size_t c = 0; c < params.m.cols; ++c) {
            mr[c] = rng.uniform(-m_init_scale, m_init_scale);
        }
    }
    return replaced;
}

std::pair<double, Matrix> cross_entropy_loss(const Matrix& logits, const std::vector<int>& labels) {
    if (logits.rows != labels.size()) {
        throw ShapeError("cross_entropy_loss: " + std::to_string(logits.rows) + " rows vs " +
                         std::to_string(labels.size()) + " labels");
    }
    const std::size_t batch = logits.rows;
    const std::size_t classes = logits.cols;
    Matrix dlogits(batch, classes);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            throw InputError("cross_entropy_loss: label " + std::to_string(y) +
                             " outside [0, " + std::to_string(classes) + ")");
        }
        const double* r = logits.row(i);
        double mx = r[0];
        for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, r[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < classes; ++j) z += std::exp(r[j] - mx);
        const double lse = mx + std::log(z);
        loss += lse - r[y];
        double* d = dlogits.row(i);
        for (std::size_t j = 0; j < classes; ++j) {
            d[j] = std::exp(r[j] - lse) / static_cast<double>(batch);
        }
        d[y] -= 1.0 / static_cast<double>(batch);
    }
    return {loss / static_cast<double>(batch), std::move(dlogits)};
}

namespace {

Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& idx, std::size_t begin,
                   std::size_t end) {
    Matrix out(end - begin, x.cols);
    for (std::size_t i = begin; i < end; ++i) {
        std::memcpy(out.row(i - begin), x.row(idx[i]), x.cols * sizeof(double));
    }
    return out;
}

void init_uniform(Matrix& m, double scale, RngStream& rng) {
    for (double& v : m.data) v = rng.uniform(-scale, scale);
}

}  // namespace

std::pair<HorNetsModel, TrainReport> fit(const Dataset& dataset, const HorNetsConfig& config) {
    validate_config(config);
    if (dataset.size() == 0) throw InputError("fit: empty dataset");
    if (dataset.features.rows != dataset.size()) {
        throw ShapeError("fit: feature rows do not match label count");
    }
    std::set<int> distinct(dataset.labels.begin(), dataset.labels.end());
    if (distinct.size() < 2) throw InputError("fit: dataset holds a single class");
    std::size_t class_count = dataset.class_count;
    if (class_count == 0) class_count = static_cast<std::size_t>(*distinct.rbegin()) + 1;

    const std::size_t n = dataset.size();
    const std::size_t d = dataset.features.cols;
    const std::size_t aug = d + config.order;

    RngStream rng(config.seed);

    HorNetsModel model;
    model.config = config;
    model.class_count = class_count;
    model.feature_count = d;

    model.lin_att.p = config.p_norm;
    model.lin_att.epsilon = config.epsilon;
    model.lin_att.w = Matrix(d, class_count);
    init_uniform(model.lin_att.w, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    model.lin_att.b.assign(class_count, 0.0);

    model.cat_int.form = config.interaction;
    model.cat_int.dropout_rate = config.dropout_rate;
    model.cat_int.comb_table = sample_combinations(aug, config.order, config.num_rules, rng);
    const std::size_t rules = model.cat_int.comb_table.size();
    model.cat_int.m = Matrix(rules, config.order);
    init_uniform(model.cat_int.m, config.m_init_scale, rng);
    model.cat_int.w = Matrix(rules, class_count);
    const double w_scale = 1.0 / std::sqrt(static_cast<double>(rules));
    init_uniform(model.cat_int.w, w_scale, rng);
    model.cat_int.b.assign(class_count, 0.0);

    TrainReport report;
    if (config.epochs == 0) {
        report.final_comb_table = model.cat_int.comb_table;
        return {std::move(model), std::move(report)};
    }

    AdamState opt_lin_w, opt_lin_b, opt_m, opt_w, opt_b;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);

    std::size_t categorical_batches = 0;
    std::size_t continuous_batches = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t stall = 0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(perm);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        std::vector<double> mass(rules, 0.0);
        std::size_t mass_rows = 0;

        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            Matrix xb = gather_rows(dataset.features, perm, start, end);
            std::vector<int> yb(end - start);
            for (std::size_t i = start; i < end; ++i) yb[i - start] = dataset.labels[perm[i]];

            Route route;
            switch (config.route_pin) {
                case RoutePin::Continuous: route = Route::Continuous; break;
                case RoutePin::Categorical: route = Route::Categorical; break;
                default: route = cat_router(xb);
            }

            double batch_loss;
            if (route == Route::Categorical) {
                ++categorical_batches;
                Matrix xa = augment_pseudovariables(remap_binary_signs(xb), config.order);
                auto [logits, cache] = cat_int_forward(xa, model.cat_int, config.activation, true, rng);
                auto [loss, dlogits] = cross_entropy_loss(logits, yb);
                batch_loss = loss;
                CatIntGrads grads = cat_int_backward(cache, dlogits, model.cat_int, config.activation);
                adam_step(model.cat_int.m.data, grads.m.data, opt_m, config.learning_rate);
                adam_step(model.cat_int.w.data, grads.w.data, opt_w, config.learning_rate);
                adam_step(model.cat_int.b, grads.b, opt_b, config.learning_rate);
                for (std::size_t i = 0; i < cache.softmax_out.rows; ++i) {
                    const double* r = cache.softmax_out.row(i);
                    for (std::size_t c = 0; c < rules; ++c) mass[c] += r[c];
                }
                mass_rows += cache.softmax_out.rows;
            } else {
                ++continuous_batches;
                auto [logits, cache] = lin_att_forward(xb, model.lin_att, config.activation);
                auto [loss, dlogits] = cross_entropy_loss(logits, yb);
                batch_loss = loss;
                LinAttGrads grads = lin_att_backward(cache, dlogits, model.lin_att);
                adam_step(model.lin_att.w.data, grads.w.data, opt_lin_w, config.learning_rate);
                adam_step(model.lin_att.b, grads.b, opt_lin_b, config.learning_rate);
            }
            if (!std::isfinite(batch_loss)) {
                throw TrainingError("fit: non-finite loss in epoch " + std::to_string(epoch));
            }
            epoch_loss += batch_loss;
            ++batches;
        }
        epoch_loss /= static_cast<double>(batches);
        report.epoch_loss.push_back(epoch_loss);
        ++report.epochs_run;

        const bool improved = epoch_loss < best_loss - 1e-5;
        if (improved) {
            best_loss = epoch_loss;
            stall = 0;
        } else if (++stall >= config.early_stop_patience) {
            report.stopped_early = true;
            break;
        }

        // Resample between epochs. The final epoch keeps its table so the
        // returned model never carries untrained fresh rows.
        const bool last_epoch = epoch + 1 == config.epochs;
        if (!last_epoch && mass_rows > 0 && config.resample_fraction > 0.0) {
            std::vector<double> scores(rules);
            for (std::size_t c = 0; c < rules; ++c) {
                scores[c] = mass[c] / static_cast<double>(mass_rows);
            }
            std::vector<std::size_t> replaced = resample_combinations(
                model.cat_int, scores, config.resample_fraction, config.m_init_scale, aug, rng);
            // Fresh combinations also get fresh head rows and clean optimizer
            // moments; stale ones would score them on the predecessor's role.
            for (std::size_t row : replaced) {
                double* wr = model.cat_int.w.row(row);
                for (std::size_t j = 0; j < class_count; ++j) {
                    wr[j] = rng.uniform(-w_scale, w_scale);
                }
                for (std::size_t c = 0; c < config.order; ++c) {
                    const std::size_t k = row * config.order + c;
                    if (k < opt_m.m.size()) opt_m.m[k] = opt_m.v[k] = 0.0;
                }
                for (std::size_t j = 0; j < class_count; ++j) {
                    const std::size_t k = row * class_count + j;
                    if (k < opt_w.m.size()) opt_w.m[k] = opt_w.v[k] = 0.0;
                }
            }
        }
    }

    model.fitted_route = categorical_batches >= continuous_batches ? Route::Categorical
                                                                   : Route::Continuous;
    report.final_comb_table = model.cat_int.comb_table;
    return {std::move(model), std::move(report)};
}

Matrix predict_logits(const HorNetsModel& model, const Matrix& x) {
    if (x.cols != model.feature_count) {
        throw ShapeError("predict: input " + shape_str(x) + " vs featureCount " +
                         std::to_string(model.feature_count));
    }
    Route route;
    switch (model.config.route_pin) {
        case RoutePin::Continuous: route = Route::Continuous; break;
        case RoutePin::Categorical: route = Route::Categorical; break;
        default: route = cat_router(x);
    }
    RngStream unused(0);
    if (route == Route::Categorical) {
        Matrix xa = augment_pseudovariables(remap_binary_signs(x), model.config.order);
        auto [logits, cache] = cat_int_forward(xa, model.cat_int, model.config.activation, false, unused);
        return logits;
    }
    auto [logits, cache] = lin_att_forward(x, model.lin_att, model.config.activation);
    return logits;
}

std::vector<int> predict(const HorNetsModel& model, const Matrix& x) {
    Matrix logits = predict_logits(model, x);
    std::vector<int> labels(logits.rows);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* r = logits.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols; ++j) {
            if (r[j] > r[best]) best = j;
        }
        labels[i] = static_cast<int>(best);
    }
    return labels;
}

namespace {

constexpr char kMagic[8] = {'H', 'O', 'R', 'N', 'E', 'T', 'S', '\x01'};

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(buf), 8);
}

void write_f64(std::ostream& os, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    write_u64(os, v);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw InputError("model file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& is) {
    const std::uint64_t v = read_u64(is);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

void write_matrix(std::ostream& os, const Matrix& m) {
    write_u64(os, m.rows);
    write_u64(os, m.cols);
    for (double v : m.data) write_f64(os, v);
}

Matrix read_matrix(std::istream& is) {
    Matrix m;
    m.rows = read_u64(is);
    m.cols = read_u64(is);
    m.data.resize(m.rows * m.cols);
    for (double& v : m.data) v = read_f64(is);
    return m;
}

void write_vec(std::ostream& os, const std::vector<double>& v) {
    write_u64(os, v.size());
    for (double x : v) write_f64(os, x);
}

std::vector<double> read_vec(std::istream& is) {
    std::vector<double> v(read_u64(is));
    for (double& x : v) x = read_f64(is);
    return v;
}

}  // namespace

void save_model(const HorNetsModel& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("save_model: cannot open " + path);
    os.write(kMagic, 8);
    const HorNetsConfig& c = model.config;
    write_u64(os, c.activation.is_poly() ? 0 : 1);
    write_u64(os, static_cast<std::uint64_t>(c.activation.k));
    write_u64(os, c.interaction == InteractionForm::WeightedSum ? 0 : 1);
    write_u64(os, c.order);
    write_u64(os, c.num_rules);
    write_f64(os, c.learning_rate);
    write_u64(os, c.batch_size);
    write_u64(os, c.epochs);
    write_f64(os, c.dropout_rate);
    write_f64(os, c.p_norm);
    write_f64(os, c.epsilon);
    write_f64(os, c.resample_fraction);
    write_u64(os, c.seed);
    write_u64(os, c.early_stop_patience);
    write_f64(os, c.m_init_scale);
    write_u64(os, static_cast<std::uint64_t>(c.route_pin));
    write_u64(os, model.feature_count);
    write_u64(os, model.class_count);
    write_u64(os, model.fitted_route ? (*model.fitted_route == Route::Categorical ? 2 : 1) : 0);
    write_matrix(os, model.lin_att.w);
    write_vec(os, model.lin_att.b);
    write_matrix(os, model.cat_int.m);
    write_u64(os, model.cat_int.comb_table.size());
    for (const auto& comb : model.cat_int.comb_table) {
        for (std::size_t idx : comb) write_u64(os, idx);
    }
    write_matrix(os, model.cat_int.w);
    write_vec(os, model.cat_int.b);
    if (!os) throw InputError("save_model: write failed for " + path);
}

HorNetsModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("load_model: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) {
        throw InputError("load_model: " + path + " is not a model file");
    }
    HorNetsModel model;
    HorNetsConfig& c = model.config;
    const bool poly = read_u64(is) == 0;
    const int k = static_cast<int>(read_u64(is));
    c.activation = poly ? ActivationKind::poly_clip(k) : ActivationKind::relu();
    c.interaction = read_u64(is) == 0 ? InteractionForm::WeightedSum : InteractionForm::SignedProduct;
    c.order = read_u64(is);
    c.num_rules = read_u64(is);
    c.learning_rate = read_f64(is);
    c.batch_size = read_u64(is);
    c.epochs = read_u64(is);
    c.dropout_rate = read_f64(is);
    c.p_norm = read_f64(is);
    c.epsilon = read_f64(is);
    c.resample_fraction = read_f64(is);
    c.seed = read_u64(is);
    c.early_stop_patience = read_u64(is);
    c.m_init_scale = read_f64(is);
    c.route_pin = static_cast<RoutePin>(read_u64(is));
    model.feature_count = read_u64(is);
    model.class_count = read_u64(is);
    const std::uint64_t route = read_u64(is);
    if (route == 1) model.fitted_route = Route::Continuous;
    if (route == 2) model.fitted_route = Route::Categorical;
    model.lin_att.w = read_matrix(is);
    model.lin_att.b = read_vec(is);
    model.lin_att.p = c.p_norm;
    model.lin_att.epsilon = c.epsilon;
    model.cat_int.m = read_matrix(is);
    const std::size_t rules = read_u64(is);
    model.cat_int.comb_table.assign(rules, Combination(c.order));
    for (auto& comb : model.cat_int.comb_table) {
        for (std::size_t& idx : comb) idx = read_u64(is);
    }
    model.cat_int.w = read_matrix(is);
    model.cat_int.b = read_vec(is);
    model.cat_int.dropout_rate = c.dropout_rate;
    model.cat_int.form = c.interaction;
    return model;
}

}  // namespace hornets
