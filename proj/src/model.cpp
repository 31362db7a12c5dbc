#include "ctts/model.hpp"

#include <cmath>
#include <stdexcept>

#include "ctts/rng.hpp"

namespace ctts {

void validate(const CttsConfig& config) {
    if (config.T < 1) throw std::invalid_argument("T must be positive");
    if (config.d_model < 2 || config.d_model % 2 != 0)
        throw std::invalid_argument("d_model must be even and >= 2");
    if (config.k_min < 1) throw std::invalid_argument("k_min must be >= 1");
    if (config.k_min > config.k_max) throw std::invalid_argument("k_min must not exceed k_max");
    if (config.k_max > config.T) throw std::invalid_argument("k_max must not exceed T");
    if (config.scales.empty()) throw std::invalid_argument("scales must be non-empty");
    if (config.scales.front() != 1) throw std::invalid_argument("scales must start with 1");
    for (int s : config.scales) {
        if (s < 1) throw std::invalid_argument("scales must be positive");
        if (s > config.T) throw std::invalid_argument("scale exceeds window length");
    }
    if (config.num_segments < 1 || config.num_segments > config.T)
        throw std::invalid_argument("num_segments must be in [1, T]");
    if (config.mlp_hidden < 1) throw std::invalid_argument("mlp_hidden must be positive");
    if (config.num_classes != 3) throw std::invalid_argument("num_classes must be 3");
    if (config.neutral_band < 0.0) throw std::invalid_argument("neutral_band must be >= 0");
}

std::vector<std::pair<std::string, Tensor*>> CttsParams::named() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (std::size_t i = 0; i < conv_bank.size(); ++i) {
        const std::string k = std::to_string(k_min + static_cast<int>(i));
        out.emplace_back("conv_w_" + k, &conv_bank[i].w);
        out.emplace_back("conv_b_" + k, &conv_bank[i].b);
    }
    out.emplace_back("w_q", &w_q);
    out.emplace_back("w_k", &w_k);
    out.emplace_back("w_v", &w_v);
    out.emplace_back("scale_logits", &scale_logits);
    out.emplace_back("segment_logits", &segment_logits);
    out.emplace_back("w_mlp1", &w_mlp1);
    out.emplace_back("b_mlp1", &b_mlp1);
    out.emplace_back("w_mlp2", &w_mlp2);
    out.emplace_back("b_mlp2", &b_mlp2);
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> CttsParams::named() const {
    auto mutable_named = const_cast<CttsParams*>(this)->named();
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(mutable_named.size());
    for (auto& [name, t] : mutable_named) out.emplace_back(name, t);
    return out;
}

std::vector<Tensor> CttsParams::tensors() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named()) out.push_back(*t);
    return out;
}

CttsParams CttsParams::clone() const {
    CttsParams out = *this;
    for (std::size_t i = 0; i < conv_bank.size(); ++i) {
        out.conv_bank[i].w = conv_bank[i].w.clone();
        out.conv_bank[i].b = conv_bank[i].b.clone();
    }
    out.w_q = w_q.clone();
    out.w_k = w_k.clone();
    out.w_v = w_v.clone();
    out.scale_logits = scale_logits.clone();
    out.segment_logits = segment_logits.clone();
    out.w_mlp1 = w_mlp1.clone();
    out.b_mlp1 = b_mlp1.clone();
    out.w_mlp2 = w_mlp2.clone();
    out.b_mlp2 = b_mlp2.clone();
    return out;
}

CttsParams CttsParams::fork_grad() const {
    CttsParams out = *this;
    for (std::size_t i = 0; i < conv_bank.size(); ++i) {
        out.conv_bank[i].w = conv_bank[i].w.fork_grad();
        out.conv_bank[i].b = conv_bank[i].b.fork_grad();
    }
    out.w_q = w_q.fork_grad();
    out.w_k = w_k.fork_grad();
    out.w_v = w_v.fork_grad();
    out.scale_logits = scale_logits.fork_grad();
    out.segment_logits = segment_logits.fork_grad();
    out.w_mlp1 = w_mlp1.fork_grad();
    out.b_mlp1 = b_mlp1.fork_grad();
    out.w_mlp2 = w_mlp2.fork_grad();
    out.b_mlp2 = b_mlp2.fork_grad();
    return out;
}

void CttsParams::zero_grad() {
    for (auto& [name, t] : named()) t->zero_grad();
}

int select_kernel(double sigma_t, double sigma_max, int k_min, int k_max) {
    if (!(sigma_max > 0.0)) throw std::invalid_argument("sigma_max must be positive");
    if (sigma_t < 0.0) throw std::invalid_argument("sigma_t must be non-negative");
    if (k_min < 1 || k_min > k_max) throw std::invalid_argument("bad kernel bounds");
    const double raw = std::floor(sigma_t / sigma_max * static_cast<double>(k_max));
    int k = raw >= static_cast<double>(k_max) ? k_max : static_cast<int>(raw);
    if (k < k_min) k = k_min;
    if (k > k_max) k = k_max;
    return k;
}

Tensor cnn_frontend(Tape* tape, const std::vector<double>& window, int kernel_size,
                    const CttsParams& params) {
    const int idx = kernel_size - params.k_min;
    if (idx < 0 || idx >= static_cast<int>(params.conv_bank.size()))
        throw std::invalid_argument("kernel size outside the convolution bank");
    const int t_len = static_cast<int>(window.size());
    Tensor x = Tensor::from_values({t_len, 1}, window);
    Tensor pre = conv1d_same(tape, x, params.conv_bank[idx].w, params.conv_bank[idx].b);
    return relu(tape, pre);
}

Tensor positional_encoding_table(int t_len, int d_model) {
    if (d_model < 2 || d_model % 2 != 0) throw std::invalid_argument("d_model must be even");
    if (t_len < 1) throw std::invalid_argument("table length must be positive");
    Tensor table({t_len, d_model});
    for (int t = 0; t < t_len; ++t) {
        for (int i = 0; 2 * i < d_model; ++i) {
            const double angle =
                t / std::pow(10000.0, (2.0 * i) / static_cast<double>(d_model));
            table.at2(t, 2 * i) = std::sin(angle);
            table.at2(t, 2 * i + 1) = std::cos(angle);
        }
    }
    return table;
}

Tensor positional_encode(Tape* tape, const Tensor& tokens) {
    if (tokens.ndim() != 2) throw std::invalid_argument("tokens must be 2-D");
    Tensor table = positional_encoding_table(tokens.dim(0), tokens.dim(1));
    return add(tape, tokens, table);
}

AttentionResult self_attention(Tape* tape, const Tensor& z, const CttsParams& params) {
    if (z.ndim() != 2 || z.dim(0) < 1) throw std::invalid_argument("z must be (L, d_model)");
    const int d_model = z.dim(1);
    Tensor q = matmul(tape, z, params.w_q);
    Tensor k = matmul(tape, z, params.w_k);
    Tensor v = matmul(tape, z, params.w_v);
    Tensor scores = scale(tape, matmul_bt(tape, q, k), 1.0 / std::sqrt(static_cast<double>(d_model)));
    Tensor attention = softmax_rows(tape, scores);
    Tensor outputs = matmul(tape, attention, v);
    return {outputs, attention};
}

MultiScaleResult multi_scale_attention(Tape* tape, const Tensor& z, const CttsParams& params,
                                       const std::vector<int>& scales) {
    if (scales.empty() || scales.front() != 1)
        throw std::invalid_argument("scales must be non-empty and start with 1");
    MultiScaleResult result;
    for (int s : scales) {
        if (s < 1 || s > z.dim(0)) throw std::invalid_argument("scale outside [1, T]");
        Tensor pooled = s == 1 ? z : avgpool_rows(tape, z, s);
        AttentionResult att = self_attention(tape, pooled, params);
        if (s == 1) result.full_res_outputs = att.outputs;
        result.per_scale_attention.push_back(att.attention);
        result.per_scale_pooled.push_back(
            mean_rows_slice(tape, att.outputs, 0, att.outputs.dim(0)));
    }
    return result;
}

Tensor adaptive_segmentation(Tape* tape, const Tensor& full_res,
                             const std::vector<Tensor>& per_scale_pooled, const CttsParams& params,
                             int num_segments, std::vector<Tensor>* segment_vectors_out) {
    const int t_len = full_res.dim(0);
    if (num_segments < 1 || num_segments > t_len)
        throw std::invalid_argument("num_segments must be in [1, T]");
    if (params.segment_logits.dim(1) != num_segments)
        throw std::invalid_argument("segment_logits length mismatch");
    if (params.scale_logits.dim(1) != static_cast<int>(per_scale_pooled.size()))
        throw std::invalid_argument("scale_logits length mismatch");

    const int seg_len = t_len / num_segments;
    std::vector<Tensor> segment_vectors;
    for (int k = 0; k < num_segments; ++k) {
        const int begin = k * seg_len;
        const int end = k == num_segments - 1 ? t_len : begin + seg_len;
        segment_vectors.push_back(mean_rows_slice(tape, full_res, begin, end));
    }
    Tensor segment_stack = concat_rows(tape, segment_vectors);
    Tensor omega = softmax_rows(tape, params.segment_logits);
    Tensor base = matmul(tape, omega, segment_stack);

    Tensor scale_stack = concat_rows(tape, per_scale_pooled);
    Tensor alpha = softmax_rows(tape, params.scale_logits);
    Tensor multi = matmul(tape, alpha, scale_stack);

    if (segment_vectors_out) *segment_vectors_out = segment_vectors;
    return add(tape, base, multi);
}

ForwardTrace forward(Tape* tape, const LabeledWindow& window, const CttsParams& params,
                     const CttsConfig& config) {
    validate(config);
    if (static_cast<int>(window.inputs.size()) != config.T)
        throw std::invalid_argument("window length does not match config.T");
    if (!(params.sigma_max > 0.0)) throw std::logic_error("sigma_max has not been frozen");

    ForwardTrace trace;
    trace.kernel_used = select_kernel(window.volatility, params.sigma_max, config.k_min, config.k_max);
    Tensor tokens = cnn_frontend(tape, window.inputs, trace.kernel_used, params);
    trace.tokens = positional_encode(tape, tokens);
    MultiScaleResult multi = multi_scale_attention(tape, trace.tokens, params, config.scales);
    trace.per_scale_attention = multi.per_scale_attention;
    trace.per_scale_pooled = multi.per_scale_pooled;
    trace.h_seg = adaptive_segmentation(tape, multi.full_res_outputs, multi.per_scale_pooled,
                                        params, config.num_segments, &trace.segment_vectors);
    Tensor hidden = relu(tape, add_row_broadcast(tape, matmul(tape, trace.h_seg, params.w_mlp1),
                                                 params.b_mlp1));
    trace.logits = add_row_broadcast(tape, matmul(tape, hidden, params.w_mlp2), params.b_mlp2);
    trace.probs = softmax_rows(tape, trace.logits);
    return trace;
}

namespace {

Tensor xavier(Rng& rng, std::vector<int> shape, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(std::move(shape), true);
    for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

CttsParams init_params(const CttsConfig& config, std::uint64_t seed) {
    validate(config);
    Rng rng(seed);
    CttsParams params;
    params.k_min = config.k_min;
    for (int k = config.k_min; k <= config.k_max; ++k) {
        ConvKernel kernel;
        kernel.w = xavier(rng, {k, 1, config.d_model}, k, k * config.d_model);
        kernel.b = Tensor({config.d_model}, true);
        params.conv_bank.push_back(kernel);
    }
    params.w_q = xavier(rng, {config.d_model, config.d_model}, config.d_model, config.d_model);
    params.w_k = xavier(rng, {config.d_model, config.d_model}, config.d_model, config.d_model);
    params.w_v = xavier(rng, {config.d_model, config.d_model}, config.d_model, config.d_model);
    params.scale_logits = Tensor({1, static_cast<int>(config.scales.size())}, true);
    params.segment_logits = Tensor({1, config.num_segments}, true);
    params.w_mlp1 = xavier(rng, {config.d_model, config.mlp_hidden}, config.d_model, config.mlp_hidden);
    params.b_mlp1 = Tensor({config.mlp_hidden}, true);
    params.w_mlp2 = xavier(rng, {config.mlp_hidden, config.num_classes}, config.mlp_hidden,
                           config.num_classes);
    params.b_mlp2 = Tensor({config.num_classes}, true);
    params.sigma_max = 0.0;
    return params;
}

}  // namespace ctts
