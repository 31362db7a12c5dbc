#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctts/data.hpp"
#include "ctts/ops.hpp"
#include "ctts/tensor.hpp"

namespace ctts {

struct CttsConfig {
    int T = kWindowLen;           // tokens per window
    int d_model = 16;             // embedding width, must be even
    int k_min = 2;                // smallest convolution kernel
    int k_max = 7;                // largest convolution kernel
    std::vector<int> scales = {1, 2, 4};
    int num_segments = 4;
    int mlp_hidden = 64;
    int num_classes = 3;
    double neutral_band = 1e-4;
    std::int64_t seed = 0;
};

// Throws std::invalid_argument describing the offending field.
void validate(const CttsConfig& config);

struct ConvKernel {
    Tensor w;  // (k, 1, d_model)
    Tensor b;  // (d_model)
};

struct CttsParams {
    std::vector<ConvKernel> conv_bank;  // sizes k_min .. k_max
    int k_min = 0;
    Tensor w_q, w_k, w_v;    // (d_model, d_model), shared across scales
    Tensor scale_logits;     // (1, S); alpha = softmax(scale_logits)
    Tensor segment_logits;   // (1, K); omega = softmax(segment_logits)
    Tensor w_mlp1, b_mlp1;   // (d_model, mlp_hidden), (mlp_hidden)
    Tensor w_mlp2, b_mlp2;   // (mlp_hidden, num_classes), (num_classes)
    double sigma_max = 0.0;  // frozen once, at training start

    // Canonical parameter order used by the optimizer, the checkpoint
    // format and gradient checks.
    std::vector<std::pair<std::string, Tensor*>> named();
    std::vector<std::pair<std::string, const Tensor*>> named() const;
    std::vector<Tensor> tensors() const;

    // Deep copy.
    CttsParams clone() const;
    // Shares values, fresh gradient buffers; see Tensor::fork_grad.
    CttsParams fork_grad() const;
    void zero_grad();
};

struct ForwardTrace {
    int kernel_used = 0;
    Tensor tokens;                            // (T, d_model), after positional encoding
    std::vector<Tensor> per_scale_attention;  // A^(s), row-stochastic
    std::vector<Tensor> per_scale_pooled;     // u^(s), each (1, d_model)
    std::vector<Tensor> segment_vectors;      // h^(k), each (1, d_model)
    Tensor h_seg;                             // (1, d_model)
    Tensor logits;                            // (1, C)
    Tensor probs;                             // (1, C)
};

// floor(sigma_t / sigma_max * k_max) clamped into [k_min, k_max].
int select_kernel(double sigma_t, double sigma_max, int k_min, int k_max);

// ReLU(conv(window, bank[k]) + bias); only the selected kernel participates.
Tensor cnn_frontend(Tape* tape, const std::vector<double>& window, int kernel_size,
                    const CttsParams& params);

// Fixed sinusoidal table: p[t][2i] = sin(t / 10000^(2i/d)), p[t][2i+1] = cos(...).
Tensor positional_encoding_table(int T, int d_model);

// tokens + table, elementwise
Tensor positional_encode(Tape* tape, const Tensor& tokens);

struct AttentionResult {
    Tensor outputs;    // (L, d_model)
    Tensor attention;  // (L, L), rows sum to 1
};

// Single-head scaled dot-product attention over the rows of z.
AttentionResult self_attention(Tape* tape, const Tensor& z, const CttsParams& params);

struct MultiScaleResult {
    std::vector<Tensor> per_scale_pooled;     // u^(s)
    std::vector<Tensor> per_scale_attention;  // A^(s)
    Tensor full_res_outputs;                  // scale-1 attention outputs (T, d_model)
};

// Pool by each scale factor, attend, then mean-pool over time. Scale 1 must
// come first; its outputs are kept at full resolution for segmentation.
MultiScaleResult multi_scale_attention(Tape* tape, const Tensor& z, const CttsParams& params,
                                       const std::vector<int>& scales);

// Segment-weighted mean of the full-resolution rows plus the alpha-weighted
// per-scale vectors: h_seg = sum_k omega_k h^(k) + sum_s alpha_s u^(s).
Tensor adaptive_segmentation(Tape* tape, const Tensor& full_res,
                             const std::vector<Tensor>& per_scale_pooled, const CttsParams& params,
                             int num_segments, std::vector<Tensor>* segment_vectors_out = nullptr);

// Full pipeline: kernel selection, CNN front-end, positional encoding,
// multi-scale attention, segmentation, MLP head, softmax.
ForwardTrace forward(Tape* tape, const LabeledWindow& window, const CttsParams& params,
                     const CttsConfig& config);

// Xavier-uniform weights, zero biases and logits; deterministic per seed.
CttsParams init_params(const CttsConfig& config, std::uint64_t seed);

// class label {-1,0,+1} <-> probability index {0,1,2}
inline int label_to_index(int label) { return label + 1; }
inline int index_to_label(int index) { return index - 1; }

}  // namespace ctts
