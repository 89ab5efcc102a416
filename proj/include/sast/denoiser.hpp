#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sast/autograd.hpp"
#include "sast/bps.hpp"
#include "sast/rng.hpp"
#include "sast/tensor.hpp"

namespace sast {

/// UNet-style denoiser: causal temporal-convolutional pose encoder/decoder
/// around a two-stage transformer bottleneck (scene, then other persons).
struct DenoiserConfig {
    int64_t J = 17;
    int64_t N = 275;
    int64_t n_input = 25;
    int levels = 3;
    int64_t pose_kernel = 5;
    int64_t others_kernel = 3;
    int64_t group_norm_groups = 32;
    int64_t stem_channels = 128;
    std::vector<int64_t> pose_channels = {256, 256, 256};   // per level; last == d_scene
    std::vector<int64_t> others_channels = {32, 64, 128};   // last == d_others
    int64_t d_scene = 256, ff_scene = 1024;
    int heads_scene = 8, layers_scene = 3;
    int64_t d_others = 128, ff_others = 512;
    int heads_others = 4, layers_others = 2;
    int64_t time_embed_dim = 128;
    uint64_t fourier_seed = 7;
    int64_t d_obj = kObjectEncodingDim;  // scene-token width: basis size + type one-hot

    int64_t padded_N() const {
        int64_t block = int64_t{1} << levels;
        return (N + block - 1) / block * block;
    }
    int64_t bottleneck_len() const { return padded_N() >> levels; }

    void validate() const {
        if (static_cast<int>(pose_channels.size()) != levels ||
            static_cast<int>(others_channels.size()) != levels)
            throw std::invalid_argument("denoiser: channel widths must list one entry per level");
        if (pose_channels.back() != d_scene)
            throw std::invalid_argument("denoiser: pose bottleneck width must equal d_scene");
        if (others_channels.back() != d_others)
            throw std::invalid_argument("denoiser: others bottleneck width must equal d_others");
        if (d_scene % heads_scene != 0 || d_others % heads_others != 0)
            throw std::invalid_argument("denoiser: model dim not divisible by head count");
        if (time_embed_dim % 2 != 0)
            throw std::invalid_argument("denoiser: time_embed_dim must be even");
        if (n_input >= N) throw std::invalid_argument("denoiser: need n_input < N");
    }

    bool operator==(const DenoiserConfig&) const = default;

    static DenoiserConfig paper() { return DenoiserConfig{}; }

    static DenoiserConfig desk() {
        DenoiserConfig c;
        c.stem_channels = 16;
        c.pose_channels = {16, 32, 32};
        c.others_channels = {8, 16, 16};
        c.d_scene = 32;
        c.ff_scene = 64;
        c.heads_scene = 2;
        c.layers_scene = 1;
        c.d_others = 16;
        c.ff_others = 32;
        c.heads_others = 2;
        c.layers_others = 1;
        c.time_embed_dim = 16;
        c.group_norm_groups = 8;
        return c;
    }
};

using ParamStore = std::map<std::string, Tensor>;

struct DenoiserModel {
    DenoiserConfig cfg;
    ParamStore params;
    Tensor fourier_freqs;  // (time_embed_dim / 2)
    bool zero_scene = false;
    bool zero_others = false;
};

inline int64_t count_params(const ParamStore& params) {
    int64_t n = 0;
    for (const auto& [name, t] : params) n += t.size();
    return n;
}

namespace dn_detail {

inline int64_t groups_for(int64_t channels, int64_t requested) {
    int64_t g = std::min(channels, requested);
    while (channels % g != 0) --g;
    return g;
}

struct Init {
    ParamStore* params;
    Rng* rng;

    void tensor(const std::string& name, std::vector<int64_t> shape, double std_dev) {
        Tensor t(shape);
        for (int64_t i = 0; i < t.size(); ++i) t[i] = std_dev * rng->gauss();
        (*params)[name] = std::move(t);
    }
    void zeros(const std::string& name, std::vector<int64_t> shape) {
        (*params)[name] = Tensor(std::move(shape));
    }
    void ones(const std::string& name, std::vector<int64_t> shape) {
        (*params)[name] = Tensor(std::move(shape), 1.0);
    }
    void linear(const std::string& prefix, int64_t in, int64_t out) {
        tensor(prefix + ".W", {in, out}, 1.0 / std::sqrt(static_cast<double>(in)));
        zeros(prefix + ".b", {out});
    }
    void conv(const std::string& prefix, int64_t cout, int64_t cin, int64_t k) {
        tensor(prefix + ".W", {cout, cin, k}, 1.0 / std::sqrt(static_cast<double>(cin * k)));
        zeros(prefix + ".b", {cout});
    }
    void norm(const std::string& prefix, int64_t c) {
        ones(prefix + ".g", {c});
        zeros(prefix + ".b", {c});
    }
    void submodule(const std::string& prefix, int64_t cin, int64_t cout, int64_t k,
                   int64_t stride, int64_t time_dim) {
        conv(prefix + ".conv1", cout, cin, k);
        norm(prefix + ".gn1", cout);
        linear(prefix + ".tproj", time_dim, cout);
        conv(prefix + ".conv2", cout, cout, k);
        norm(prefix + ".gn2", cout);
        if (cin != cout || stride > 1) conv(prefix + ".res", cout, cin, 1);
    }
    void attention(const std::string& prefix, int64_t d_q, int64_t d_kv) {
        // bias-free projections: all-zero memory contributes exactly zero
        tensor(prefix + ".Wq", {d_q, d_q}, 1.0 / std::sqrt(static_cast<double>(d_q)));
        tensor(prefix + ".Wk", {d_kv, d_q}, 1.0 / std::sqrt(static_cast<double>(d_kv)));
        tensor(prefix + ".Wv", {d_kv, d_q}, 1.0 / std::sqrt(static_cast<double>(d_kv)));
        tensor(prefix + ".Wo", {d_q, d_q}, 1.0 / std::sqrt(static_cast<double>(d_q)));
    }
    void enc_layer(const std::string& prefix, int64_t d, int64_t ff) {
        norm(prefix + ".ln1", d);
        attention(prefix + ".self", d, d);
        norm(prefix + ".ln2", d);
        linear(prefix + ".ff1", d, ff);
        linear(prefix + ".ff2", ff, d);
    }
    void dec_layer(const std::string& prefix, int64_t d, int64_t ff) {
        norm(prefix + ".ln1", d);
        attention(prefix + ".self", d, d);
        norm(prefix + ".ln2", d);
        attention(prefix + ".cross", d, d);
        norm(prefix + ".ln3", d);
        linear(prefix + ".ff1", d, ff);
        linear(prefix + ".ff2", ff, d);
    }
};

/// Sinusoidal positional encoding, (T, D).
inline Tensor sinusoidal_pe(int64_t T, int64_t D) {
    Tensor pe({T, D});
    for (int64_t t = 0; t < T; ++t)
        for (int64_t i = 0; i < D; ++i) {
            double freq = std::pow(10000.0, -2.0 * static_cast<double>(i / 2) /
                                                 static_cast<double>(D));
            double v = static_cast<double>(t) * freq;
            pe.at2(t, i) = (i % 2 == 0) ? std::sin(v) : std::cos(v);
        }
    return pe;
}

/// Right-pad (C, L) to L_pad by replicating the last column.
inline Tensor pad_right_replicate(const Tensor& x, int64_t L_pad) {
    const int64_t C = x.dim(0), L = x.dim(1);
    if (L == L_pad) return x;
    Tensor out({C, L_pad});
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t l = 0; l < L; ++l) out.at2(c, l) = x.at2(c, l);
        for (int64_t l = L; l < L_pad; ++l) out.at2(c, l) = x.at2(c, L - 1);
    }
    return out;
}

}  // namespace dn_detail

inline DenoiserModel init_denoiser(const DenoiserConfig& cfg, uint64_t seed,
                                   bool zero_init_final = true) {
    cfg.validate();
    DenoiserModel model;
    model.cfg = cfg;
    Rng rng(seed);
    dn_detail::Init init{&model.params, &rng};
    const int64_t td = cfg.time_embed_dim;
    const int64_t Jin = 2 * cfg.J * 3;

    init.linear("time.mlp", td, td);

    // primary pose encoder
    init.conv("ex.stem", cfg.stem_channels, Jin, cfg.pose_kernel);
    int64_t cin = cfg.stem_channels;
    for (int l = 0; l < cfg.levels; ++l) {
        int64_t cout = cfg.pose_channels[static_cast<size_t>(l)];
        std::string p = "ex.L" + std::to_string(l);
        init.submodule(p + ".s1", cin, cout, cfg.pose_kernel, 2, td);
        init.submodule(p + ".s2", cout, cout, cfg.pose_kernel, 1, td);
        cin = cout;
    }

    // others encoder
    cin = cfg.J * 3;
    for (int l = 0; l < cfg.levels; ++l) {
        int64_t cout = cfg.others_channels[static_cast<size_t>(l)];
        std::string p = "eo.L" + std::to_string(l);
        init.submodule(p + ".s1", cin, cout, cfg.others_kernel, 2, td);
        init.submodule(p + ".s2", cout, cout, cfg.others_kernel, 1, td);
        cin = cout;
    }

    // aggregation
    init.linear("scene_proj", cfg.d_obj, cfg.d_scene);
    for (int l = 0; l < cfg.layers_scene; ++l) {
        init.enc_layer("enc_s." + std::to_string(l), cfg.d_scene, cfg.ff_scene);
        init.dec_layer("dec_s." + std::to_string(l), cfg.d_scene, cfg.ff_scene);
    }
    for (int l = 0; l < cfg.layers_others; ++l) {
        init.enc_layer("enc_o." + std::to_string(l), cfg.d_others, cfg.ff_others);
        init.dec_layer("dec_o." + std::to_string(l), cfg.d_others, cfg.ff_others);
    }
    init.linear("bridge.down", cfg.d_scene, cfg.d_others);
    init.linear("bridge.up", cfg.d_others, cfg.d_scene);

    // pose decoder: mirror resolutions, consuming skips from the encoder
    {
        int64_t h_ch = cfg.pose_channels.back();
        for (int l = 0; l < cfg.levels; ++l) {
            // level l upsamples to resolution N / 2^(levels-1-l)
            int skip_level = cfg.levels - 2 - l;  // -1 means the stem skip
            int64_t skip_ch = (skip_level >= 0)
                                  ? cfg.pose_channels[static_cast<size_t>(skip_level)]
                                  : cfg.stem_channels;
            int64_t cout = (skip_level >= 0)
                               ? cfg.pose_channels[static_cast<size_t>(skip_level)]
                               : cfg.stem_channels;
            std::string p = "dec.L" + std::to_string(l);
            init.submodule(p + ".s1", h_ch + skip_ch, cout, cfg.pose_kernel, 1, td);
            init.submodule(p + ".s2", cout, cout, cfg.pose_kernel, 1, td);
            h_ch = cout;
        }
        init.conv("dec.final", cfg.J * 3, h_ch, 1);
        if (zero_init_final) model.params["dec.final.W"].fill(0.0);
    }

    // fixed random Fourier frequencies for the diffusion-step embedding
    Rng frng(cfg.fourier_seed);
    model.fourier_freqs = Tensor({td / 2});
    for (int64_t i = 0; i < td / 2; ++i) model.fourier_freqs[i] = 0.1 * frng.gauss();

    return model;
}

/// [sin, cos] features of the diffusion step under fixed random frequencies.
inline Tensor fourier_time_embed(int t, const Tensor& freqs) {
    const int64_t half = freqs.size();
    Tensor out({1, 2 * half});
    for (int64_t i = 0; i < half; ++i) {
        double z = 2.0 * M_PI * freqs[i] * static_cast<double>(t);
        out.at2(0, i) = std::sin(z);
        out.at2(0, half + i) = std::cos(z);
    }
    return out;
}

struct DenoiseInput {
    Tensor x_t;       // (J, 3, N), scaled
    Tensor x_input;   // (J, 3, n), scaled noise-free input frames
    Tensor others;    // (P-1, J, 3, N), scaled; may have dim(0) == 0
    std::vector<std::vector<double>> scene_tokens;  // G x d_Obj
    int t = 1;
};

namespace dn_detail {

struct Forward {
    const DenoiserModel& model;
    bool train;
    std::map<std::string, ag::Var> cache;

    ag::Var param(const std::string& name) {
        auto it = cache.find(name);
        if (it != cache.end()) return it->second;
        auto pit = model.params.find(name);
        if (pit == model.params.end())
            throw std::logic_error("denoiser: missing parameter " + name);
        ag::Var v = ag::leaf(pit->second, train);
        cache.emplace(name, v);
        return v;
    }

    ag::Var linear(const std::string& prefix, const ag::Var& x) {
        return ag::linear(x, param(prefix + ".W"), param(prefix + ".b"));
    }

    ag::Var submodule(const std::string& prefix, const ag::Var& x, int64_t stride,
                      const ag::Var& temb) {
        const Tensor& W1 = model.params.at(prefix + ".conv1.W");
        const int64_t cout = W1.dim(0);
        const int64_t groups = groups_for(cout, model.cfg.group_norm_groups);
        ag::Var h = ag::conv1d_causal(x, param(prefix + ".conv1.W"), param(prefix + ".conv1.b"),
                                      stride);
        h = ag::group_norm(h, param(prefix + ".gn1.g"), param(prefix + ".gn1.b"), groups);
        h = ag::add_col(h, linear(prefix + ".tproj", temb));
        h = ag::silu(h);
        h = ag::conv1d_causal(h, param(prefix + ".conv2.W"), param(prefix + ".conv2.b"), 1);
        h = ag::group_norm(h, param(prefix + ".gn2.g"), param(prefix + ".gn2.b"), groups);
        h = ag::silu(h);
        ag::Var res = x;
        if (model.params.count(prefix + ".res.W"))
            res = ag::conv1d_causal(x, param(prefix + ".res.W"), param(prefix + ".res.b"),
                                    stride);
        return ag::add(res, h);
    }

    ag::Var mha(const std::string& prefix, const ag::Var& q_in, const ag::Var& kv_in, int heads,
                const Tensor* mask) {
        const int64_t D = q_in->value.dim(1);
        const int64_t dh = D / heads;
        ag::Var q = ag::matmul(q_in, param(prefix + ".Wq"));
        ag::Var k = ag::matmul(kv_in, param(prefix + ".Wk"));
        ag::Var v = ag::matmul(kv_in, param(prefix + ".Wv"));
        std::vector<ag::Var> head_outs;
        for (int h = 0; h < heads; ++h) {
            ag::Var qh = ag::slice_cols(q, h * dh, (h + 1) * dh);
            ag::Var kh = ag::slice_cols(k, h * dh, (h + 1) * dh);
            ag::Var vh = ag::slice_cols(v, h * dh, (h + 1) * dh);
            ag::Var scores = ag::scale(ag::matmul(qh, ag::transpose(kh)),
                                       1.0 / std::sqrt(static_cast<double>(dh)));
            ag::Var attn = ag::softmax_rows(scores, mask);
            head_outs.push_back(ag::matmul(attn, vh));
        }
        return ag::matmul(ag::concat_cols(head_outs), param(prefix + ".Wo"));
    }

    ag::Var ff(const std::string& prefix, const ag::Var& x) {
        return linear(prefix + ".ff2", ag::relu(linear(prefix + ".ff1", x)));
    }

    ag::Var ln(const std::string& prefix, const ag::Var& x) {
        return ag::layer_norm(x, param(prefix + ".g"), param(prefix + ".b"));
    }

    ag::Var enc_layer(const std::string& prefix, ag::Var x, int heads, const Tensor* mask) {
        ag::Var q = ln(prefix + ".ln1", x);
        x = ag::add(x, mha(prefix + ".self", q, q, heads, mask));
        x = ag::add(x, ff(prefix, ln(prefix + ".ln2", x)));
        return x;
    }

    /// Decoder layer; `mem` may be null (cross-attention skipped, residual
    /// passthrough — exactly equivalent to all-zero memory tokens).
    ag::Var dec_layer(const std::string& prefix, ag::Var x, const ag::Var* mem, int heads,
                      const Tensor* self_mask, const Tensor* cross_mask) {
        ag::Var q = ln(prefix + ".ln1", x);
        x = ag::add(x, mha(prefix + ".self", q, q, heads, self_mask));
        if (mem)
            x = ag::add(x, mha(prefix + ".cross", ln(prefix + ".ln2", x), *mem, heads,
                               cross_mask));
        x = ag::add(x, ff(prefix, ln(prefix + ".ln3", x)));
        return x;
    }
};

inline Tensor causal_mask(int64_t T) {
    Tensor m({T, T});
    for (int64_t i = 0; i < T; ++i)
        for (int64_t j = i + 1; j < T; ++j)
            m.at2(i, j) = -std::numeric_limits<double>::infinity();
    return m;
}

/// Cross mask from Nb motion tokens onto person-blocked other tokens:
/// motion token tau may attend other tokens with time index <= tau.
inline Tensor others_cross_mask(int64_t Nb, int64_t persons) {
    Tensor m({Nb, persons * Nb});
    for (int64_t i = 0; i < Nb; ++i)
        for (int64_t c = 0; c < persons * Nb; ++c)
            if (c % Nb > i) m.at2(i, c) = -std::numeric_limits<double>::infinity();
    return m;
}

inline Tensor others_self_mask(int64_t Nb, int64_t persons) {
    const int64_t T = persons * Nb;
    Tensor m({T, T});
    for (int64_t r = 0; r < T; ++r)
        for (int64_t c = 0; c < T; ++c)
            if (c % Nb > r % Nb) m.at2(r, c) = -std::numeric_limits<double>::infinity();
    return m;
}

/// Flatten (J,3,F) to channel-major (J*3, F) and zero-velocity pad the
/// input segment out to `frames`.
inline Tensor to_channels(const Tensor& seq, int64_t frames) {
    const int64_t J = seq.dim(0), F = seq.dim(2);
    Tensor out({J * 3, frames});
    for (int64_t j = 0; j < J; ++j)
        for (int64_t d = 0; d < 3; ++d)
            for (int64_t f = 0; f < frames; ++f)
                out.at2(j * 3 + d, f) = seq.at3(j, d, std::min(f, F - 1));
    return out;
}

}  // namespace dn_detail

/// Full forward pass. Returns x_hat0 as a Var with value shape (J*3, N).
/// When training, `param_vars_out` (if given) receives the per-parameter
/// leaf Vars so the caller can read their gradients after backward().
inline ag::Var denoise_var(const DenoiserModel& model, const DenoiseInput& in, bool train,
                           std::map<std::string, ag::Var>* param_vars_out = nullptr) {
    using namespace dn_detail;
    const DenoiserConfig& cfg = model.cfg;
    const int64_t J = cfg.J, N = cfg.N, Np = cfg.padded_N(), Nb = cfg.bottleneck_len();
    if (in.x_t.rank() != 3 || in.x_t.dim(0) != J || in.x_t.dim(2) != N)
        throw std::invalid_argument("denoise: x_t must be (J,3,N)");
    if (in.x_input.dim(2) > N) throw std::invalid_argument("denoise: input longer than N");

    Forward fw{model, train, {}};

    // time embedding, shared across all conv submodules
    ag::Var temb = ag::leaf(fourier_time_embed(in.t, model.fourier_freqs));
    temb = ag::silu(fw.linear("time.mlp", temb));

    // primary encoder input: zero-velocity-padded clean input || noisy sequence
    Tensor xin_ch = to_channels(in.x_input, Np);
    Tensor xt_ch = pad_right_replicate(to_channels(in.x_t, N), Np);
    Tensor prim({2 * J * 3, Np});
    for (int64_t c = 0; c < J * 3; ++c)
        for (int64_t f = 0; f < Np; ++f) {
            prim.at2(c, f) = xin_ch.at2(c, f);
            prim.at2(J * 3 + c, f) = xt_ch.at2(c, f);
        }

    ag::Var h = ag::conv1d_causal(ag::leaf(std::move(prim)), fw.param("ex.stem.W"),
                                  fw.param("ex.stem.b"), 1);
    std::vector<ag::Var> skips{h};  // resolutions Np, Np/2, Np/4
    for (int l = 0; l < cfg.levels; ++l) {
        std::string p = "ex.L" + std::to_string(l);
        h = fw.submodule(p + ".s1", h, 2, temb);
        h = fw.submodule(p + ".s2", h, 1, temb);
        if (l + 1 < cfg.levels) skips.push_back(h);
    }

    // motion tokens
    const Tensor pe_s = sinusoidal_pe(Nb, cfg.d_scene);
    ag::Var hx = ag::add(ag::transpose(h), ag::leaf(pe_s));

    // scene branch
    const int64_t G = static_cast<int64_t>(in.scene_tokens.size());
    bool use_scene = G > 0 && !model.zero_scene;
    ag::Var mem_s;
    if (use_scene) {
        Tensor s({G, cfg.d_obj});
        for (int64_t g = 0; g < G; ++g) {
            const auto& tok = in.scene_tokens[static_cast<size_t>(g)];
            if (static_cast<int64_t>(tok.size()) != cfg.d_obj)
                throw std::invalid_argument("denoise: scene token has wrong dimension");
            for (int64_t d = 0; d < cfg.d_obj; ++d) s.at2(g, d) = tok[static_cast<size_t>(d)];
        }
        mem_s = fw.linear("scene_proj", ag::leaf(std::move(s)));
        for (int l = 0; l < cfg.layers_scene; ++l)
            mem_s = fw.enc_layer("enc_s." + std::to_string(l), mem_s, cfg.heads_scene, nullptr);
    }

    const Tensor self_mask = causal_mask(Nb);
    for (int l = 0; l < cfg.layers_scene; ++l)
        hx = fw.dec_layer("dec_s." + std::to_string(l), hx, use_scene ? &mem_s : nullptr,
                          cfg.heads_scene, &self_mask, nullptr);

    // others branch
    const int64_t P1 = in.others.rank() == 4 ? in.others.dim(0) : 0;
    bool use_others = P1 > 0 && !model.zero_others;
    ag::Var mem_o;
    Tensor cross_mask;
    if (use_others) {
        const Tensor pe_o = sinusoidal_pe(Nb, cfg.d_others);
        std::vector<ag::Var> blocks;
        for (int64_t p = 0; p < P1; ++p) {
            Tensor seq({J, 3, N});
            for (int64_t j = 0; j < J; ++j)
                for (int64_t d = 0; d < 3; ++d)
                    for (int64_t f = 0; f < N; ++f) seq.at3(j, d, f) = in.others.at4(p, j, d, f);
            ag::Var o = ag::leaf(pad_right_replicate(to_channels(seq, N), Np));
            for (int l = 0; l < cfg.levels; ++l) {
                std::string pr = "eo.L" + std::to_string(l);
                o = fw.submodule(pr + ".s1", o, 2, temb);
                o = fw.submodule(pr + ".s2", o, 1, temb);
            }
            blocks.push_back(ag::add(ag::transpose(o), ag::leaf(pe_o)));
        }
        mem_o = ag::concat_rows(blocks);
        const Tensor omask = others_self_mask(Nb, P1);
        for (int l = 0; l < cfg.layers_others; ++l)
            mem_o = fw.enc_layer("enc_o." + std::to_string(l), mem_o, cfg.heads_others, &omask);
        cross_mask = others_cross_mask(Nb, P1);
    }

    ag::Var ho = ag::add(fw.linear("bridge.down", hx),
                         ag::leaf(sinusoidal_pe(Nb, cfg.d_others)));
    const Tensor self_mask_o = causal_mask(Nb);
    for (int l = 0; l < cfg.layers_others; ++l)
        ho = fw.dec_layer("dec_o." + std::to_string(l), ho, use_others ? &mem_o : nullptr,
                          cfg.heads_others, &self_mask_o, use_others ? &cross_mask : nullptr);
    ag::Var hp = fw.linear("bridge.up", ho);

    // pose decoder
    ag::Var d = ag::transpose(hp);  // (d_scene, Nb)
    for (int l = 0; l < cfg.levels; ++l) {
        std::string p = "dec.L" + std::to_string(l);
        d = ag::upsample2(d);
        d = ag::concat_rows({d, skips[static_cast<size_t>(cfg.levels - 1 - l)]});
        d = fw.submodule(p + ".s1", d, 1, temb);
        d = fw.submodule(p + ".s2", d, 1, temb);
    }
    d = ag::conv1d_causal(d, fw.param("dec.final.W"), fw.param("dec.final.b"), 1);
    if (Np != N) d = ag::slice_cols(d, 0, N);
    if (param_vars_out) *param_vars_out = std::move(fw.cache);
    return d;  // (J*3, N)
}

/// Forward-only convenience; returns x_hat0 as (J, 3, N).
inline Tensor denoise(const DenoiserModel& model, const DenoiseInput& in) {
    ag::Var out = denoise_var(model, in, false);
    return Tensor({model.cfg.J, 3, model.cfg.N}, out->value.vec());
}

}  // namespace sast
