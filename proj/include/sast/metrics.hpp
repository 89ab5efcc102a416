#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sast/normalize.hpp"
#include "sast/recording.hpp"
#include "sast/rng.hpp"
#include "sast/tensor.hpp"

namespace sast {

// ---------------------------------------------------------------------------
// Motion words

/// Short real snippets in a snippet-local normalized frame, used as the
/// retrieval vocabulary for NDMS and UMWR.
struct ReferenceSet {
    int64_t kappa = 8;
    int64_t J = 17;
    std::vector<std::vector<double>> words;  // flattened (kappa, J, 3), frame-major
    std::string source_tag;

    int64_t size() const { return static_cast<int64_t>(words.size()); }
};

/// Normalizes a (J,3,kappa) snippet at its first frame and flattens it
/// frame-major to (kappa*J*3).
inline std::vector<double> snippet_word(const Tensor& snippet, const SkeletonSpec& sk) {
    if (snippet.rank() != 3 || snippet.dim(1) != 3)
        throw std::invalid_argument("snippet_word: expected shape (J,3,kappa)");
    Tensor norm = apply_norm(fit_norm(snippet, 1, sk), snippet);
    const int64_t J = norm.dim(0), K = norm.dim(2);
    std::vector<double> w(static_cast<size_t>(K * J * 3));
    size_t idx = 0;
    for (int64_t f = 0; f < K; ++f)
        for (int64_t j = 0; j < J; ++j)
            for (int64_t d = 0; d < 3; ++d) w[idx++] = norm.at3(j, d, f);
    return w;
}

inline ReferenceSet build_reference_set(const std::vector<SceneRecording>& recordings,
                                        int64_t kappa = 8) {
    if (kappa < 2) throw std::invalid_argument("build_reference_set: kappa must be >= 2");
    if (recordings.empty())
        throw std::invalid_argument("build_reference_set: no recordings");
    ReferenceSet rs;
    rs.kappa = kappa;
    rs.J = recordings[0].skeleton.joint_count;
    std::set<std::vector<double>> seen;
    for (const auto& rec : recordings) {
        const int64_t J = rec.skeleton.joint_count;
        for (const auto& track : rec.persons) {
            const int64_t F = track.frames();
            for (int64_t s = 0; s + kappa <= F; ++s) {
                Tensor snip({J, 3, kappa});
                for (int64_t f = 0; f < kappa; ++f)
                    for (int64_t j = 0; j < J; ++j)
                        for (int64_t d = 0; d < 3; ++d)
                            snip.at3(j, d, f) = track.joints[static_cast<size_t>(
                                ((s + f) * J + j) * 3 + d)];
                std::vector<double> w = snippet_word(snip, rec.skeleton);
                bool finite = true;
                for (double v : w)
                    if (!std::isfinite(v)) finite = false;
                if (!finite) continue;
                if (seen.insert(w).second) rs.words.push_back(std::move(w));
            }
        }
    }
    if (rs.words.empty()) throw std::invalid_argument("build_reference_set: no snippets");
    return rs;
}

/// Exhaustive nearest neighbour in Euclidean distance; ties go to the
/// lowest index.
inline int64_t nearest_motion_word(const std::vector<double>& word, const ReferenceSet& rs) {
    if (rs.words.empty()) throw std::invalid_argument("nearest_motion_word: empty reference set");
    int64_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int64_t i = 0; i < rs.size(); ++i) {
        const auto& w = rs.words[static_cast<size_t>(i)];
        if (w.size() != word.size())
            throw std::invalid_argument("nearest_motion_word: word length mismatch");
        double d = 0;
        for (size_t k = 0; k < w.size(); ++k) {
            double diff = word[k] - w[k];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

namespace met_detail {

inline Tensor slice_frames(const Tensor& seq, int64_t start, int64_t len) {
    const int64_t J = seq.dim(0);
    Tensor out({J, 3, len});
    for (int64_t j = 0; j < J; ++j)
        for (int64_t d = 0; d < 3; ++d)
            for (int64_t f = 0; f < len; ++f) out.at3(j, d, f) = seq.at3(j, d, start + f);
    return out;
}

inline Tensor concat_frames(const Tensor& a, const Tensor& b) {
    const int64_t J = a.dim(0), Na = a.dim(2), Nb = b.dim(2);
    Tensor out({J, 3, Na + Nb});
    for (int64_t j = 0; j < J; ++j)
        for (int64_t d = 0; d < 3; ++d) {
            for (int64_t f = 0; f < Na; ++f) out.at3(j, d, f) = a.at3(j, d, f);
            for (int64_t f = 0; f < Nb; ++f) out.at3(j, d, Na + f) = b.at3(j, d, f);
        }
    return out;
}

}  // namespace met_detail

/// Per-frame velocity agreement between a window and its matched word:
/// mean over joints of (1+cos angle)/2 times the speed ratio min/max.
/// Two zero velocities agree perfectly; exactly one zero velocity scores 0.
inline double ndms_score(const Tensor& prediction, const Tensor& input_tail,
                         const ReferenceSet& rs, const SkeletonSpec& sk) {
    const int64_t kappa = rs.kappa, J = prediction.dim(0);
    const int64_t prep = std::min<int64_t>(kappa, input_tail.dim(2));
    Tensor x = met_detail::concat_frames(
        met_detail::slice_frames(input_tail, input_tail.dim(2) - prep, prep), prediction);
    const int64_t L = x.dim(2);
    if (L < kappa) throw std::invalid_argument("ndms_score: sequence shorter than a snippet");

    double total = 0;
    int64_t frames = 0;
    for (int64_t s = 0; s + kappa <= L; ++s) {
        Tensor win = met_detail::slice_frames(x, s, kappa);
        Tensor norm = apply_norm(fit_norm(win, 1, sk), win);
        std::vector<double> w = snippet_word(win, sk);
        const auto& ref = rs.words[static_cast<size_t>(nearest_motion_word(w, rs))];
        auto ref_at = [&](int64_t f, int64_t j, int64_t d) {
            return ref[static_cast<size_t>((f * J + j) * 3 + d)];
        };
        for (int64_t f = 1; f < kappa; ++f) {
            double frame_score = 0;
            for (int64_t j = 0; j < J; ++j) {
                double v[3], r[3], nv = 0, nr = 0, dot = 0;
                for (int64_t d = 0; d < 3; ++d) {
                    v[d] = norm.at3(j, d, f) - norm.at3(j, d, f - 1);
                    r[d] = ref_at(f, j, d) - ref_at(f - 1, j, d);
                    nv += v[d] * v[d];
                    nr += r[d] * r[d];
                    dot += v[d] * r[d];
                }
                nv = std::sqrt(nv);
                nr = std::sqrt(nr);
                if (v[0] == r[0] && v[1] == r[1] && v[2] == r[2])
                    frame_score += 1.0;  // identical velocities: exact 1, no rounding
                else if (nv == 0 || nr == 0)
                    frame_score += 0.0;
                else {
                    double cosang = std::clamp(dot / (nv * nr), -1.0, 1.0);
                    frame_score += 0.5 * (1.0 + cosang) * (std::min(nv, nr) / std::max(nv, nr));
                }
            }
            total += frame_score / static_cast<double>(J);
            ++frames;
        }
    }
    return total / static_cast<double>(frames);
}

/// Unique motion word ratio: distinct nearest-word indices over all
/// kappa-windows, divided by the window count.
inline double umwr(const Tensor& chi, const ReferenceSet& rs, const SkeletonSpec& sk) {
    const int64_t kappa = rs.kappa, L = chi.dim(2);
    if (L < kappa) throw std::invalid_argument("umwr: sequence shorter than a snippet");
    std::set<int64_t> distinct;
    for (int64_t s = 0; s + kappa <= L; ++s)
        distinct.insert(nearest_motion_word(
            snippet_word(met_detail::slice_frames(chi, s, kappa), sk), rs));
    return static_cast<double>(distinct.size()) / static_cast<double>(L + 1 - kappa);
}

/// UMWR on the k-th second of the output (25 fps): output frames
/// [25(k-1), 25k) with the preceding kappa-1 frames prepended so every
/// scored window ends inside that second.
inline double umwr_at(const Tensor& full_seq, int64_t n, int64_t k, const ReferenceSet& rs,
                      const SkeletonSpec& sk) {
    const int64_t kappa = rs.kappa;
    const int64_t fps_i = static_cast<int64_t>(sk.fps);
    int64_t start = n + fps_i * (k - 1) - (kappa - 1);
    int64_t end = n + fps_i * k;
    if (start < 0 || end > full_seq.dim(2))
        throw std::invalid_argument("umwr_at: second " + std::to_string(k) +
                                    " outside the sequence");
    return umwr(met_detail::slice_frames(full_seq, start, end - start), rs, sk);
}

// ---------------------------------------------------------------------------
// Trajectory statistics

/// Planar midpoint of the two hip joints per frame; shape (N, 2).
inline Tensor root_trajectory(const Tensor& seq, const SkeletonSpec& sk) {
    const int64_t N = seq.dim(2);
    Tensor r({N, 2});
    for (int64_t f = 0; f < N; ++f)
        for (int64_t d = 0; d < 2; ++d)
            r.at2(f, d) = 0.5 * (seq.at3(sk.left_hip_index, d, f) +
                                 seq.at3(sk.right_hip_index, d, f));
    return r;
}

/// Mean per-frame root displacement over the output frames.
inline double trajectory_length(const Tensor& r, int64_t n, int64_t N) {
    if (N <= n) throw std::invalid_argument("trajectory_length: need N > n");
    double total = 0;
    for (int64_t t = n; t < N; ++t) {
        double dx = r.at2(t, 0) - r.at2(t - 1, 0);
        double dy = r.at2(t, 1) - r.at2(t - 1, 1);
        total += std::sqrt(dx * dx + dy * dy);
    }
    return total / static_cast<double>(N - n);
}

/// 1-D empirical Wasserstein-1 distance via the quantile-function integral.
inline double wasserstein1(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1: empty sample set");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const size_t na = a.size(), nb = b.size();
    // Quantile functions are step functions with breakpoints i/na and j/nb.
    double w = 0, q = 0;
    size_t i = 0, j = 0;
    while (i < na && j < nb) {
        double qa = static_cast<double>(i + 1) / static_cast<double>(na);
        double qb = static_cast<double>(j + 1) / static_cast<double>(nb);
        double qn = std::min(qa, qb);
        w += (qn - q) * std::abs(a[i] - b[j]);
        q = qn;
        if (qa <= qn) ++i;
        if (qb <= qn) ++j;
    }
    return w;
}

/// Frame-wise mean planar root speed in m/s; speeds above the clip are
/// clipped before averaging. Entry f covers the step from frame f to f+1.
inline std::vector<double> velocity_curve(const std::vector<Tensor>& sequences,
                                          const SkeletonSpec& sk, double clip = 10.0) {
    if (sequences.empty()) throw std::invalid_argument("velocity_curve: no sequences");
    const int64_t N = sequences[0].dim(2);
    std::vector<double> curve(static_cast<size_t>(N - 1), 0.0);
    std::vector<int64_t> counts(static_cast<size_t>(N - 1), 0);
    for (const auto& seq : sequences) {
        Tensor r = root_trajectory(seq, sk);
        const int64_t L = std::min<int64_t>(N, seq.dim(2));
        for (int64_t f = 0; f + 1 < L; ++f) {
            double dx = r.at2(f + 1, 0) - r.at2(f, 0);
            double dy = r.at2(f + 1, 1) - r.at2(f, 1);
            double v = std::sqrt(dx * dx + dy * dy) * sk.fps;
            curve[static_cast<size_t>(f)] += std::min(v, clip);
            ++counts[static_cast<size_t>(f)];
        }
    }
    for (size_t f = 0; f < curve.size(); ++f)
        if (counts[f] > 0) curve[f] /= static_cast<double>(counts[f]);
    return curve;
}

// ---------------------------------------------------------------------------
// Realism classifier

inline constexpr int64_t kRealismFrames = 50;

/// Three-layer classifier over per-joint DCT features. FC1 is shared
/// across joints.
struct RealismClassifierParams {
    int64_t J = 17;
    Tensor W1{{32, 150}}, b1{{32}};
    Tensor W2, b2{{512}};
    Tensor W3{{1, 512}}, b3{{1}};

    int64_t param_count() const {
        return W1.size() + b1.size() + W2.size() + b2.size() + W3.size() + b3.size();
    }
};

inline RealismClassifierParams init_realism(int64_t J, uint64_t seed) {
    RealismClassifierParams p;
    p.J = J;
    p.W2 = Tensor({512, J * 32});
    Rng rng = Rng::derive(seed, 0x524c43u);
    auto init = [&](Tensor& t, int64_t fan_in) {
        double s = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (int64_t i = 0; i < t.size(); ++i) t[i] = s * rng.gauss();
    };
    init(p.W1, 150);
    init(p.W2, J * 32);
    init(p.W3, 512);
    return p;
}

/// Orthonormal DCT-II of a length-n signal.
inline std::vector<double> dct2_orthonormal(const std::vector<double>& x) {
    const size_t n = x.size();
    std::vector<double> out(n);
    for (size_t k = 0; k < n; ++k) {
        double acc = 0;
        for (size_t i = 0; i < n; ++i)
            acc += x[i] * std::cos(M_PI * (2.0 * i + 1.0) * k / (2.0 * n));
        out[k] = acc * std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
    }
    return out;
}

namespace met_detail {

/// Per-joint DCT feature block: (J, 150) for a 50-frame window.
inline Tensor realism_features(const Tensor& x50) {
    if (x50.rank() != 3 || x50.dim(1) != 3 || x50.dim(2) != kRealismFrames)
        throw std::invalid_argument("realism: expected shape (J,3,50)");
    const int64_t J = x50.dim(0);
    Tensor feat({J, 3 * kRealismFrames});
    for (int64_t j = 0; j < J; ++j)
        for (int64_t d = 0; d < 3; ++d) {
            std::vector<double> traj(static_cast<size_t>(kRealismFrames));
            for (int64_t f = 0; f < kRealismFrames; ++f)
                traj[static_cast<size_t>(f)] = x50.at3(j, d, f);
            std::vector<double> c = dct2_orthonormal(traj);
            for (int64_t k = 0; k < kRealismFrames; ++k)
                feat.at2(j, d * kRealismFrames + k) = c[static_cast<size_t>(k)];
        }
    return feat;
}

struct RealismActs {
    Tensor feat;  // (J, 150)
    Tensor h1;    // (J, 32), post-ReLU
    Tensor h2;    // (512), post-ReLU
    double logit = 0;
    double score = 0;
};

inline RealismActs realism_forward_acts(const Tensor& feat,
                                        const RealismClassifierParams& p) {
    const int64_t J = p.J;
    RealismActs a;
    a.feat = feat;
    a.h1 = Tensor({J, 32});
    for (int64_t j = 0; j < J; ++j)
        for (int64_t o = 0; o < 32; ++o) {
            double acc = p.b1[o];
            for (int64_t i = 0; i < 150; ++i) acc += p.W1.at2(o, i) * feat.at2(j, i);
            a.h1.at2(j, o) = std::max(0.0, acc);
        }
    a.h2 = Tensor({512});
    for (int64_t o = 0; o < 512; ++o) {
        double acc = p.b2[o];
        for (int64_t j = 0; j < J; ++j)
            for (int64_t i = 0; i < 32; ++i) acc += p.W2.at2(o, j * 32 + i) * a.h1.at2(j, i);
        a.h2[o] = std::max(0.0, acc);
    }
    a.logit = p.b3[0];
    for (int64_t i = 0; i < 512; ++i) a.logit += p.W3.at2(0, i) * a.h2[i];
    a.score = 1.0 / (1.0 + std::exp(-a.logit));
    return a;
}

}  // namespace met_detail

inline double realism_forward(const Tensor& x50, const RealismClassifierParams& p) {
    return met_detail::realism_forward_acts(met_detail::realism_features(x50), p).score;
}

struct RealismTrainConfig {
    double lr = 1e-3;
    int epochs = 6;
    int64_t batch_size = 16;
    double holdout_fraction = 0.2;
    uint64_t seed = 0;
};

struct RealismTrainReport {
    RealismClassifierParams params;
    double accuracy = 0;
    double auc = 0;
};

namespace met_detail {

inline double rank_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    if (pos.empty() || neg.empty()) return 0.5;
    double wins = 0;
    for (double p : pos)
        for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

}  // namespace met_detail

/// Trains the realism classifier with Adam on binary cross entropy;
/// evaluates accuracy and AUC on a held-out split.
inline RealismTrainReport train_realism(const std::vector<Tensor>& real_windows,
                                        const std::vector<Tensor>& synthetic_windows,
                                        const RealismTrainConfig& cfg) {
    if (real_windows.empty() || synthetic_windows.empty())
        throw std::invalid_argument("train_realism: both classes must be nonempty");
    const int64_t J = real_windows[0].dim(0);

    struct Example {
        Tensor feat;
        double label;
    };
    std::vector<Example> all;
    for (const auto& w : real_windows) all.push_back({met_detail::realism_features(w), 1.0});
    for (const auto& w : synthetic_windows)
        all.push_back({met_detail::realism_features(w), 0.0});

    Rng rng = Rng::derive(cfg.seed, 0x52454cu);
    for (size_t i = all.size(); i > 1; --i)
        std::swap(all[i - 1], all[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(i)))]);
    size_t holdout = std::max<size_t>(2, static_cast<size_t>(
                                             cfg.holdout_fraction * static_cast<double>(all.size())));
    holdout = std::min(holdout, all.size() - 1);
    std::vector<Example> test(all.end() - static_cast<ptrdiff_t>(holdout), all.end());
    all.resize(all.size() - holdout);

    RealismTrainReport rep;
    rep.params = init_realism(J, cfg.seed);
    RealismClassifierParams& p = rep.params;

    // Adam state, one slot per parameter tensor.
    std::vector<Tensor*> slots = {&p.W1, &p.b1, &p.W2, &p.b2, &p.W3, &p.b3};
    std::vector<Tensor> m, v;
    for (Tensor* s : slots) {
        m.emplace_back(s->shape());
        v.emplace_back(s->shape());
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int64_t adam_t = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng = Rng::derive(cfg.seed, 0x455048u, static_cast<uint64_t>(epoch));
        std::vector<size_t> order(all.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1],
                      order[static_cast<size_t>(erng.uniform_int(static_cast<int64_t>(i)))]);

        for (size_t start = 0; start < order.size();
             start += static_cast<size_t>(cfg.batch_size)) {
            size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            std::vector<Tensor> grads;
            for (Tensor* s : slots) grads.emplace_back(s->shape());

            for (size_t bi = start; bi < end; ++bi) {
                const Example& ex = all[order[bi]];
                auto a = met_detail::realism_forward_acts(ex.feat, p);
                double dlogit = a.score - ex.label;  // d BCE / d logit

                // FC3
                Tensor dh2({512});
                for (int64_t i = 0; i < 512; ++i) {
                    grads[4].at2(0, i) += dlogit * a.h2[i];
                    dh2[i] = dlogit * p.W3.at2(0, i) * (a.h2[i] > 0 ? 1.0 : 0.0);
                }
                grads[5][0] += dlogit;
                // FC2
                Tensor dh1({J, 32});
                for (int64_t o = 0; o < 512; ++o) {
                    if (dh2[o] == 0) continue;
                    grads[3][o] += dh2[o];
                    for (int64_t j = 0; j < J; ++j)
                        for (int64_t i = 0; i < 32; ++i) {
                            grads[2].at2(o, j * 32 + i) += dh2[o] * a.h1.at2(j, i);
                            dh1.at2(j, i) += dh2[o] * p.W2.at2(o, j * 32 + i);
                        }
                }
                // FC1 (shared across joints)
                for (int64_t j = 0; j < J; ++j)
                    for (int64_t o = 0; o < 32; ++o) {
                        double g = dh1.at2(j, o) * (a.h1.at2(j, o) > 0 ? 1.0 : 0.0);
                        if (g == 0) continue;
                        grads[1][o] += g;
                        for (int64_t i = 0; i < 150; ++i)
                            grads[0].at2(o, i) += g * a.feat.at2(j, i);
                    }
            }

            double inv = 1.0 / static_cast<double>(end - start);
            ++adam_t;
            const double bc1 = 1.0 - std::pow(beta1, adam_t);
            const double bc2 = 1.0 - std::pow(beta2, adam_t);
            for (size_t s = 0; s < slots.size(); ++s) {
                Tensor& param = *slots[s];
                for (int64_t i = 0; i < param.size(); ++i) {
                    double g = grads[s][i] * inv;
                    m[s][i] = beta1 * m[s][i] + (1 - beta1) * g;
                    v[s][i] = beta2 * v[s][i] + (1 - beta2) * g * g;
                    param[i] -= cfg.lr * (m[s][i] / bc1) / (std::sqrt(v[s][i] / bc2) + eps);
                }
            }
        }
    }

    std::vector<double> pos, neg;
    int64_t correct = 0;
    for (const auto& ex : test) {
        double s = met_detail::realism_forward_acts(ex.feat, p).score;
        (ex.label > 0.5 ? pos : neg).push_back(s);
        if ((s > 0.5) == (ex.label > 0.5)) ++correct;
    }
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    rep.auc = met_detail::rank_auc(pos, neg);
    return rep;
}

/// Mean classifier score over all 50-frame windows starting every 5 frames
/// inside the first k seconds. Windows are normalized at their first frame.
inline double realism_at_k(const Tensor& seq, const RealismClassifierParams& params, int64_t k,
                           const SkeletonSpec& sk) {
    const int64_t L = seq.dim(2);
    const int64_t limit = std::min<int64_t>(L, k * static_cast<int64_t>(sk.fps));
    if (limit < kRealismFrames)
        throw std::invalid_argument("realism_at_k: sequence shorter than one window");
    double total = 0;
    int64_t count = 0;
    for (int64_t s = 0; s + kRealismFrames <= limit; s += 5) {
        Tensor win = met_detail::slice_frames(seq, s, kRealismFrames);
        Tensor norm = apply_norm(fit_norm(win, 1, sk), win);
        total += realism_forward(norm, params);
        ++count;
    }
    return total / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Report

struct MetricsReport {
    double ndms = 0;
    std::map<int64_t, double> umwr_at_s;     // seconds 2,4,6,8,10 where available
    std::map<int64_t, double> realism_at_s;  // seconds 2..10 where available
    double trajectory_mean = 0;
    double trajectory_std = 0;
    double trajectory_w1 = 0;
    std::vector<double> velocity;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["ndms"] = ndms;
        // Fixed key set; seconds the sequences cannot cover stay null.
        for (int64_t k = 2; k <= 10; k += 2) {
            auto it = umwr_at_s.find(k);
            j["umwr@" + std::to_string(k) + "s"] =
                it == umwr_at_s.end() ? nlohmann::json() : nlohmann::json(it->second);
        }
        for (int64_t k = 2; k <= 10; ++k) {
            auto it = realism_at_s.find(k);
            j["realism@" + std::to_string(k) + "s"] =
                it == realism_at_s.end() ? nlohmann::json() : nlohmann::json(it->second);
        }
        j["trajectory"] = {{"mean", trajectory_mean},
                           {"std", trajectory_std},
                           {"w1", trajectory_w1}};
        j["velocity_curve"] = velocity;
        return j;
    }
};

}  // namespace sast
