// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/toy_transformer.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "cwcd/error.hpp"
#include "text_util.hpp"

namespace cwcd {

namespace {

constexpr std::string_view kToyFormatTag = "cwcd-toy/1";

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
    }
    return m;
}

Eigen::MatrixXd sinusoidal(int positions, int d) {
    Eigen::MatrixXd m(positions, d);
    for (int p = 0; p < positions; ++p) {
        for (int i = 0; i < d; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d);
            m(p, i) = (i % 2 == 0) ? std::sin(p * rate) : std::cos(p * rate);
        }
    }
    return m;
}

// Row-wise RMS normalisation without learned gain.
Eigen::MatrixXd rms_norm(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double rms = std::sqrt(x.row(r).squaredNorm() / static_cast<double>(x.cols()) + 1e-6);
        out.row(r) = x.row(r) / rms;
    }
    return out;
}

}  // namespace

LoraDelta LoraDelta::negated() const {
    LoraDelta d = *this;
    d.scale = -scale;
    return d;
}

ToyTransformer::ToyTransformer(Vocabulary vocab, ToyTransformerConfig cfg) : vocab_(std::move(vocab)), cfg_(cfg) {
    if (cfg_.d_model < 1 || cfg_.layers < 1 || cfg_.heads < 1 || cfg_.d_model % cfg_.heads != 0) {
        throw ConfigError("toy transformer needs d_model divisible by heads and positive dimensions");
    }
    if (cfg_.visual_levels < 2 || cfg_.max_positions < 1) {
        throw ConfigError("toy transformer needs visual_levels >= 2 and max_positions >= 1");
    }
    std::mt19937_64 rng(cfg_.seed);
    const int d = cfg_.d_model;
    const double proj = 1.0 / std::sqrt(static_cast<double>(d));
    embed_ = random_matrix(rng, static_cast<Eigen::Index>(vocab_.size()), d, 1.0);
    visual_embed_ = random_matrix(rng, cfg_.visual_levels, d, 1.0);
    positional_ = sinusoidal(cfg_.max_positions, d);
    for (int l = 0; l < cfg_.layers; ++l) {
        Layer layer;
        layer.wq = random_matrix(rng, d, d, proj);
        layer.wk = random_matrix(rng, d, d, proj);
        layer.wv = random_matrix(rng, d, d, proj);
        layer.wo = random_matrix(rng, d, d, proj);
        layer.mlp_in = random_matrix(rng, 2 * d, d, proj);
        layer.mlp_out = random_matrix(rng, d, 2 * d, 1.0 / std::sqrt(2.0 * d));
        layers_.push_back(std::move(layer));
    }
    head_ = random_matrix(rng, static_cast<Eigen::Index>(vocab_.size()), d, proj);
}

ModelOutput ToyTransformer::forward(const VisualContext& visual, std::span<const TokenId> prompt,
                                    std::span<const TokenId> prefix) const {
    check_context(visual.tokens.size(), prompt.size(), prefix.size());
    const auto n = static_cast<Eigen::Index>(visual.tokens.size() + prompt.size() + prefix.size());
    if (n == 0) {
        throw ModelError("toy transformer forward on an empty input");
    }
    const int d = cfg_.d_model;
    Eigen::MatrixXd x(n, d);
    Eigen::Index pos = 0;
    for (TokenId id : visual.tokens.ids) {
        if (id < 0 || id >= cfg_.visual_levels) {
            throw ModelError("visual token " + std::to_string(id) + " outside [0, " +
                             std::to_string(cfg_.visual_levels) + ")");
        }
        x.row(pos) = visual_embed_.row(id) + positional_.row(pos);
        ++pos;
    }
    for (auto part : {prompt, prefix}) {
        for (TokenId id : part) {
            if (!vocab_.valid(id)) throw ModelError("text token " + std::to_string(id) + " outside the vocabulary");
            x.row(pos) = embed_.row(id) + positional_.row(pos);
            ++pos;
        }
    }

    const int heads = cfg_.heads;
    const int dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    AttentionTensor attention(static_cast<std::size_t>(cfg_.layers), static_cast<std::size_t>(heads),
                              static_cast<std::size_t>(n));
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        const Eigen::MatrixXd h = rms_norm(x);
        const Eigen::MatrixXd q = h * layer.wq.transpose();
        const Eigen::MatrixXd k = h * layer.wk.transpose();
        const Eigen::MatrixXd v = h * layer.wv.transpose();
        Eigen::MatrixXd mixed(n, d);
        for (int hd = 0; hd < heads; ++hd) {
            const auto qh = q.middleCols(hd * dh, dh);
            const auto kh = k.middleCols(hd * dh, dh);
            const auto vh = v.middleCols(hd * dh, dh);
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::VectorXd s = (kh.topRows(i + 1) * qh.row(i).transpose()) * scale;
                const double mx = s.maxCoeff();
                s = (s.array() - mx).exp();
                s /= s.sum();
                mixed.block(i, hd * dh, 1, dh) = s.transpose() * vh.topRows(i + 1);
                if (i == n - 1) {
                    for (Eigen::Index j = 0; j < n; ++j) attention.at(l, static_cast<std::size_t>(hd), static_cast<std::size_t>(j)) = s(j);
                }
            }
        }
        x += mixed * layer.wo.transpose();
        const Eigen::MatrixXd inner = (rms_norm(x) * layer.mlp_in.transpose()).cwiseMax(0.0);
        x += inner * layer.mlp_out.transpose();
    }
    const Eigen::MatrixXd last = rms_norm(x.bottomRows(1));
    const Eigen::VectorXd logits = head_ * last.row(0).transpose();

    ModelOutput out;
    out.logits.assign(logits.data(), logits.data() + logits.size());
    out.attention = std::move(attention);
    return out;
}

std::vector<std::string> ToyTransformer::matrix_names() const {
    std::vector<std::string> names = {"embed", "visual_embed", "head"};
    for (int l = 0; l < cfg_.layers; ++l) {
        for (const char* m : {"wq", "wk", "wv", "wo", "mlp_in", "mlp_out"}) {
            names.push_back("layer" + std::to_string(l) + "." + m);
        }
    }
    return names;
}

const Eigen::MatrixXd& ToyTransformer::matrix(const std::string& name) const {
    return const_cast<ToyTransformer*>(this)->mutable_matrix(name);
}

Eigen::MatrixXd& ToyTransformer::mutable_matrix(const std::string& name) {
    if (name == "embed") return embed_;
    if (name == "visual_embed") return visual_embed_;
    if (name == "head") return head_;
    if (name.rfind("layer", 0) == 0) {
        const auto dot = name.find('.');
        if (dot != std::string::npos) {
            const std::string idx = name.substr(5, dot - 5);
            const std::string which = name.substr(dot + 1);
            std::size_t used = 0;
            int l = -1;
            try {
                l = std::stoi(idx, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == idx.size() && l >= 0 && l < cfg_.layers) {
                Layer& layer = layers_[static_cast<std::size_t>(l)];
                if (which == "wq") return layer.wq;
                if (which == "wk") return layer.wk;
                if (which == "wv") return layer.wv;
                if (which == "wo") return layer.wo;
                if (which == "mlp_in") return layer.mlp_in;
                if (which == "mlp_out") return layer.mlp_out;
            }
        }
    }
    throw AdapterError("unknown weight matrix '" + name + "'");
}

Eigen::MatrixXd merge_lora(const Eigen::MatrixXd& w, const LoraDelta& delta) {
    const auto r = delta.a.rows();
    if (r < 1 || delta.b.cols() != r || delta.b.rows() != w.rows() || delta.a.cols() != w.cols()) {
        throw AdapterError("adapter for '" + delta.target + "' has shapes B " + std::to_string(delta.b.rows()) + "x" +
                           std::to_string(delta.b.cols()) + ", A " + std::to_string(delta.a.rows()) + "x" +
                           std::to_string(delta.a.cols()) + " but the target is " + std::to_string(w.rows()) + "x" +
                           std::to_string(w.cols()));
    }
    if (r > std::min(w.rows(), w.cols())) {
        throw AdapterError("adapter rank exceeds the target's dimensions");
    }
    return w + delta.scale * (delta.b * delta.a);
}

ToyTransformer ToyTransformer::with_delta(const LoraDelta& delta) const {
    ToyTransformer out = *this;
    Eigen::MatrixXd& w = out.mutable_matrix(delta.target);
    w = merge_lora(w, delta);
    return out;
}

ToyTransformer apply_lora(const ToyTransformer& model, const LoraDelta& delta) { return model.with_delta(delta); }

LoraDelta random_lora(const ToyTransformer& model, const std::string& target, int rank, double scale,
                      std::uint64_t seed) {
    const Eigen::MatrixXd& w = model.matrix(target);
    if (rank < 1) throw AdapterError("adapter rank must be >= 1");
    std::mt19937_64 rng(seed);
    LoraDelta d;
    d.target = target;
    d.a = random_matrix(rng, rank, w.cols(), 1.0 / std::sqrt(static_cast<double>(w.cols())));
    d.b = random_matrix(rng, w.rows(), rank, 1.0);
    d.scale = scale;
    return d;
}

std::string serialize_toy(const ToyTransformer& model) {
    const auto& c = model.config();
    std::ostringstream os;
    os << "format = " << kToyFormatTag << "\n"
       << "seed = " << c.seed << "\n"
       << "d_model = " << c.d_model << "\n"
       << "layers = " << c.layers << "\n"
       << "heads = " << c.heads << "\n"
       << "visual_levels = " << c.visual_levels << "\n"
       << "max_positions = " << c.max_positions << "\n"
       << "vocab =";
    for (const auto& t : model.vocabulary().tokens()) os << " " << detail::escape(t);
    os << "\n";
    return os.str();
}

ToyTransformer parse_toy(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    ToyTransformerConfig cfg;
    std::optional<Vocabulary> vocab;
    bool format_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string k = detail::trim(t.substr(0, eq));
        const std::string v = detail::trim(t.substr(eq + 1));
        try {
            if (k == "format") {
                if (v != kToyFormatTag) throw ParseError("unsupported format '" + v + "'");
                format_seen = true;
            } else if (k == "seed") {
                cfg.seed = std::stoull(v);
            } else if (k == "d_model") {
                cfg.d_model = std::stoi(v);
            } else if (k == "layers") {
                cfg.layers = std::stoi(v);
            } else if (k == "heads") {
                cfg.heads = std::stoi(v);
            } else if (k == "visual_levels") {
                cfg.visual_levels = std::stoi(v);
            } else if (k == "max_positions") {
                cfg.max_positions = std::stoi(v);
            } else if (k == "vocab") {
                std::vector<std::string> toks;
                for (const auto& w : split_whitespace(v)) toks.push_back(detail::unescape(w, lineno));
                if (toks.size() < 3 || toks[0] != kBosText || toks[1] != kEosText || toks[2] != kPadText) {
                    throw ParseError("vocabulary must start with <bos> <eos> <pad>");
                }
                vocab = Vocabulary(std::span<const std::string>(toks).subspan(3));
            } else if (k == "adapter") {
                // Category adapters are resolved by the run configuration loader.
            } else {
                throw ParseError("unknown key '" + k + "'");
            }
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        } catch (const std::exception& e) {
            throw ParseError("line " + std::to_string(lineno) + ": bad value for '" + k + "': " + e.what());
        }
    }
    if (!format_seen || !vocab) throw ParseError("toy model file needs 'format' and 'vocab' lines");
    return ToyTransformer(std::move(*vocab), cfg);
}

ToyTransformer load_toy(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open toy model '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_toy(ss.str());
}

}  // namespace cwcd
