#include "rulf/tape.hpp"

#include <cmath>
#include <limits>

#include "rulf/error.hpp"

namespace rulf {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_finite(const Tensor& t, const char* what) {
    double acc = 0.0;
    const double* p = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) acc += std::fabs(p[i]);
    if (!std::isfinite(acc))
        raise(ErrorCode::NonFiniteActivation, std::string(what) + " produced a non-finite value");
}

void require(bool ok, const std::string& msg) {
    if (!ok) raise(ErrorCode::ShapeMismatch, msg);
}

} // namespace

std::size_t Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
}

ValueRef Tape::input(Tensor value) {
    Node n;
    n.owned = std::move(value);
    n.is_leaf = true;
    return {push(std::move(n))};
}

ValueRef Tape::param(const Tensor& external) {
    Node n;
    n.borrowed = &external;
    n.is_leaf = true;
    return {push(std::move(n))};
}

const Tensor& Tape::value(ValueRef ref) const { return nodes_[ref.index].val(); }

const Tensor& Tape::grad(ValueRef ref) const {
    static const Tensor empty;
    if (ref.index >= grads_.size()) return empty;
    return grads_[ref.index];
}

Tensor& Tape::grad_buffer(std::size_t idx, const std::vector<std::size_t>& shape) {
    if (grads_[idx].size() == 0) grads_[idx] = Tensor(shape);
    return grads_[idx];
}

// ---------------------------------------------------------------- conv1d ---

ValueRef Tape::conv1d(ValueRef xr, ValueRef wr, ValueRef br, Activation act) {
    const Tensor& x = value(xr);
    const Tensor& w = value(wr);
    const Tensor& b = value(br);
    require(x.rank() == 2, "conv1d input must be rank 2, got " + x.shape_string());
    require(w.rank() == 3, "conv1d kernel must be rank 3, got " + w.shape_string());
    const std::size_t L = x.dim(0), Cin = x.dim(1);
    const std::size_t K = w.dim(0), Cout = w.dim(2);
    require(w.dim(1) == Cin, "conv1d kernel channels " + std::to_string(w.dim(1)) +
                                 " do not match input channels " + std::to_string(Cin));
    require(b.rank() == 1 && b.dim(0) == Cout, "conv1d bias must have one entry per filter");
    require(L >= K, "conv1d input length " + std::to_string(L) + " shorter than kernel " +
                        std::to_string(K));
    const std::size_t Lo = L - K + 1;

    Tensor out({Lo, Cout});
    const double* xp = x.data();
    const double* wp = w.data();
    const double* bp = b.data();
    double* op = out.data();
    for (std::size_t t = 0; t < Lo; ++t) {
        double* orow = op + t * Cout;
        for (std::size_t o = 0; o < Cout; ++o) orow[o] = bp[o];
        for (std::size_t k = 0; k < K; ++k) {
            const double* xrow = xp + (t + k) * Cin;
            const double* wk = wp + k * Cin * Cout;
            for (std::size_t c = 0; c < Cin; ++c) {
                const double a = xrow[c];
                const double* wrow = wk + c * Cout;
                for (std::size_t o = 0; o < Cout; ++o) orow[o] += a * wrow[o];
            }
        }
    }
    if (act == Activation::Relu)
        for (std::size_t i = 0; i < out.size(); ++i)
            if (op[i] < 0.0) op[i] = 0.0;
    check_finite(out, "conv1d");

    Node n;
    n.owned = std::move(out);
    n.parents = {xr.index, wr.index, br.index};
    n.back = [L, Cin, K, Cout, Lo, act](Tape& t, std::size_t self) {
        const Tensor& g = t.grads_[self];
        const Tensor& out = t.nodes_[self].val();
        const Tensor& x = t.nodes_[t.nodes_[self].parents[0]].val();
        const Tensor& w = t.nodes_[t.nodes_[self].parents[1]].val();

        Tensor dz = g;
        if (act == Activation::Relu) {
            double* dzp = dz.data();
            const double* op = out.data();
            for (std::size_t i = 0; i < dz.size(); ++i)
                if (op[i] <= 0.0) dzp[i] = 0.0;
        }
        const double* dzp = dz.data();
        const double* xp = x.data();
        const double* wp = w.data();

        Tensor& db = t.grad_buffer(t.nodes_[self].parents[2], {Cout});
        double* dbp = db.data();
        for (std::size_t tt = 0; tt < Lo; ++tt) {
            const double* dzr = dzp + tt * Cout;
            for (std::size_t o = 0; o < Cout; ++o) dbp[o] += dzr[o];
        }

        Tensor& dw = t.grad_buffer(t.nodes_[self].parents[1], {K, Cin, Cout});
        double* dwp = dw.data();
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t c = 0; c < Cin; ++c) {
                double* dwrow = dwp + (k * Cin + c) * Cout;
                for (std::size_t tt = 0; tt < Lo; ++tt) {
                    const double a = xp[(tt + k) * Cin + c];
                    const double* dzr = dzp + tt * Cout;
                    for (std::size_t o = 0; o < Cout; ++o) dwrow[o] += a * dzr[o];
                }
            }

        Tensor& dx = t.grad_buffer(t.nodes_[self].parents[0], {L, Cin});
        double* dxp = dx.data();
        for (std::size_t tt = 0; tt < Lo; ++tt) {
            const double* dzr = dzp + tt * Cout;
            for (std::size_t k = 0; k < K; ++k) {
                double* dxrow = dxp + (tt + k) * Cin;
                const double* wk = wp + k * Cin * Cout;
                for (std::size_t c = 0; c < Cin; ++c) {
                    const double* wrow = wk + c * Cout;
                    double acc = 0.0;
                    for (std::size_t o = 0; o < Cout; ++o) acc += wrow[o] * dzr[o];
                    dxrow[c] += acc;
                }
            }
        }
    };
    return {push(std::move(n))};
}

// ---------------------------------------------------------------- conv2d ---

ValueRef Tape::conv2d(ValueRef xr, ValueRef wr, ValueRef br, Activation act) {
    const Tensor& x = value(xr);
    const Tensor& w = value(wr);
    const Tensor& b = value(br);
    require(x.rank() == 3, "conv2d input must be rank 3, got " + x.shape_string());
    require(w.rank() == 4, "conv2d kernel must be rank 4, got " + w.shape_string());
    const std::size_t H = x.dim(0), W = x.dim(1), Cin = x.dim(2);
    const std::size_t KH = w.dim(0), KW = w.dim(1), Cout = w.dim(3);
    require(w.dim(2) == Cin, "conv2d kernel channels do not match input channels");
    require(b.rank() == 1 && b.dim(0) == Cout, "conv2d bias must have one entry per filter");
    require(H >= KH && W >= KW, "conv2d input " + x.shape_string() + " smaller than kernel");
    const std::size_t Ho = H - KH + 1, Wo = W - KW + 1;

    Tensor out({Ho, Wo, Cout});
    const double* xp = x.data();
    const double* wp = w.data();
    const double* bp = b.data();
    double* op = out.data();
    for (std::size_t i = 0; i < Ho; ++i)
        for (std::size_t j = 0; j < Wo; ++j) {
            double* orow = op + (i * Wo + j) * Cout;
            for (std::size_t o = 0; o < Cout; ++o) orow[o] = bp[o];
            for (std::size_t ki = 0; ki < KH; ++ki)
                for (std::size_t kj = 0; kj < KW; ++kj) {
                    const double* xrow = xp + ((i + ki) * W + (j + kj)) * Cin;
                    const double* wk = wp + (ki * KW + kj) * Cin * Cout;
                    for (std::size_t c = 0; c < Cin; ++c) {
                        const double a = xrow[c];
                        const double* wrow = wk + c * Cout;
                        for (std::size_t o = 0; o < Cout; ++o) orow[o] += a * wrow[o];
                    }
                }
        }
    if (act == Activation::Relu)
        for (std::size_t i = 0; i < out.size(); ++i)
            if (op[i] < 0.0) op[i] = 0.0;
    check_finite(out, "conv2d");

    Node n;
    n.owned = std::move(out);
    n.parents = {xr.index, wr.index, br.index};
    n.back = [H, W, Cin, KH, KW, Cout, Ho, Wo, act](Tape& t, std::size_t self) {
        const Tensor& g = t.grads_[self];
        const Tensor& out = t.nodes_[self].val();
        const Tensor& x = t.nodes_[t.nodes_[self].parents[0]].val();
        const Tensor& w = t.nodes_[t.nodes_[self].parents[1]].val();

        Tensor dz = g;
        if (act == Activation::Relu) {
            double* dzp = dz.data();
            const double* op = out.data();
            for (std::size_t i = 0; i < dz.size(); ++i)
                if (op[i] <= 0.0) dzp[i] = 0.0;
        }
        const double* dzp = dz.data();
        const double* xp = x.data();
        const double* wp = w.data();

        Tensor& db = t.grad_buffer(t.nodes_[self].parents[2], {Cout});
        double* dbp = db.data();
        for (std::size_t ij = 0; ij < Ho * Wo; ++ij) {
            const double* dzr = dzp + ij * Cout;
            for (std::size_t o = 0; o < Cout; ++o) dbp[o] += dzr[o];
        }

        Tensor& dw = t.grad_buffer(t.nodes_[self].parents[1], {KH, KW, Cin, Cout});
        Tensor& dx = t.grad_buffer(t.nodes_[self].parents[0], {H, W, Cin});
        double* dwp = dw.data();
        double* dxp = dx.data();
        for (std::size_t i = 0; i < Ho; ++i)
            for (std::size_t j = 0; j < Wo; ++j) {
                const double* dzr = dzp + (i * Wo + j) * Cout;
                for (std::size_t ki = 0; ki < KH; ++ki)
                    for (std::size_t kj = 0; kj < KW; ++kj) {
                        const double* xrow = xp + ((i + ki) * W + (j + kj)) * Cin;
                        double* dxrow = dxp + ((i + ki) * W + (j + kj)) * Cin;
                        double* dwk = dwp + (ki * KW + kj) * Cin * Cout;
                        const double* wk = wp + (ki * KW + kj) * Cin * Cout;
                        for (std::size_t c = 0; c < Cin; ++c) {
                            const double a = xrow[c];
                            double* dwrow = dwk + c * Cout;
                            const double* wrow = wk + c * Cout;
                            double acc = 0.0;
                            for (std::size_t o = 0; o < Cout; ++o) {
                                dwrow[o] += a * dzr[o];
                                acc += wrow[o] * dzr[o];
                            }
                            dxrow[c] += acc;
                        }
                    }
            }
    };
    return {push(std::move(n))};
}

// ------------------------------------------------------------------ lstm ---

ValueRef Tape::lstm(ValueRef xr, ValueRef wr, ValueRef ur, ValueRef br) {
    const Tensor& x = value(xr);
    const Tensor& w = value(wr);
    const Tensor& u = value(ur);
    const Tensor& b = value(br);
    require(x.rank() == 2, "lstm input must be rank 2, got " + x.shape_string());
    const std::size_t T = x.dim(0), D = x.dim(1);
    require(u.rank() == 2, "lstm recurrent kernel must be rank 2");
    const std::size_t U = u.dim(0);
    const std::size_t G = 4 * U;
    require(w.rank() == 2 && w.dim(0) == D && w.dim(1) == G,
            "lstm kernel must be {input_dim, 4*units}");
    require(u.dim(1) == G, "lstm recurrent kernel must be {units, 4*units}");
    require(b.rank() == 1 && b.dim(0) == G, "lstm bias must be {4*units}");

    Tensor out({T, U});
    // Per-step cache rows: [i, f, g, o, c, tanh(c)] blocks of U.
    Tensor aux({T, 6 * U});
    std::vector<double> z(G);
    const double* xp = x.data();
    const double* wp = w.data();
    const double* up = u.data();
    const double* bp = b.data();
    double* hp = out.data();
    double* ap = aux.data();

    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < G; ++j) z[j] = bp[j];
        const double* xrow = xp + t * D;
        for (std::size_t d = 0; d < D; ++d) {
            const double a = xrow[d];
            const double* wrow = wp + d * G;
            for (std::size_t j = 0; j < G; ++j) z[j] += a * wrow[j];
        }
        if (t > 0) {
            const double* hprev = hp + (t - 1) * U;
            for (std::size_t q = 0; q < U; ++q) {
                const double a = hprev[q];
                const double* urow = up + q * G;
                for (std::size_t j = 0; j < G; ++j) z[j] += a * urow[j];
            }
        }
        double* row = ap + t * 6 * U;
        double* gi = row;
        double* gf = row + U;
        double* gg = row + 2 * U;
        double* go = row + 3 * U;
        double* gc = row + 4 * U;
        double* gtc = row + 5 * U;
        const double* cprev = (t > 0) ? ap + (t - 1) * 6 * U + 4 * U : nullptr;
        double* hrow = hp + t * U;
        for (std::size_t q = 0; q < U; ++q) {
            gi[q] = sigmoid(z[q]);
            gf[q] = sigmoid(z[U + q]);
            gg[q] = std::tanh(z[2 * U + q]);
            go[q] = sigmoid(z[3 * U + q]);
            const double c = gf[q] * (cprev ? cprev[q] : 0.0) + gi[q] * gg[q];
            gc[q] = c;
            gtc[q] = std::tanh(c);
            hrow[q] = go[q] * gtc[q];
        }
    }
    check_finite(out, "lstm");

    Node n;
    n.owned = std::move(out);
    n.aux = std::move(aux);
    n.parents = {xr.index, wr.index, ur.index, br.index};
    n.back = [T, D, U](Tape& t, std::size_t self) {
        const std::size_t G = 4 * U;
        const Tensor& gh = t.grads_[self];
        const Node& node = t.nodes_[self];
        const Tensor& x = t.nodes_[node.parents[0]].val();
        const Tensor& w = t.nodes_[node.parents[1]].val();
        const Tensor& u = t.nodes_[node.parents[2]].val();
        const Tensor& h = node.val();
        const double* ap = node.aux.data();
        const double* xp = x.data();
        const double* wp = w.data();
        const double* up = u.data();
        const double* hp = h.data();
        const double* ghp = gh.data();

        Tensor& dx = t.grad_buffer(node.parents[0], {T, D});
        Tensor& dw = t.grad_buffer(node.parents[1], {D, G});
        Tensor& du = t.grad_buffer(node.parents[2], {U, G});
        Tensor& db = t.grad_buffer(node.parents[3], {G});
        double* dxp = dx.data();
        double* dwp = dw.data();
        double* dup = du.data();
        double* dbp = db.data();

        std::vector<double> dh(U, 0.0), dc(U, 0.0), dz(G);
        for (std::size_t ti = T; ti-- > 0;) {
            const double* row = ap + ti * 6 * U;
            const double* gi = row;
            const double* gf = row + U;
            const double* gg = row + 2 * U;
            const double* go = row + 3 * U;
            const double* gtc = row + 5 * U;
            const double* cprev = (ti > 0) ? ap + (ti - 1) * 6 * U + 4 * U : nullptr;
            const double* ghr = ghp + ti * U;
            for (std::size_t q = 0; q < U; ++q) {
                const double dht = ghr[q] + dh[q];
                const double dot = dht * gtc[q];
                const double dct = dht * go[q] * (1.0 - gtc[q] * gtc[q]) + dc[q];
                const double dft = dct * (cprev ? cprev[q] : 0.0);
                const double dit = dct * gg[q];
                const double dgt = dct * gi[q];
                dc[q] = dct * gf[q];
                dz[q] = dit * gi[q] * (1.0 - gi[q]);
                dz[U + q] = dft * gf[q] * (1.0 - gf[q]);
                dz[2 * U + q] = dgt * (1.0 - gg[q] * gg[q]);
                dz[3 * U + q] = dot * go[q] * (1.0 - go[q]);
            }
            for (std::size_t j = 0; j < G; ++j) dbp[j] += dz[j];
            const double* xrow = xp + ti * D;
            for (std::size_t d = 0; d < D; ++d) {
                const double a = xrow[d];
                double* dwrow = dwp + d * G;
                const double* wrow = wp + d * G;
                double acc = 0.0;
                for (std::size_t j = 0; j < G; ++j) {
                    dwrow[j] += a * dz[j];
                    acc += wrow[j] * dz[j];
                }
                dxp[ti * D + d] = acc;
            }
            if (ti > 0) {
                const double* hprev = hp + (ti - 1) * U;
                for (std::size_t q = 0; q < U; ++q) {
                    const double a = hprev[q];
                    double* durow = dup + q * G;
                    const double* urow = up + q * G;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < G; ++j) {
                        durow[j] += a * dz[j];
                        acc += urow[j] * dz[j];
                    }
                    dh[q] = acc;
                }
            }
        }
    };
    return {push(std::move(n))};
}

// --------------------------------------------------------- dot attention ---

ValueRef Tape::dot_attention(ValueRef hr, double scale) {
    const Tensor& h = value(hr);
    require(h.rank() == 2, "attention input must be rank 2, got " + h.shape_string());
    const std::size_t T = h.dim(0), U = h.dim(1);

    Tensor weights({T, T});
    Tensor out({T, U});
    const double* hp = h.data();
    double* ap = weights.data();
    double* op = out.data();
    std::vector<double> s(T);
    for (std::size_t p = 0; p < T; ++p) {
        const double* hrow = hp + p * U;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < T; ++q) {
            const double* hq = hp + q * U;
            double dot = 0.0;
            for (std::size_t k = 0; k < U; ++k) dot += hrow[k] * hq[k];
            s[q] = scale * dot;
            if (s[q] > mx) mx = s[q];
        }
        double sum = 0.0;
        double* arow = ap + p * T;
        for (std::size_t q = 0; q < T; ++q) {
            arow[q] = std::exp(s[q] - mx);
            sum += arow[q];
        }
        double* orow = op + p * U;
        for (std::size_t k = 0; k < U; ++k) orow[k] = 0.0;
        for (std::size_t q = 0; q < T; ++q) {
            arow[q] /= sum;
            const double a = arow[q];
            const double* hq = hp + q * U;
            for (std::size_t k = 0; k < U; ++k) orow[k] += a * hq[k];
        }
    }
    check_finite(out, "dot_attention");

    Node n;
    n.owned = std::move(out);
    n.aux = std::move(weights);
    n.parents = {hr.index};
    n.back = [T, U, scale](Tape& t, std::size_t self) {
        const Tensor& g = t.grads_[self];
        const Node& node = t.nodes_[self];
        const Tensor& h = t.nodes_[node.parents[0]].val();
        const double* ap = node.aux.data();
        const double* hp = h.data();
        const double* gp = g.data();

        Tensor& dh = t.grad_buffer(node.parents[0], {T, U});
        double* dhp = dh.data();

        // Mixing path: dh_q += sum_p a[p,q] g_p.
        for (std::size_t p = 0; p < T; ++p) {
            const double* arow = ap + p * T;
            const double* grow = gp + p * U;
            for (std::size_t q = 0; q < T; ++q) {
                const double a = arow[q];
                double* dhq = dhp + q * U;
                for (std::size_t k = 0; k < U; ++k) dhq[k] += a * grow[k];
            }
        }
        // Score path through the row softmax.
        std::vector<double> da(T), ds(T);
        for (std::size_t p = 0; p < T; ++p) {
            const double* arow = ap + p * T;
            const double* grow = gp + p * U;
            double inner = 0.0;
            for (std::size_t q = 0; q < T; ++q) {
                const double* hq = hp + q * U;
                double dot = 0.0;
                for (std::size_t k = 0; k < U; ++k) dot += grow[k] * hq[k];
                da[q] = dot;
                inner += dot * arow[q];
            }
            for (std::size_t q = 0; q < T; ++q) ds[q] = scale * arow[q] * (da[q] - inner);
            // s[p,q] = scale * h_p . h_q contributes to both rows.
            double* dhprow = dhp + p * U;
            const double* hprow = hp + p * U;
            for (std::size_t q = 0; q < T; ++q) {
                const double d = ds[q];
                const double* hq = hp + q * U;
                double* dhq = dhp + q * U;
                for (std::size_t k = 0; k < U; ++k) {
                    dhprow[k] += d * hq[k];
                    dhq[k] += d * hprow[k];
                }
            }
        }
    };
    return {push(std::move(n))};
}

// -------------------------------------------------------- spatial softmax ---

ValueRef Tape::spatial_softmax(ValueRef mr) {
    const Tensor& m = value(mr);
    require(m.rank() == 3 && m.dim(2) == 1,
            "spatial softmax expects a {H,W,1} map, got " + m.shape_string());
    Tensor out(m.shape());
    const double* mp = m.data();
    double* op = out.data();
    const std::size_t n = m.size();
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (mp[i] > mx) mx = mp[i];
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        op[i] = std::exp(mp[i] - mx);
        sum += op[i];
    }
    for (std::size_t i = 0; i < n; ++i) op[i] /= sum;
    check_finite(out, "spatial_softmax");

    Node nd;
    nd.owned = std::move(out);
    nd.parents = {mr.index};
    nd.back = [](Tape& t, std::size_t self) {
        const Tensor& g = t.grads_[self];
        const Node& node = t.nodes_[self];
        const Tensor& y = node.val();
        Tensor& dm = t.grad_buffer(node.parents[0], y.shape());
        const double* gp = g.data();
        const double* yp = y.data();
        double* dp = dm.data();
        double inner = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) inner += gp[i] * yp[i];
        for (std::size_t i = 0; i < y.size(); ++i) dp[i] += yp[i] * (gp[i] - inner);
    };
    return {push(std::move(nd))};
}

// ----------------------------------------------------- broadcast multiply ---

ValueRef Tape::broadcast_multiply(ValueRef fr, ValueRef wr) {
    const Tensor& f = value(fr);
    const Tensor& w = value(wr);
    require(f.rank() == 3, "broadcast multiply features must be rank 3");
    require(w.rank() == 3 && w.dim(2) == 1, "broadcast multiply weights must be {H,W,1}");
    require(f.dim(0) == w.dim(0) && f.dim(1) == w.dim(1),
            "broadcast multiply spatial shapes differ: " + f.shape_string() + " vs " +
                w.shape_string());
    const std::size_t HW = f.dim(0) * f.dim(1), C = f.dim(2);

    Tensor out(f.shape());
    const double* fp = f.data();
    const double* wp = w.data();
    double* op = out.data();
    for (std::size_t i = 0; i < HW; ++i) {
        const double a = wp[i];
        const double* frow = fp + i * C;
        double* orow = op + i * C;
        for (std::size_t c = 0; c < C; ++c) orow[c] = frow[c] * a;
    }
    check_finite(out, "broadcast_multiply");

    Node n;
    n.owned = std::move(out);
    n.parents = {fr.index, wr.index};
    n.back = [HW, C](Tape& t, std::size_t self) {
        const Tensor& g = t.grads_[self];
        const Node& node = t.nodes_[self];
        const Tensor& f = t.nodes_[node.parents[0]].val();
        const Tensor& w = t.nodes_[node.parents[1]].val();
        Tensor& df = t.grad_buffer(node.parents[0], f.shape());
        Tensor& dw = t.grad_buffer(node.parents[1], w.shape());
        const double* gp = g.data();
        const double* fp = f.data();
        const double* wp = w.data();
        double* dfp = df.data();
        double* dwp = dw.data();
        for (std::size_t i = 0; i < HW; ++i) {
            const double a = wp[i];
            const double* grow = gp + i * C;
            const double* frow = fp + i * C;
            double* dfrow = dfp + i * C;
            double acc = 0.0;
            for (std::size_t c = 0; c < C; ++c) {
                dfrow[c] += grow[c] * a;
                acc += grow[c] * frow[c];
            }
            dwp[i] += acc;
        }
    };
    return {push(std::move(n))};
}

// ----------------------------------------------------------------- dense ---

ValueRef Tape::dense(ValueRef xr, ValueRef wr, ValueRef br) {
    const Tensor& x = value(xr);
    const Tensor& w = value(wr);
    const Tensor& b = value(br);
    require(x.rank() == 1, "dense input must be rank 1 (flatten first), got " + x.shape_string());
    const std::size_t D = x.dim(0);
    require(w.rank() == 2 && w.dim(0) == D,
            "dense kernel must be {" + std::to_string(D) + ",units}, got " + w.shape_string());
    const std::size_t units = w.dim(1);
    require(b.rank() == 1 && b.dim(0) == units, "dense bias must be {units}");

    Tensor out({units});
    const double* xp = x.data();
    const double* wp = w.data();
    double* op = out.data();
    for (std::size_t j = 0; j < units; ++j) op[j] = b[j];
    for (std::size_t d = 0; d < D; ++d) {
        const double a = xp[d];
        const double* wrow = wp + d * units;
        for (std::size_t j = 0; j < units; ++j) op[j] += a * wrow[j];
    }
    check_finite(out, "dense");

    Node n;
    n.owned = std::move(out);
    n.parents = {xr.index, wr.index, br.index};
    n.back = [D, units](Tape& t, std::size_t self) {
        const Tensor& g = t.grads_[self];
        const Node& node = t.nodes_[self];
        const Tensor& x = t.nodes_[node.parents[0]].val();
        const Tensor& w = t.nodes_[node.parents[1]].val();
        Tensor& dx = t.grad_buffer(node.parents[0], {D});
        Tensor& dw = t.grad_buffer(node.parents[1], {D, units});
        Tensor& db = t.grad_buffer(node.parents[2], {units});
        const double* gp = g.data();
        const double* xp = x.data();
        const double* wp = w.data();
        for (std::size_t j = 0; j < units; ++j) db[j] += gp[j];
        for (std::size_t d = 0; d < D; ++d) {
            const double a = xp[d];
            double* dwrow = dw.data() + d * units;
            const double* wrow = wp + d * units;
            double acc = 0.0;
            for (std::size_t j = 0; j < units; ++j) {
                dwrow[j] += a * gp[j];
                acc += wrow[j] * gp[j];
            }
            dx[d] += acc;
        }
    };
    return {push(std::move(n))};
}

// --------------------------------------------------------------- flatten ---

ValueRef Tape::flatten(ValueRef xr) {
    const Tensor& x = value(xr);
    Tensor out = x.reshaped({x.size()});
    Node n;
    n.owned = std::move(out);
    n.parents = {xr.index};
    n.back = [](Tape& t, std::size_t self) {
        const Node& node = t.nodes_[self];
        const Tensor& x = t.nodes_[node.parents[0]].val();
        Tensor& dx = t.grad_buffer(node.parents[0], x.shape());
        const Tensor& g = t.grads_[self];
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    };
    return {push(std::move(n))};
}

// ------------------------------------------------------------------ relu ---

ValueRef Tape::relu(ValueRef xr) {
    const Tensor& x = value(xr);
    Tensor out = x;
    double* op = out.data();
    for (std::size_t i = 0; i < out.size(); ++i)
        if (op[i] < 0.0) op[i] = 0.0;
    check_finite(out, "relu");
    Node n;
    n.owned = std::move(out);
    n.parents = {xr.index};
    n.back = [](Tape& t, std::size_t self) {
        const Node& node = t.nodes_[self];
        const Tensor& out = node.val();
        Tensor& dx = t.grad_buffer(node.parents[0], out.shape());
        const Tensor& g = t.grads_[self];
        for (std::size_t i = 0; i < g.size(); ++i)
            if (out[i] > 0.0) dx[i] += g[i];
    };
    return {push(std::move(n))};
}

// -------------------------------------------------------------- backward ---

void Tape::backward(ValueRef root, const Tensor& seed) {
    const Tensor& rv = value(root);
    if (!seed.same_shape(rv))
        raise(ErrorCode::ShapeMismatch,
              "backward seed " + seed.shape_string() + " does not match root " + rv.shape_string());
    grads_.assign(nodes_.size(), Tensor{});
    grads_[root.index] = seed;
    for (std::size_t i = root.index + 1; i-- > 0;) {
        if (grads_[i].size() == 0) continue;
        if (nodes_[i].back) nodes_[i].back(*this, i);
    }
    // Leaves feed the optimiser; a poisoned gradient must not reach it.
    for (std::size_t i = 0; i <= root.index; ++i) {
        if (!nodes_[i].is_leaf || grads_[i].size() == 0) continue;
        double acc = 0.0;
        const double* p = grads_[i].data();
        for (std::size_t k = 0; k < grads_[i].size(); ++k) acc += std::fabs(p[k]);
        if (!std::isfinite(acc))
            raise(ErrorCode::NonFiniteGradient,
                  "non-finite gradient at leaf node " + std::to_string(i));
    }
}

void Tape::backward(ValueRef root) {
    const Tensor& rv = value(root);
    Tensor seed(rv.shape());
    if (seed.size() != 1)
        raise(ErrorCode::ShapeMismatch, "implicit seed needs a single-element root");
    seed[0] = 1.0;
    backward(root, seed);
}

double rmse(const std::vector<double>& predictions, const std::vector<double>& targets) {
    if (predictions.empty() || predictions.size() != targets.size())
        raise(ErrorCode::EmptyBatch, "rmse needs equally sized, non-empty inputs");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(predictions.size()));
}

} // namespace rulf
