#include "prldpc/baseline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace prldpc {

SumProductDecoder::SumProductDecoder(const ParityCheckMatrix &h) : h_(h)
{
    row_offset_.assign(h_.n_checks() + 1, 0);
    for (std::size_t j = 0; j < h_.n_checks(); ++j)
        row_offset_[j + 1] = row_offset_[j] + static_cast<std::uint32_t>(h_.check_degree(j));

    // var_cols is sorted by check index, so scanning rows in order yields each
    // variable's edges in check order.
    std::vector<std::vector<std::uint32_t>> per_var(h_.n_vars());
    for (std::size_t j = 0; j < h_.n_checks(); ++j) {
        const auto row = h_.row(j);
        for (std::size_t k = 0; k < row.size(); ++k)
            per_var[row[k]].push_back(row_offset_[j] + static_cast<std::uint32_t>(k));
    }
    var_offset_.assign(h_.n_vars() + 1, 0);
    for (std::size_t i = 0; i < h_.n_vars(); ++i) {
        var_offset_[i + 1] = var_offset_[i] + static_cast<std::uint32_t>(per_var[i].size());
        var_edges_.insert(var_edges_.end(), per_var[i].begin(), per_var[i].end());
    }
    reset();
}

void SumProductDecoder::reset()
{
    mu_.assign(h_.n_edges(), 0.0);
    eta_.assign(h_.n_edges(), 0.0);
    iteration_ = 0;
}

void SumProductDecoder::iterate(std::span<const double> llr, OpCounter *ops)
{
    if (llr.size() != h_.n_vars())
        throw std::invalid_argument("SumProductDecoder::iterate: input length does not match the code");

    if (ops) {
        if (ops->n_symbols() != h_.n_vars())
            ops->reset(h_.n_vars());
        const std::vector<double> old_eta = eta_;
        std::vector<std::uint32_t> edge_check(h_.n_edges());
        for (std::size_t j = 0; j < h_.n_checks(); ++j)
            for (auto e = row_offset_[j]; e < row_offset_[j + 1]; ++e)
                edge_check[e] = static_cast<std::uint32_t>(j);

        auto fresh_mu = [&](std::uint32_t b, std::size_t sym) {
            const auto j = edge_check[b];
            bool first = true;
            TanhProduct prod;
            for (auto o = row_offset_[j]; o < row_offset_[j + 1]; ++o) {
                if (o == b)
                    continue;
                prod.fold(tanh_factor(old_eta[o]));
                if (!first)
                    ops->mul(sym);
                first = false;
            }
            return prod.atanh();
        };

        for (std::size_t i = 0; i < h_.n_vars(); ++i) {
            for (auto a = var_offset_[i]; a < var_offset_[i + 1]; ++a) {
                double sum = 0.0;
                bool any = false;
                for (auto b = var_offset_[i]; b < var_offset_[i + 1]; ++b) {
                    if (b == a)
                        continue;
                    const double m = fresh_mu(var_edges_[b], i);
                    if (any) {
                        sum += m;
                        ops->add(i);
                    } else {
                        sum = m;
                        any = true;
                    }
                }
                double acc = llr[i];
                if (any) {
                    acc += sum;
                    ops->add(i);
                }
                eta_[var_edges_[a]] = acc;
            }
        }
    } else {
        for (std::size_t i = 0; i < h_.n_vars(); ++i) {
            for (auto a = var_offset_[i]; a < var_offset_[i + 1]; ++a) {
                double sum = 0.0;
                bool any = false;
                for (auto b = var_offset_[i]; b < var_offset_[i + 1]; ++b) {
                    if (b == a)
                        continue;
                    sum = any ? sum + mu_[var_edges_[b]] : mu_[var_edges_[b]];
                    any = true;
                }
                double acc = llr[i];
                if (any)
                    acc += sum;
                eta_[var_edges_[a]] = acc;
            }
        }
    }

    tanh_.resize(eta_.size());
    for (std::size_t e = 0; e < eta_.size(); ++e)
        tanh_[e] = tanh_factor(eta_[e]);
    for (std::size_t j = 0; j < h_.n_checks(); ++j) {
        for (auto e = row_offset_[j]; e < row_offset_[j + 1]; ++e) {
            TanhProduct prod;
            for (auto o = row_offset_[j]; o < row_offset_[j + 1]; ++o)
                if (o != e)
                    prod.fold(tanh_[o]);
            mu_[e] = prod.atanh();
        }
    }
    ++iteration_;
}

std::vector<double> SumProductDecoder::posterior(std::span<const double> llr) const
{
    std::vector<double> out(h_.n_vars());
    for (std::size_t i = 0; i < h_.n_vars(); ++i) {
        double acc = llr[i];
        for (auto a = var_offset_[i]; a < var_offset_[i + 1]; ++a)
            acc += mu_[var_edges_[a]];
        out[i] = acc;
    }
    return out;
}

std::vector<double> SumProductDecoder::extrinsic() const
{
    std::vector<double> out(h_.n_vars(), 0.0);
    for (std::size_t i = 0; i < h_.n_vars(); ++i) {
        for (auto a = var_offset_[i]; a < var_offset_[i + 1]; ++a)
            out[i] = a == var_offset_[i] ? mu_[var_edges_[a]] : out[i] + mu_[var_edges_[a]];
    }
    return out;
}

DecodeResult sum_product_decode(const ParityCheckMatrix &h, std::span<const double> llr, const SumProductOptions &opt)
{
    if (opt.max_iter == 0)
        throw std::invalid_argument("sum_product_decode: max_iter must be at least 1");
    SumProductDecoder dec(h);
    DecodeResult res;
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        dec.iterate(llr, opt.ops);
        res.lambdas = dec.posterior(llr);
        res.hard_bits = hard_decision(res.lambdas);
        res.converged = is_codeword(h, res.hard_bits);
        res.iterations_used = it;
        if (opt.on_iteration)
            opt.on_iteration(it, res.lambdas);
        if (res.converged && opt.early_stop)
            break;
    }
    return res;
}

OpCount sum_product_iteration_cost(const ParityCheckMatrix &h)
{
    OpCount total;
    for (std::size_t i = 0; i < h.n_vars(); ++i) {
        const auto checks = h.col(i);
        const std::uint64_t q = checks.size();
        for (std::size_t a = 0; a < checks.size(); ++a) {
            for (std::size_t b = 0; b < checks.size(); ++b)
                if (b != a) {
                    const std::uint64_t p = h.check_degree(checks[b]);
                    total.mults += p > 2 ? p - 2 : 0;
                }
            total.adds += q > 1 ? q - 1 : 0;
        }
    }
    return total;
}

Trellis::Trellis(PrTarget target) : target_(std::move(target)), mask_(n_states() - 1)
{
    if (target_.isi_len() > 16)
        throw std::invalid_argument("Trellis: ISI length above 16 is not supported");
}

std::size_t Trellis::next_state(std::size_t state, std::uint8_t bit) const
{
    return ((state << 1) | (bit & 1U)) & mask_;
}

double Trellis::output(std::size_t state, std::uint8_t bit) const
{
    double out = bit ? -target_.h(0) : target_.h(0);
    for (std::size_t j = 1; j <= target_.isi_len(); ++j)
        out += ((state >> (j - 1)) & 1U) ? -target_.h(j) : target_.h(j);
    return out;
}

std::size_t Trellis::pad_state(std::int8_t pad) const { return pad > 0 ? 0 : mask_; }

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b)
{
    if (a == kNegInf)
        return b;
    if (b == kNegInf)
        return a;
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

std::size_t free_steps(const Trellis &t, std::span<const double> y, std::span<const double> priors)
{
    const std::size_t l = t.target().isi_len();
    if (y.size() < l)
        throw std::invalid_argument("bcjr: observation shorter than the ISI length");
    const std::size_t n = y.size() - l;
    if (!priors.empty() && priors.size() != n)
        throw std::invalid_argument("bcjr: prior length does not match the block");
    return n;
}

} // namespace

BcjrOutput bcjr(const Trellis &trellis, std::span<const double> y, std::span<const double> priors, double c,
                std::int8_t pad)
{
    const std::size_t n = free_steps(trellis, y, priors);
    const std::size_t steps = y.size();
    const std::size_t ns = trellis.n_states();
    const std::uint8_t pad_bit = pad > 0 ? 0 : 1;

    auto gamma = [&](std::size_t m, std::size_t s, std::uint8_t b) {
        const double d = y[m] - trellis.output(s, b);
        double g = -0.5 * c * d * d;
        if (m < n && !priors.empty())
            g += b ? -priors[m] : priors[m];
        return g;
    };
    auto allowed = [&](std::size_t m, std::uint8_t b) { return m < n || b == pad_bit; };

    std::vector<double> alpha((steps + 1) * ns, kNegInf), beta((steps + 1) * ns, kNegInf);
    alpha[trellis.pad_state(pad)] = 0.0;
    for (std::size_t m = 0; m < steps; ++m) {
        const double *a = &alpha[m * ns];
        double *next = &alpha[(m + 1) * ns];
        for (std::size_t s = 0; s < ns; ++s) {
            if (a[s] == kNegInf)
                continue;
            for (std::uint8_t b = 0; b < 2; ++b)
                if (allowed(m, b)) {
                    auto &dst = next[trellis.next_state(s, b)];
                    dst = log_add(dst, a[s] + gamma(m, s, b));
                }
        }
        const double top = *std::max_element(next, next + ns);
        for (std::size_t s = 0; s < ns; ++s)
            next[s] -= top;
    }
    beta[steps * ns + trellis.pad_state(pad)] = 0.0;
    for (std::size_t m = steps; m-- > 0;) {
        const double *nb = &beta[(m + 1) * ns];
        double *cur = &beta[m * ns];
        for (std::size_t s = 0; s < ns; ++s)
            for (std::uint8_t b = 0; b < 2; ++b)
                if (allowed(m, b)) {
                    const double v = nb[trellis.next_state(s, b)];
                    if (v != kNegInf)
                        cur[s] = log_add(cur[s], gamma(m, s, b) + v);
                }
        const double top = *std::max_element(cur, cur + ns);
        if (top != kNegInf)
            for (std::size_t s = 0; s < ns; ++s)
                cur[s] -= top;
    }

    BcjrOutput out;
    out.posterior.resize(n);
    out.extrinsic.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
        double lse[2] = {kNegInf, kNegInf};
        for (std::size_t s = 0; s < ns; ++s) {
            const double a = alpha[m * ns + s];
            if (a == kNegInf)
                continue;
            for (std::uint8_t b = 0; b < 2; ++b) {
                const double v = beta[(m + 1) * ns + trellis.next_state(s, b)];
                if (v != kNegInf)
                    lse[b] = log_add(lse[b], a + gamma(m, s, b) + v);
            }
        }
        out.posterior[m] = 0.5 * (lse[0] - lse[1]);
        out.extrinsic[m] = priors.empty() ? out.posterior[m] : out.posterior[m] - priors[m];
    }
    return out;
}

BcjrOutput bcjr_counted(const Trellis &trellis, std::span<const double> y, std::span<const double> priors, double c,
                        std::int8_t pad, OpCounter &ops)
{
    const std::size_t n = free_steps(trellis, y, priors);
    const std::size_t steps = y.size();
    const std::size_t ns = trellis.n_states();
    const std::size_t nb = 2 * ns;
    const std::uint8_t pad_bit = pad > 0 ? 0 : 1;
    if (ops.n_symbols() != n)
        ops.reset(n);

    OpCount tail;
    auto mul = [&](std::size_t m, std::uint64_t k = 1) {
        if (m < n)
            ops.mul(m, k);
        else
            tail.mults += k;
    };
    auto add = [&](std::size_t m, std::uint64_t k = 1) {
        if (m < n)
            ops.add(m, k);
        else
            tail.adds += k;
    };
    auto allowed = [&](std::size_t m, std::uint8_t b) { return m < n || b == pad_bit; };

    // Branch metrics. The channel likelihood is the initial likelihood and the
    // prior probability a table lookup; only their product is counted.
    std::vector<double> gamma(steps * nb, 0.0);
    for (std::size_t m = 0; m < steps; ++m) {
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < ns; ++s)
            for (std::uint8_t b = 0; b < 2; ++b) {
                const double d = y[m] - trellis.output(s, b);
                dmin = std::min(dmin, d * d);
            }
        for (std::size_t s = 0; s < ns; ++s)
            for (std::uint8_t b = 0; b < 2; ++b) {
                if (!allowed(m, b))
                    continue;
                const double d = y[m] - trellis.output(s, b);
                const double chan = std::exp(-0.5 * c * (d * d - dmin));
                if (m < n) {
                    const double f = priors.empty() ? 0.0 : priors[m];
                    const double pr = 1.0 / (1.0 + std::exp(b ? 2.0 * f : -2.0 * f));
                    gamma[m * nb + 2 * s + b] = chan * pr;
                    mul(m);
                } else {
                    gamma[m * nb + 2 * s + b] = chan;
                }
            }
    }

    // Forward pass; alpha * gamma products are kept for the a-posteriori step.
    std::vector<double> alpha((steps + 1) * ns, 0.0), prod(steps * nb, 0.0);
    alpha[trellis.pad_state(pad)] = 1.0;
    std::vector<std::uint8_t> seen(ns);
    for (std::size_t m = 0; m < steps; ++m) {
        double *next = &alpha[(m + 1) * ns];
        std::fill(seen.begin(), seen.end(), 0);
        for (std::size_t s = 0; s < ns; ++s)
            for (std::uint8_t b = 0; b < 2; ++b) {
                if (!allowed(m, b))
                    continue;
                const double v = alpha[m * ns + s] * gamma[m * nb + 2 * s + b];
                mul(m);
                prod[m * nb + 2 * s + b] = v;
                const auto t = trellis.next_state(s, b);
                if (seen[t]) {
                    next[t] += v;
                    add(m);
                } else {
                    next[t] = v;
                    seen[t] = 1;
                }
            }
        double total = next[0];
        for (std::size_t s = 1; s < ns; ++s) {
            total += next[s];
            add(m);
        }
        for (std::size_t s = 0; s < ns; ++s) {
            next[s] /= total;
            mul(m);
        }
    }

    // Backward pass, rescaled by powers of two.
    std::vector<double> beta((steps + 1) * ns, 0.0);
    beta[steps * ns + trellis.pad_state(pad)] = 1.0;
    for (std::size_t m = steps; m-- > 0;) {
        double *cur = &beta[m * ns];
        const double *nxt = &beta[(m + 1) * ns];
        for (std::size_t s = 0; s < ns; ++s) {
            bool first = true;
            for (std::uint8_t b = 0; b < 2; ++b) {
                if (!allowed(m, b))
                    continue;
                const double v = gamma[m * nb + 2 * s + b] * nxt[trellis.next_state(s, b)];
                mul(m);
                if (first) {
                    cur[s] = v;
                    first = false;
                } else {
                    cur[s] += v;
                    add(m);
                }
            }
        }
        const double top = *std::max_element(cur, cur + ns);
        if (top > 0.0) {
            int e = 0;
            std::frexp(top, &e);
            for (std::size_t s = 0; s < ns; ++s)
                cur[s] = std::ldexp(cur[s], -e);
        }
    }

    BcjrOutput out;
    out.posterior.resize(n);
    out.extrinsic.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
        double app[2] = {0.0, 0.0};
        bool first[2] = {true, true};
        for (std::size_t s = 0; s < ns; ++s)
            for (std::uint8_t b = 0; b < 2; ++b) {
                const double v = prod[m * nb + 2 * s + b] * beta[(m + 1) * ns + trellis.next_state(s, b)];
                mul(m);
                if (first[b]) {
                    app[b] = v;
                    first[b] = false;
                } else {
                    app[b] += v;
                    add(m);
                }
            }
        // half-log lookups, then their difference
        out.posterior[m] = 0.5 * std::log(app[0]) - 0.5 * std::log(app[1]);
        add(m);
        out.extrinsic[m] = out.posterior[m] - (priors.empty() ? 0.0 : priors[m]);
        add(m);
    }
    ops.overhead(tail);
    return out;
}

TurboSchedule TurboSchedule::parse(std::string_view text)
{
    const auto x = text.find_first_of("xX");
    if (x == std::string_view::npos)
        throw std::invalid_argument("turbo schedule must look like TxS, e.g. 3x6");
    auto number = [&](std::string_view part) {
        std::size_t v = 0;
        const auto *end = part.data() + part.size();
        const auto [ptr, ec] = std::from_chars(part.data(), end, v);
        if (ec != std::errc{} || ptr != end || part.empty())
            throw std::invalid_argument("turbo schedule must look like TxS, e.g. 3x6");
        return v;
    };
    TurboSchedule s{number(text.substr(0, x)), number(text.substr(x + 1))};
    if (s.outer == 0)
        throw std::invalid_argument("turbo schedule needs at least one outer iteration");
    return s;
}

std::string TurboSchedule::to_string() const { return std::to_string(outer) + "x" + std::to_string(inner); }

DecodeResult turbo_equalize(const ParityCheckMatrix &h, const Trellis &trellis, std::span<const double> y, double c,
                            std::int8_t pad, const TurboOptions &opt)
{
    if (opt.schedule.outer == 0)
        throw std::invalid_argument("turbo_equalize: schedule needs at least one outer iteration");
    const std::size_t n = h.n_vars();
    if (y.size() != n + trellis.target().isi_len())
        throw std::invalid_argument("turbo_equalize: observation length must be N + L");

    SumProductDecoder dec(h);
    std::vector<double> priors(n, 0.0);
    DecodeResult res;
    auto finish = [&](const std::vector<double> &lambda) {
        res.lambdas = lambda;
        res.hard_bits = hard_decision(res.lambdas);
        res.converged = is_codeword(h, res.hard_bits);
        res.iterations_used = res.detector_passes + res.inner_iterations;
        return res.converged && opt.early_stop;
    };

    for (std::size_t t = 0; t < opt.schedule.outer; ++t) {
        const auto det = opt.ops ? bcjr_counted(trellis, y, priors, c, pad, *opt.ops) : bcjr(trellis, y, priors, c, pad);
        ++res.detector_passes;
        if (opt.schedule.inner == 0) {
            if (finish(det.posterior))
                return res;
            continue;
        }
        for (std::size_t s = 0; s < opt.schedule.inner; ++s) {
            dec.iterate(det.extrinsic, opt.ops);
            ++res.inner_iterations;
            if (finish(dec.posterior(det.extrinsic)))
                return res;
        }
        priors = dec.extrinsic();
    }
    return res;
}

} // namespace prldpc
