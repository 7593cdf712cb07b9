#include "prldpc/channel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace prldpc {

PrTarget::PrTarget(std::vector<double> coeffs) : coeffs_(std::move(coeffs))
{
    if (coeffs_.empty())
        throw std::invalid_argument("PR target needs at least one coefficient");
    if (coeffs_.front() != 1.0)
        throw std::invalid_argument("PR target must be normalized so that h_0 = 1");
    if (coeffs_.size() > 1 && coeffs_.back() == 0.0)
        throw std::invalid_argument("PR target: leading coefficient h_L must be nonzero");
    for (double c : coeffs_)
        if (!std::isfinite(c))
            throw std::invalid_argument("PR target: non-finite coefficient");
}

namespace {

std::string strip(std::string_view s)
{
    std::string out;
    for (char ch : s)
        if (ch != ' ' && ch != '\t' && ch != '*')
            out.push_back(ch);
    return out;
}

double parse_number(std::string_view s, std::string_view whole)
{
    double v = 0.0;
    const auto *end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw std::invalid_argument("cannot parse PR target '" + std::string(whole) + "'");
    return v;
}

} // namespace

PrTarget PrTarget::parse(std::string_view text)
{
    const bool polynomial = text.find('D') != std::string_view::npos || text.find('d') != std::string_view::npos;
    if (!polynomial) {
        std::string list(text);
        std::replace(list.begin(), list.end(), ',', ' ');
        std::istringstream ss(list);
        std::vector<double> coeffs;
        std::string tok;
        while (ss >> tok)
            coeffs.push_back(parse_number(tok, text));
        return PrTarget(std::move(coeffs));
    }

    const std::string s = strip(text);
    std::vector<double> coeffs;
    std::size_t pos = 0;
    while (pos < s.size()) {
        double sign = 1.0;
        if (s[pos] == '+' || s[pos] == '-') {
            sign = s[pos] == '-' ? -1.0 : 1.0;
            ++pos;
        }
        std::size_t end = pos;
        while (end < s.size() && s[end] != '+' && s[end] != '-')
            ++end;
        const std::string term = s.substr(pos, end - pos);
        if (term.empty())
            throw std::invalid_argument("cannot parse PR target '" + std::string(text) + "'");
        const auto dpos = term.find_first_of("Dd");
        double coef = 1.0;
        std::size_t power = 0;
        if (dpos == std::string::npos) {
            coef = parse_number(term, text);
        } else {
            if (dpos > 0)
                coef = parse_number(std::string_view(term).substr(0, dpos), text);
            power = 1;
            if (dpos + 1 < term.size()) {
                if (term[dpos + 1] != '^')
                    throw std::invalid_argument("cannot parse PR target '" + std::string(text) + "'");
                power = static_cast<std::size_t>(parse_number(std::string_view(term).substr(dpos + 2), text));
            }
        }
        if (coeffs.size() <= power)
            coeffs.resize(power + 1, 0.0);
        coeffs[power] += sign * coef;
        pos = end;
    }
    return PrTarget(std::move(coeffs));
}

double PrTarget::energy() const noexcept
{
    return std::inner_product(coeffs_.begin(), coeffs_.end(), coeffs_.begin(), 0.0);
}

double PrTarget::autocorrelation(std::size_t lag) const
{
    double acc = 0.0;
    for (std::size_t k = 0; k + lag <= isi_len(); ++k)
        acc += coeffs_[k] * coeffs_[k + lag];
    return acc;
}

std::vector<std::size_t> PrTarget::pairwise_lags() const
{
    std::vector<std::size_t> lags;
    for (std::size_t p = 1; p <= isi_len(); ++p)
        if (autocorrelation(p) != 0.0)
            lags.push_back(p);
    return lags;
}

bool PrTarget::is_bp_exact() const
{
    if (isi_len() == 0)
        return true;
    for (std::size_t j = 1; j < isi_len(); ++j)
        if (coeffs_[j] != 0.0)
            return false;
    return std::abs(coeffs_.back()) <= 1.0;
}

std::string PrTarget::to_string() const
{
    std::string out = "1";
    char buf[64];
    for (std::size_t j = 1; j < coeffs_.size(); ++j) {
        const double c = coeffs_[j];
        if (c == 0.0)
            continue;
        out += c < 0 ? "-" : "+";
        if (std::abs(c) != 1.0) {
            std::snprintf(buf, sizeof buf, "%g", std::abs(c));
            out += buf;
        }
        out += "D";
        if (j > 1)
            out += "^" + std::to_string(j);
    }
    return out;
}

std::string_view to_string(Convention c)
{
    return c == Convention::paper ? "paper" : "exact";
}

Convention parse_convention(std::string_view text)
{
    if (text == "paper")
        return Convention::paper;
    if (text == "exact")
        return Convention::exact;
    throw std::invalid_argument("unknown convention '" + std::string(text) + "' (expected paper|exact)");
}

NoiseSpec NoiseSpec::from_snr_db(const PrTarget &target, double snr_db)
{
    if (!std::isfinite(snr_db))
        throw std::invalid_argument("SNR must be finite");
    NoiseSpec n;
    n.snr_linear = std::pow(10.0, snr_db / 10.0);
    n.sigma2 = target.energy() / n.snr_linear;
    if (!(n.sigma2 > 0.0) || !std::isfinite(n.sigma2))
        throw std::invalid_argument("SNR out of representable range");
    return n;
}

double NoiseSpec::sigma() const { return std::sqrt(sigma2); }

double snr_to_sigma2(const PrTarget &target, double snr_db)
{
    return NoiseSpec::from_snr_db(target, snr_db).sigma2;
}

double apply_rate_penalty(double snr_plot_db, double rate)
{
    if (!(rate > 0.0 && rate <= 1.0))
        throw std::invalid_argument("code rate must lie in (0, 1]");
    return snr_plot_db + 10.0 * std::log10(rate);
}

double precision_coefficient(const PrTarget &, const NoiseSpec &noise, Convention conv)
{
    return conv == Convention::paper ? noise.snr_linear : 1.0 / noise.sigma2;
}

namespace {

double noiseless_output(std::span<const std::int8_t> x, const PrTarget &target, std::int8_t pad, std::size_t m)
{
    // m is 0-based output index; x_{m-j} falls in padding when outside [0, N)
    double acc = 0.0;
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    for (std::size_t j = 0; j <= target.isi_len(); ++j) {
        const auto idx = static_cast<std::ptrdiff_t>(m) - static_cast<std::ptrdiff_t>(j);
        const double sym = (idx >= 0 && idx < n) ? x[static_cast<std::size_t>(idx)] : pad;
        acc += target.h(j) * sym;
    }
    return acc;
}

} // namespace

std::vector<double> transmit_noiseless(std::span<const std::int8_t> x, const PrTarget &target, std::int8_t pad)
{
    std::vector<double> y(x.size() + target.isi_len());
    for (std::size_t m = 0; m < y.size(); ++m)
        y[m] = noiseless_output(x, target, pad, m);
    return y;
}

std::vector<double> transmit(std::span<const std::int8_t> x, const PrTarget &target, const NoiseSpec &noise,
                             CounterRng &rng, std::int8_t pad)
{
    auto y = transmit_noiseless(x, target, pad);
    const double sigma = noise.sigma();
    for (auto &v : y)
        v += sigma * rng.gaussian();
    return y;
}

ChannelCouplings couplings_with_precision(std::span<const double> y, const PrTarget &target, double c,
                                          std::int8_t pad)
{
    const std::size_t l = target.isi_len();
    if (y.size() < l)
        throw std::invalid_argument("compute_couplings: fewer observations than the ISI length");
    const std::size_t n = y.size() - l;

    ChannelCouplings out;
    out.precision = c;
    out.q.resize(l);
    for (std::size_t p = 1; p <= l; ++p)
        out.q[p - 1] = c * target.autocorrelation(p);

    out.u.assign(n, 0.0);
    out.boundary.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= l; ++j)
            acc += target.h(j) * y[i + j];
        out.u[i] = c * acc;
    }
    // Pairs (i, a) with a in the known padding contribute -Q_p x_i pad.
    for (std::size_t i = 0; i < n; ++i) {
        double b = 0.0;
        for (std::size_t p = 1; p <= l; ++p) {
            if (i < p)
                b -= out.q[p - 1] * pad;
            if (i + p >= n)
                b -= out.q[p - 1] * pad;
        }
        out.boundary[i] = b;
        out.u[i] += b;
    }
    return out;
}

ChannelCouplings compute_couplings(std::span<const double> y, const PrTarget &target, const NoiseSpec &noise,
                                   std::int8_t pad, Convention conv)
{
    return couplings_with_precision(y, target, precision_coefficient(target, noise, conv), pad);
}

double log_likelihood(std::span<const double> y, std::span<const std::int8_t> x, const PrTarget &target, double c,
                      std::int8_t pad)
{
    if (y.size() != x.size() + target.isi_len())
        throw std::invalid_argument("log_likelihood: observation length must be N + L");
    double acc = 0.0;
    for (std::size_t m = 0; m < y.size(); ++m) {
        const double r = y[m] - noiseless_output(x, target, pad, m);
        acc += r * r;
    }
    return -0.5 * c * acc;
}

ExpansionCheck verify_expansion(std::span<const std::int8_t> x, std::span<const double> y, const PrTarget &target,
                                const NoiseSpec &noise, std::int8_t pad, Convention conv)
{
    const std::size_t n = x.size();
    if (n > kMaxExpansionBits)
        throw std::invalid_argument("verify_expansion: N = " + std::to_string(n) + " exceeds " +
                                    std::to_string(kMaxExpansionBits));
    if (y.size() != n + target.isi_len())
        throw std::invalid_argument("verify_expansion: observation length must be N + L");

    const double c = precision_coefficient(target, noise, conv);
    const auto cp = couplings_with_precision(y, target, c, pad);

    auto model = [&](std::span<const std::int8_t> z) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += cp.u[i] * z[i];
            for (std::size_t p = 1; p <= target.isi_len() && i + p < n; ++p)
                acc -= cp.q[p - 1] * z[i] * z[i + p];
        }
        return acc;
    };

    const std::uint64_t count = std::uint64_t{1} << n;
    std::vector<double> diff(count);
    std::vector<std::int8_t> z(n);
    double mean = 0.0;
    for (std::uint64_t cfg = 0; cfg < count; ++cfg) {
        for (std::size_t i = 0; i < n; ++i)
            z[i] = ((cfg >> i) & 1U) ? -1 : 1;
        diff[cfg] = log_likelihood(y, z, target, c, pad) - model(z);
        mean += diff[cfg];
    }
    mean /= static_cast<double>(count);

    ExpansionCheck out;
    out.constant = mean;
    for (double d : diff)
        out.max_residual = std::max(out.max_residual, std::abs(d - mean));
    out.residual = std::abs(log_likelihood(y, x, target, c, pad) - model(x) - mean);
    return out;
}

} // namespace prldpc
