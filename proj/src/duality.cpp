#include "kcm/duality.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kcm/parallel.hpp"
#include "kcm/rng.hpp"
#include "kcm/sim.hpp"
#include "kcm/stats.hpp"

namespace kcm::duality {

namespace {

// Product of per-site factors kept as sign and log-magnitude; (1/lambda)^k overflows for small lambda.
struct SignedLog {
    double log_mag = 0;
    int sign = 1;
    void mul(double f) {
        if (f == 0) {
            sign = 0;
            return;
        }
        if (f < 0) sign = -sign;
        log_mag += std::log(std::abs(f));
    }
    double value() const {
        if (sign == 0) return 0;
        if (log_mag > 700) throw std::overflow_error("duality weight overflows double precision");
        return sign * std::exp(log_mag);
    }
};

bool in_set(const std::vector<int>& s, int x) { return std::binary_search(s.begin(), s.end(), x); }

std::uint64_t full_code(const Window& w) {
    return w.size() >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << w.size()) - 1;
}

// BABP: B is the set of infected sites (bit 0).
std::uint64_t babp_code(const Window& w, const std::vector<int>& B) {
    std::uint64_t c = full_code(w);
    for (int x : B) c &= ~(std::uint64_t{1} << (x - w.lo));
    return c;
}

// DFP: D is the set of sites in state 1.
std::uint64_t dfp_code(const Window& w, const std::vector<int>& D) {
    std::uint64_t c = 0;
    for (int x : D) c |= std::uint64_t{1} << (x - w.lo);
    return c;
}

// Factor contributed by a site x in the evolving set when the other set is described by d.
double set_factor(const SetDescriptor& d, int x, double in, double out) {
    switch (d.kind) {
        case SetDescriptor::Kind::explicit_set: return in_set(d.sites, x) ? in : out;
        case SetDescriptor::Kind::full: return in;
        case SetDescriptor::Kind::bernoulli: return d.prob * in + (1.0 - d.prob) * out;
    }
    return out;
}

double product_weight(std::uint64_t code, int n, double p_one) {
    double w = 1;
    for (int i = 0; i < n; ++i) w *= ((code >> i) & 1u) ? p_one : 1.0 - p_one;
    return w;
}

void check_inside(const std::vector<int>& s, const Window& w, const char* what) {
    for (int x : s)
        if (!w.contains(x)) throw std::invalid_argument(std::string(what) + " has a site outside the window");
}

Configuration babp_config(const Window& w, const std::vector<int>& B) {
    Configuration c = Configuration::all_healthy(w);
    for (int x : B) c.set(x, false);
    return c;
}

Configuration dfp_config(const Window& w, const std::vector<int>& D) {
    Configuration c = Configuration::all_infected(w);
    for (int x : D) c.set(x, true);
    return c;
}

// Draws a set from the descriptor inside w.
std::vector<int> draw(const SetDescriptor& d, const Window& w, std::uint64_t seed) {
    if (d.kind == SetDescriptor::Kind::explicit_set) return d.sites;
    std::vector<int> out;
    rng::Stream s(seed, 0xB5E7);
    for (int x = w.lo; x <= w.hi; ++x)
        if (d.kind == SetDescriptor::Kind::full || s.unit() < d.prob) out.push_back(x);
    return out;
}

void validate_common(const std::vector<int>& B, double t, double lambda) {
    if (!(lambda > 0) || !std::isfinite(lambda)) throw std::invalid_argument("duality: lambda must be positive");
    if (!(t >= 0) || !std::isfinite(t)) throw std::invalid_argument("duality: t must be non-negative");
    if (!std::is_sorted(B.begin(), B.end()) || std::adjacent_find(B.begin(), B.end()) != B.end())
        throw std::invalid_argument("duality: B must be sorted and without repeats");
}

Value mean_value(const std::vector<double>& xs) {
    const auto m = stats::moments(xs);
    return {m.mean, m.stderr_};
}

}  // namespace

DualityParams DualityParams::from_lambda(double lambda) {
    if (!(lambda > 0)) throw std::invalid_argument("duality: lambda must be positive");
    DualityParams d;
    d.lambda = lambda;
    d.y = std::sqrt(1.0 + lambda);
    d.w_in = 1.0 / (d.y + 1.0);
    d.w_out = -1.0 / (d.y - 1.0);
    d.self_weight = -1.0 / lambda;
    return d;
}

SetDescriptor SetDescriptor::of(std::vector<int> sites) {
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    return {Kind::explicit_set, std::move(sites), 0};
}

SetDescriptor SetDescriptor::bernoulli(double prob) {
    if (!(prob >= 0 && prob <= 1)) throw std::invalid_argument("bernoulli set: probability must lie in [0,1]");
    return {Kind::bernoulli, {}, prob};
}

std::string SetDescriptor::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::full: return "full";
        case Kind::bernoulli: os << "bernoulli(" << prob << ")"; return os.str();
        case Kind::explicit_set:
            os << "{";
            for (std::size_t i = 0; i < sites.size(); ++i) os << (i ? "," : "") << sites[i];
            os << "}";
            return os.str();
    }
    return {};
}

double DualityReport::difference() const { return std::abs(lhs.value - rhs.value); }

Window duality_window(const std::vector<int>& B, const SetDescriptor& other, double t, const DualityOptions& opt,
                      int* padding) {
    std::vector<int> all = B;
    if (other.kind == SetDescriptor::Kind::explicit_set) all.insert(all.end(), other.sites.begin(), other.sites.end());
    if (all.empty()) all.push_back(0);
    const int lo = *std::min_element(all.begin(), all.end());
    const int hi = *std::max_element(all.begin(), all.end());
    int pad = static_cast<int>(std::ceil(opt.speed * t)) + 4;
    if (opt.method == Method::exact) {
        const int hull = hi - lo + 1;
        if (hull > kExactMaxSites) throw std::invalid_argument("exact duality: sets span more than 14 sites");
        pad = std::min(pad, (kExactMaxSites - hull) / 2);
    }
    if (padding) *padding = pad;
    return Window(lo - pad, hi + pad);
}

ExactDuality::ExactDuality(double lambda, const Window& w) : par_(DualityParams::from_lambda(lambda)), w_(w) {
    if (w.topology != Topology::line) throw std::invalid_argument("exact duality: line windows only");
    if (w.size() > kExactMaxSites) throw std::invalid_argument("exact duality: window exceeds 14 sites");
    babp_space_ = spectral::build_state_space(ModelSpec::babp_lambda(lambda), w, BoundaryCondition::healthy(),
                                              spectral::Restriction::none());
    dfp_space_ = spectral::build_state_space(ModelSpec::dfp(lambda), w, BoundaryCondition::healthy(),
                                             spectral::Restriction::none());
    babp_ = spectral::build_generator(babp_space_);
    dfp_ = spectral::build_generator(dfp_space_);
}

std::vector<double> ExactDuality::self_vector(const SetDescriptor& Bprime, double t) const {
    std::vector<double> w(babp_space_->size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const std::uint64_t c = babp_space_->code(i);
        SignedLog acc;
        for (int k = 0; k < w_.size(); ++k)
            if (!((c >> k) & 1u)) acc.mul(set_factor(Bprime, w_.lo + k, par_.self_weight, 1.0));
        w[i] = acc.value();
    }
    return spectral::semigroup(babp_, w, t);
}

std::vector<double> ExactDuality::babp_quasi_vector(const SetDescriptor& D, double t) const {
    std::vector<double> w(babp_space_->size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const std::uint64_t c = babp_space_->code(i);
        SignedLog acc;
        for (int k = 0; k < w_.size(); ++k)
            if (!((c >> k) & 1u)) acc.mul(set_factor(D, w_.lo + k, par_.w_in, par_.w_out));
        w[i] = acc.value();
    }
    return spectral::semigroup(babp_, w, t);
}

std::vector<double> ExactDuality::dfp_quasi_vector(const std::vector<int>& B, double t) const {
    check_inside(B, w_, "B");
    std::vector<double> w(dfp_space_->size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const std::uint64_t c = dfp_space_->code(i);
        SignedLog acc;
        for (int x : B) acc.mul(((c >> (x - w_.lo)) & 1u) ? par_.w_in : par_.w_out);
        w[i] = acc.value();
    }
    const double p = 1.0 / (1.0 + par_.lambda);
    return spectral::semigroup(dfp_, w, p * t);
}

double ExactDuality::babp_read(const std::vector<double>& u, const SetDescriptor& B) const {
    switch (B.kind) {
        case SetDescriptor::Kind::explicit_set:
            check_inside(B.sites, w_, "B");
            return u[static_cast<std::size_t>(babp_space_->index(babp_code(w_, B.sites)))];
        case SetDescriptor::Kind::full: return u[static_cast<std::size_t>(babp_space_->index(0))];
        case SetDescriptor::Kind::bernoulli: {
            double s = 0;
            for (std::size_t i = 0; i < u.size(); ++i)
                s += product_weight(babp_space_->code(i), w_.size(), 1.0 - B.prob) * u[i];
            return s;
        }
    }
    return 0;
}

double ExactDuality::dfp_read(const std::vector<double>& v, const SetDescriptor& D) const {
    switch (D.kind) {
        case SetDescriptor::Kind::explicit_set:
            check_inside(D.sites, w_, "D");
            return v[static_cast<std::size_t>(dfp_space_->index(dfp_code(w_, D.sites)))];
        case SetDescriptor::Kind::full: return v[static_cast<std::size_t>(dfp_space_->index(full_code(w_)))];
        case SetDescriptor::Kind::bernoulli: {
            double s = 0;
            for (std::size_t i = 0; i < v.size(); ++i)
                s += product_weight(dfp_space_->code(i), w_.size(), D.prob) * v[i];
            return s;
        }
    }
    return 0;
}

double ExactDuality::dfp_full_occupation(int x, double t) const {
    if (!w_.contains(x)) throw std::invalid_argument("dfp_full_occupation: site outside the window");
    std::vector<double> f(dfp_space_->size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>((dfp_space_->code(i) >> (x - w_.lo)) & 1u);
    const double p = 1.0 / (1.0 + par_.lambda);
    const auto v = spectral::semigroup(dfp_, f, p * t);
    return v[static_cast<std::size_t>(dfp_space_->index(full_code(w_)))];
}

DualityReport self_duality_sides(const std::vector<int>& B, const SetDescriptor& Bprime, double t, double lambda,
                                 const DualityOptions& opt) {
    validate_common(B, t, lambda);
    const DualityParams par = DualityParams::from_lambda(lambda);
    DualityReport rep;
    rep.identity = "self";
    rep.method = opt.method;
    rep.lambda = lambda;
    rep.t = t;
    rep.B = B;
    rep.other = Bprime;
    rep.window = opt.window ? *opt.window : duality_window(B, Bprime, t, opt, &rep.padding);
    check_inside(B, rep.window, "B");
    if (Bprime.kind == SetDescriptor::Kind::explicit_set) check_inside(Bprime.sites, rep.window, "B'");
    if (Bprime.kind == SetDescriptor::Kind::bernoulli)
        rep.weight_unbounded = std::abs(set_factor(Bprime, 0, par.self_weight, 1.0)) >= 1.0;

    if (opt.method == Method::exact) {
        const ExactDuality ex(lambda, rep.window);
        rep.lhs = {ex.babp_read(ex.self_vector(Bprime, t), SetDescriptor::of(B)), 0};
        rep.rhs = {ex.babp_read(ex.self_vector(SetDescriptor::of(B), t), Bprime), 0};
        return rep;
    }
    rep.replicas = opt.replicas;
    rep.seed = opt.seed;
    const ModelSpec m = ModelSpec::babp_lambda(lambda);
    const Window w = rep.window;
    std::vector<double> lhs(opt.replicas), rhs(opt.replicas);
    const std::uint64_t seed2 = opt.seed ^ 0x9E3779B97F4A7C15ull;
    parallel_for(
        opt.replicas,
        [&](std::size_t r) {
            const auto tl = sim::build_timeline(m, w, t, replica_seed(opt.seed, r));
            const auto fin = sim::evolve(m, babp_config(w, B), BoundaryCondition::healthy(), tl).final;
            SignedLog a;
            for (int x = w.lo; x <= w.hi; ++x)
                if (!fin.get(x)) a.mul(set_factor(Bprime, x, par.self_weight, 1.0));
            lhs[r] = a.value();

            const std::uint64_t s2 = replica_seed(seed2, r);
            const auto bp = draw(Bprime, w, s2);
            const auto tl2 = sim::build_timeline(m, w, t, s2);
            const auto fin2 = sim::evolve(m, babp_config(w, bp), BoundaryCondition::healthy(), tl2).final;
            SignedLog b;
            for (int x : B)
                if (!fin2.get(x)) b.mul(par.self_weight);
            rhs[r] = b.value();
        },
        opt.workers);
    rep.lhs = mean_value(lhs);
    rep.rhs = mean_value(rhs);
    return rep;
}

DualityReport quasi_duality_sides(const std::vector<int>& B, const SetDescriptor& D, double t, double lambda,
                                  const DualityOptions& opt) {
    validate_common(B, t, lambda);
    const DualityParams par = DualityParams::from_lambda(lambda);
    const double p = 1.0 / (1.0 + lambda);
    DualityReport rep;
    rep.identity = "quasi";
    rep.method = opt.method;
    rep.lambda = lambda;
    rep.t = t;
    rep.dfp_time = p * t;
    rep.B = B;
    rep.other = D;
    rep.window = opt.window ? *opt.window : duality_window(B, D, t, opt, &rep.padding);
    check_inside(B, rep.window, "B");
    if (D.kind == SetDescriptor::Kind::explicit_set) check_inside(D.sites, rep.window, "D");
    if (D.kind == SetDescriptor::Kind::bernoulli)
        rep.weight_unbounded = std::abs(set_factor(D, 0, par.w_in, par.w_out)) >= 1.0;
    const bool single = D.kind == SetDescriptor::Kind::full && B.size() == 1;
    auto single_form = [&](double occ) { return (1.0 / (par.y - 1.0)) * ((2.0 * par.y / (par.y + 1.0)) * occ - 1.0); };

    if (opt.method == Method::exact) {
        const ExactDuality ex(lambda, rep.window);
        rep.lhs = {ex.babp_read(ex.babp_quasi_vector(D, t), SetDescriptor::of(B)), 0};
        rep.rhs = {ex.dfp_read(ex.dfp_quasi_vector(B, t), D), 0};
        if (single) rep.single_site_form = Value{single_form(ex.dfp_full_occupation(B[0], t)), 0};
        return rep;
    }
    rep.replicas = opt.replicas;
    rep.seed = opt.seed;
    const ModelSpec mb = ModelSpec::babp_lambda(lambda);
    const ModelSpec md = ModelSpec::dfp(lambda);
    const Window w = rep.window;
    std::vector<double> lhs(opt.replicas), rhs(opt.replicas), occ(opt.replicas);
    const std::uint64_t seed2 = opt.seed ^ 0x9E3779B97F4A7C15ull;
    parallel_for(
        opt.replicas,
        [&](std::size_t r) {
            const auto tl = sim::build_timeline(mb, w, t, replica_seed(opt.seed, r));
            const auto fin = sim::evolve(mb, babp_config(w, B), BoundaryCondition::healthy(), tl).final;
            SignedLog a;
            for (int x = w.lo; x <= w.hi; ++x)
                if (!fin.get(x)) a.mul(set_factor(D, x, par.w_in, par.w_out));
            lhs[r] = a.value();

            const std::uint64_t s2 = replica_seed(seed2, r);
            const auto d0 = draw(D, w, s2);
            const auto tl2 = sim::build_timeline(md, w, p * t, s2);
            const auto fin2 = sim::evolve(md, dfp_config(w, d0), BoundaryCondition::healthy(), tl2).final;
            SignedLog b;
            for (int x : B) b.mul(fin2.get(x) ? par.w_in : par.w_out);
            rhs[r] = b.value();
            occ[r] = (single && fin2.get(B[0])) ? 1.0 : 0.0;
        },
        opt.workers);
    rep.lhs = mean_value(lhs);
    rep.rhs = mean_value(rhs);
    if (single) {
        const Value o = mean_value(occ);
        const double scale = (1.0 / (par.y - 1.0)) * (2.0 * par.y / (par.y + 1.0));
        rep.single_site_form = Value{single_form(o.value), scale * o.stderr_};
    }
    return rep;
}

ErgodicityTrace dfp_ergodicity_probe(double lambda, int n, const ErgodicityOptions& opt) {
    if (n < 2) throw std::invalid_argument("ergodicity probe: n must be at least 2");
    if (n > kExactMaxSites) throw std::invalid_argument("ergodicity probe: exact evaluation supports n <= 14");
    const Window w(-(n / 2), n - 1 - n / 2);
    ErgodicityTrace tr;
    tr.lambda = lambda;
    tr.n = n;
    tr.sector = opt.sector;
    if (opt.start == ProbeStart::configuration) {
        if (!opt.eta0 || !(opt.eta0->window() == w))
            throw std::invalid_argument("ergodicity probe: initial configuration must live on the probe window");
        tr.sector = parity(*opt.eta0);
    }
    const auto space = spectral::build_state_space(ModelSpec::dfp(lambda), w, BoundaryCondition::healthy(),
                                                   spectral::Restriction::parity_sector(tr.sector));
    const auto gen = spectral::build_generator(space);
    const auto mu = spectral::reference_measure(space);
    tr.gap = spectral::spectral_gap(gen, mu).gap;

    const std::size_t N = space->size();
    std::vector<double> g(N);
    double mean = 0;
    for (std::size_t i = 0; i < N; ++i) {
        g[i] = static_cast<double>((space->code(i) >> (0 - w.lo)) & 1u);
        mean += mu.w[i] * g[i];
    }
    for (double& v : g) v -= mean;

    tr.times = opt.times;
    if (tr.times.empty())
        for (int k = 0; k <= 16; ++k) tr.times.push_back(0.5 * k);
    if (!std::is_sorted(tr.times.begin(), tr.times.end()) || tr.times.front() < 0)
        throw std::invalid_argument("ergodicity probe: times must be sorted and non-negative");
    std::size_t start = 0;
    if (opt.start == ProbeStart::configuration) start = static_cast<std::size_t>(space->index(opt.eta0->code()));
    double now = 0;
    for (double t : tr.times) {
        g = spectral::semigroup(gen, g, t - now);
        now = t;
        double v = 0;
        switch (opt.start) {
            case ProbeStart::worst:
                for (double x : g) v = std::max(v, std::abs(x));
                break;
            case ProbeStart::configuration: v = std::abs(g[start]); break;
            case ProbeStart::stationary:
                for (std::size_t i = 0; i < N; ++i) v += mu.w[i] * g[i];
                v = std::abs(v);
                break;
        }
        tr.trace.push_back(v);
    }
    std::vector<double> ft, fl;
    for (std::size_t k = 0; k < tr.times.size(); ++k)
        if (tr.times[k] >= opt.fit_from && tr.trace[k] > 0) {
            ft.push_back(tr.times[k]);
            fl.push_back(std::log(tr.trace[k]));
        }
    tr.fit_points = ft.size();
    if (ft.size() >= 2) {
        const auto fit = stats::fit_line(ft, fl);
        tr.rate = -fit.slope;
        tr.intercept = fit.intercept;
        tr.r2 = fit.r2;
    }
    return tr;
}

}  // namespace kcm::duality
