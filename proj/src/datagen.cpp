#include "pinnse/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "pinnse/parallel.hpp"
#include "pinnse/rng.hpp"

namespace pinnse::data {

// ------------------------------------------------------------------ Sobol

namespace {

// Joe & Kuo direction-number table (new-joe-kuo-6), dimensions 2..8.
struct JoeKuoRow {
    int s;
    uint32_t a;
    uint32_t m[5];
};
constexpr JoeKuoRow kJoeKuo[7] = {
    {1, 0, {1, 0, 0, 0, 0}},  {2, 1, {1, 3, 0, 0, 0}},   {3, 1, {1, 3, 1, 0, 0}},
    {3, 2, {1, 1, 1, 0, 0}},  {4, 1, {1, 1, 3, 3, 0}},   {4, 4, {1, 3, 5, 13, 0}},
    {5, 2, {1, 1, 5, 5, 17}},
};

}  // namespace

SobolSampler::SobolSampler(int dim, uint64_t skip) : dim_(dim) {
    PINNSE_CHECK(dim >= 1 && dim <= 8, "sobol: dimension must be in [1, 8]");
    constexpr int kBits = 32;
    // first dimension: van der Corput
    for (int k = 0; k < kBits; ++k) dirs_[0][size_t(k)] = 1u << (31 - k);
    for (int d = 1; d < dim; ++d) {
        const JoeKuoRow& row = kJoeKuo[d - 1];
        const int s = row.s;
        for (int k = 0; k < s; ++k) dirs_[size_t(d)][size_t(k)] = row.m[k] << (31 - k);
        for (int k = s; k < kBits; ++k) {
            uint32_t v = dirs_[size_t(d)][size_t(k - s)];
            v ^= v >> s;
            for (int i = 1; i < s; ++i)
                if ((row.a >> (s - 1 - i)) & 1u) v ^= dirs_[size_t(d)][size_t(k - i)];
            dirs_[size_t(d)][size_t(k)] = v;
        }
    }
    for (uint64_t i = 0; i < skip; ++i) next();
}

std::vector<double> SobolSampler::next() {
    std::vector<double> out(size_t(dim_), 0.0);
    for (int d = 0; d < dim_; ++d) out[size_t(d)] = double(state_[size_t(d)]) * 0x1.0p-32;
    // advance by the Gray-code rule: flip the direction of the lowest zero bit
    uint64_t n = index_++;
    int c = 0;
    while (n & 1u) {
        n >>= 1;
        ++c;
    }
    for (int d = 0; d < dim_; ++d) state_[size_t(d)] ^= dirs_[size_t(d)][size_t(c)];
    return out;
}

double l2_star_discrepancy(const std::vector<std::vector<double>>& pts, int dim) {
    const double n = double(pts.size());
    double term1 = std::pow(3.0, -dim);
    double term2 = 0.0;
    for (const auto& x : pts) {
        double prod = 1.0;
        for (int k = 0; k < dim; ++k) prod *= (1.0 - x[size_t(k)] * x[size_t(k)]);
        term2 += prod;
    }
    term2 *= std::pow(2.0, 1.0 - dim) / n;
    double term3 = 0.0;
    for (const auto& xi : pts)
        for (const auto& xj : pts) {
            double prod = 1.0;
            for (int k = 0; k < dim; ++k) prod *= (1.0 - std::max(xi[size_t(k)], xj[size_t(k)]));
            term3 += prod;
        }
    term3 /= n * n;
    return std::sqrt(std::max(0.0, term1 - term2 + term3));
}

// ----------------------------------------------------------------- Rossler

RosslerTrajectory integrate_rossler(double x0, double y0, double z0,
                                    const phys::RosslerParams& p, double t_final, double dt_out,
                                    double dt_int, double divergence_bound) {
    const int64_t n_out = int64_t(std::llround(t_final / dt_out));
    const int64_t stride = int64_t(std::llround(dt_out / dt_int));
    PINNSE_CHECK(stride >= 1, "integrate_rossler: dt_int must divide dt_out");

    RosslerTrajectory out;
    out.times = Tensor(Shape{n_out});
    out.states = Tensor(Shape{n_out, 3});
    double s[3] = {x0, y0, z0};
    auto store = [&](int64_t i) {
        out.times[i] = double(i) * dt_out;
        out.states.at2(i, 0) = s[0];
        out.states.at2(i, 1) = s[1];
        out.states.at2(i, 2) = s[2];
    };
    double k1[3], k2[3], k3[3], k4[3], tmp[3];
    for (int64_t i = 0; i < n_out; ++i) {
        store(i);
        for (int64_t sub = 0; sub < stride; ++sub) {
            phys::rossler_rhs(s, p, k1);
            for (int j = 0; j < 3; ++j) tmp[j] = s[j] + 0.5 * dt_int * k1[j];
            phys::rossler_rhs(tmp, p, k2);
            for (int j = 0; j < 3; ++j) tmp[j] = s[j] + 0.5 * dt_int * k2[j];
            phys::rossler_rhs(tmp, p, k3);
            for (int j = 0; j < 3; ++j) tmp[j] = s[j] + dt_int * k3[j];
            phys::rossler_rhs(tmp, p, k4);
            for (int j = 0; j < 3; ++j)
                s[j] += dt_int / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        for (int j = 0; j < 3; ++j)
            if (!std::isfinite(s[j]) || std::fabs(s[j]) > divergence_bound) out.diverged = true;
        if (out.diverged) break;
    }
    return out;
}

Tensor add_noise(const Tensor& traj, const NoiseSpec& spec) {
    PINNSE_CHECK(traj.rank() == 2, "add_noise: expected [n, channels]");
    const int64_t n = traj.dim(0), ch = traj.dim(1);
    Tensor noisy = traj;
    if (spec.alpha == 0.0) return noisy;
    Rng rng(spec.seed ^ 0xabcdef12ULL);
    for (int64_t j = 0; j < ch; ++j) {
        double ss = 0.0;
        for (int64_t i = 0; i < n; ++i) ss += traj.at2(i, j) * traj.at2(i, j);
        const double sigma = spec.conventional_rms ? spec.alpha * std::sqrt(ss / double(n))
                                                   : spec.alpha * std::sqrt(ss) / double(n);
        for (int64_t i = 0; i < n; ++i) noisy.at2(i, j) += rng.gaussian() * sigma;
    }
    return noisy;
}

nn::SensorWindow extract_window(const Tensor& times, const Tensor& channels, double dt_ds,
                                int count) {
    PINNSE_CHECK(times.numel() >= 2, "extract_window: too few samples");
    const double dt_out = times[1] - times[0];
    const int64_t stride = int64_t(std::llround(dt_ds / dt_out));
    PINNSE_CHECK(stride >= 1, "extract_window: dt_ds below sample spacing");
    PINNSE_CHECK(count >= 1 && int64_t(count - 1) * stride < times.numel(),
                 "extract_window: insufficient data for requested window");
    const int64_t ch = channels.dim(1);
    nn::SensorWindow w;
    w.rows = Tensor(Shape{count, 1 + ch});
    for (int i = 0; i < count; ++i) {
        const int64_t r = int64_t(i) * stride;
        w.rows.at2(i, 0) = times[r];
        for (int64_t j = 0; j < ch; ++j) w.rows.at2(i, 1 + j) = channels.at2(r, j);
    }
    return w;
}

// -------------------------------------------------------------------- heat

HeatField heat_solve(const HeatSimConfig& cfg) {
    const phys::HeatParams& p = cfg.params;
    PINNSE_CHECK(cfg.dt > 0 && cfg.nx >= 2, "heat_solve: bad grid");
    const int64_t M = cfg.nx;  // intervals
    const int64_t nodes = M + 1;
    const double dx = p.thickness / double(M);
    const int64_t nt = int64_t(std::llround(cfg.t_final / cfg.dt)) + 1;
    const double r = p.alpha * cfg.dt / (dx * dx);
    const double hk = p.h / p.k;
    const double bc_gain = 2.0 * p.alpha * cfg.dt / dx;

    HeatField out;
    out.times = Tensor(Shape{nt});
    out.xs = Tensor(Shape{nodes});
    out.field = Tensor(Shape{nt, nodes});
    for (int64_t j = 0; j < nodes; ++j) out.xs[j] = double(j) * dx;

    // deviation from ambient; affine initial profile between the endpoints
    std::vector<double> D(size_t(nodes), 0.0);
    for (int64_t j = 0; j < nodes; ++j) {
        const double frac = double(j) / double(M);
        D[size_t(j)] = (cfg.t00 + (cfg.t0L - cfg.t00) * frac) - p.t_inf;
    }
    std::vector<double> lower(size_t(nodes), 0.0), diag(size_t(nodes), 0.0),
        upper(size_t(nodes), 0.0), rhs(size_t(nodes), 0.0);

    const double sL = cfg.bcL_sign == phys::RobinSign::as_printed ? -1.0 : 1.0;
    for (int64_t it = 0; it < nt; ++it) {
        const double t = double(it) * cfg.dt;
        out.times[it] = t;
        for (int64_t j = 0; j < nodes; ++j) out.field.at2(it, j) = D[size_t(j)] + p.t_inf;
        if (it + 1 == nt) break;

        const double t_next = double(it + 1) * cfg.dt;
        const double q0k = p.q0_over_k;
        const double qLk = (cfg.with_drop && t_next >= p.t_pdb) ? 0.0 : p.qL_over_k;

        // interior rows
        for (int64_t j = 1; j < M; ++j) {
            lower[size_t(j)] = -r;
            diag[size_t(j)] = 1.0 + 2.0 * r;
            upper[size_t(j)] = -r;
            rhs[size_t(j)] = D[size_t(j)];
        }
        // ghost-node Robin boundaries, implicit in the convection term
        diag[0] = 1.0 + 2.0 * r + bc_gain * hk;
        upper[0] = -2.0 * r;
        rhs[0] = D[0] + bc_gain * q0k;
        diag[size_t(M)] = 1.0 + 2.0 * r + sL * sL * bc_gain * hk;
        lower[size_t(M)] = -2.0 * r;
        rhs[size_t(M)] = D[size_t(M)] + sL * bc_gain * qLk;
        if (cfg.bcL_sign == phys::RobinSign::as_printed) {
            // as printed the x=L convection term changes sign with the flux
            diag[size_t(M)] = 1.0 + 2.0 * r - bc_gain * hk;
        }

        // Thomas solve
        for (int64_t j = 1; j < nodes; ++j) {
            const double w = lower[size_t(j)] / diag[size_t(j - 1)];
            diag[size_t(j)] -= w * upper[size_t(j - 1)];
            rhs[size_t(j)] -= w * rhs[size_t(j - 1)];
        }
        D[size_t(nodes - 1)] = rhs[size_t(nodes - 1)] / diag[size_t(nodes - 1)];
        for (int64_t j = nodes - 2; j >= 0; --j)
            D[size_t(j)] = (rhs[size_t(j)] - upper[size_t(j)] * D[size_t(j + 1)]) / diag[size_t(j)];
        for (double v : D)
            PINNSE_CHECK(std::isfinite(v), "heat_solve: non-finite solution");
    }
    return out;
}

std::vector<double> acquisition_times(double t_final, const HeatWindowSpec& spec) {
    Rng rng(spec.seed ^ 0x7ea7c0deULL);
    std::vector<double> times{0.0};
    double t = 0.0;
    while (true) {
        t += spec.jitter_lo == spec.jitter_hi ? spec.jitter_lo
                                              : rng.uniform(spec.jitter_lo, spec.jitter_hi);
        if (t > t_final) break;
        times.push_back(t);
    }
    return times;
}

namespace {

double interp_row(const Tensor& times, const Tensor& field, double t, int64_t col) {
    const int64_t nt = times.numel();
    if (t <= times[0]) return field.at2(0, col);
    if (t >= times[nt - 1]) return field.at2(nt - 1, col);
    int64_t hi = 1;
    while (times[hi] < t) ++hi;
    const double w = (t - times[hi - 1]) / (times[hi] - times[hi - 1]);
    return (1.0 - w) * field.at2(hi - 1, col) + w * field.at2(hi, col);
}

}  // namespace

nn::SensorWindow heat_window(const HeatField& field, const HeatSimConfig& cfg,
                             const std::vector<double>& times, const NoiseSpec& noise) {
    const int64_t n = int64_t(times.size());
    const int64_t last = field.xs.numel() - 1;
    Tensor temps(Shape{n, 2});
    for (int64_t i = 0; i < n; ++i) {
        temps.at2(i, 0) = interp_row(field.times, field.field, times[size_t(i)], 0);
        temps.at2(i, 1) = interp_row(field.times, field.field, times[size_t(i)], last);
    }
    Tensor noisy = add_noise(temps, noise);
    nn::SensorWindow w;
    w.rows = Tensor(Shape{n, 5});
    for (int64_t i = 0; i < n; ++i) {
        const double t = times[size_t(i)];
        w.rows.at2(i, 0) = t;
        w.rows.at2(i, 1) = noisy.at2(i, 0);
        w.rows.at2(i, 2) = noisy.at2(i, 1);
        w.rows.at2(i, 3) = 100.0;
        w.rows.at2(i, 4) = (cfg.with_drop && t >= cfg.params.t_pdb) ? 0.0 : 100.0;
    }
    w.statics = {cfg.params.thickness};
    return w;
}

// ---------------------------------------------------------------------- NS

std::vector<std::pair<double, double>> ns_sensor_layout(const phys::NsParams& p) {
    // 3 columns x 4 heights: upstream, above, downstream of the cylinder
    std::vector<std::pair<double, double>> out;
    const double cols[3] = {p.cyl_x - 0.04, p.cyl_x, p.cyl_x + 0.06};
    const double hs[4] = {0.2 * p.height, 0.4 * p.height, 0.6 * p.height, 0.8 * p.height};
    for (double x : cols)
        for (double y : hs) out.emplace_back(x, y);
    return out;
}

namespace {

struct ToyField {
    double u, v, p;
};

/// Divergence-free manufactured flow matching the inlet profile at x = 0.
/// psi = U(t) P(y) Q(x) with P'(y) the parabolic profile and Q(0) = 1,
/// Q'(0) = 0; pressure decays downstream proportionally to U(t).
ToyField toy_field(double t, double x, double y, const phys::NsParams& p) {
    const double H = p.height, L = p.length;
    const double U = phys::inlet_u_of_t(t, p);
    const double pi = 3.14159265358979323846;
    const double Q = std::cos(pi * x / (2.0 * L));
    const double Qp = -pi / (2.0 * L) * std::sin(pi * x / (2.0 * L));
    const double Pp = 4.0 * y * (H - y) / (H * H);
    const double P = 2.0 * y * y / H - 4.0 * y * y * y / (3.0 * H * H);
    ToyField f;
    f.u = U * Q * Pp;
    f.v = -U * Qp * P;
    f.p = 0.5 * p.rho * U * (1.0 - x / L) * (1.0 + 0.2 * std::cos(2.0 * pi * y / H));
    return f;
}

int64_t nearest_node(const Tensor& coords, double x, double y) {
    int64_t best = 0;
    double bd = 1e300;
    for (int64_t i = 0; i < coords.dim(0); ++i) {
        const double dx = coords.at2(i, 0) - x, dy = coords.at2(i, 1) - y;
        const double d = dx * dx + dy * dy;
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

}  // namespace

Dataset make_ns_toy_dataset(const NsToyConfig& cfg) {
    const phys::NsParams& p = cfg.params;
    const int64_t nx = cfg.nx, ny = cfg.ny;
    const int64_t n_nodes = nx * ny;
    const int64_t nt = int64_t(std::llround(cfg.t_final / cfg.dt)) + 1;

    Tensor coords(Shape{n_nodes, 2});
    for (int64_t i = 0; i < nx; ++i)
        for (int64_t j = 0; j < ny; ++j) {
            coords.at2(i * ny + j, 0) = p.length * double(i) / double(nx - 1);
            coords.at2(i * ny + j, 1) = p.height * double(j) / double(ny - 1);
        }
    Tensor fields(Shape{nt, n_nodes, 3});
    for (int64_t it = 0; it < nt; ++it) {
        const double t = double(it) * cfg.dt;
        for (int64_t i = 0; i < n_nodes; ++i) {
            ToyField f = toy_field(t, coords.at2(i, 0), coords.at2(i, 1), p);
            fields.at3(it, i, 0) = f.u;
            fields.at3(it, i, 1) = f.v;
            fields.at3(it, i, 2) = f.p;
        }
    }
    auto layout = ns_sensor_layout(p);
    Tensor sensor_coords(Shape{int64_t(layout.size()), 2});
    for (size_t s = 0; s < layout.size(); ++s) {
        const int64_t node = nearest_node(coords, layout[s].first, layout[s].second);
        sensor_coords.at2(int64_t(s), 0) = coords.at2(node, 0);
        sensor_coords.at2(int64_t(s), 1) = coords.at2(node, 1);
    }

    Dataset ds;
    ds.app = "ns";
    ds.set_array("coords", std::move(coords));
    ds.set_array("fields", std::move(fields));
    ds.set_array("sensor_coords", std::move(sensor_coords));
    ds.set_scalar("U_max", p.u_max);
    ds.set_scalar("f", p.freq);
    ds.set_scalar("dt", cfg.dt);
    ds.set_scalar("T", cfg.t_final);
    ds.meta.emplace_back("source", "manufactured");
    return ds;
}

Dataset ingest_ns_dataset(const std::string& path) {
    Dataset ds = read_dataset(path);
    PINNSE_CHECK_DATA(ds.app == "ns", "ingest_ns_dataset: app mismatch in " + path);
    const Tensor& coords = ds.array("coords");
    const Tensor& fields = ds.array("fields");
    const Tensor& sensors = ds.array("sensor_coords");
    PINNSE_CHECK_DATA(coords.rank() == 2 && coords.dim(1) == 2, "ns dataset: bad coords");
    PINNSE_CHECK_DATA(fields.rank() == 3 && fields.dim(1) == coords.dim(0) &&
                          fields.dim(2) == 3,
                      "ns dataset: bad fields shape");
    PINNSE_CHECK_DATA(sensors.rank() == 2 && sensors.dim(0) == 12 && sensors.dim(1) == 2,
                      "ns dataset: expected 12 sensor coordinates");
    const double dt = ds.scalar("dt");
    const double T = ds.scalar("T");
    ds.scalar("U_max");
    ds.scalar("f");
    const int64_t nt_expected = int64_t(std::llround(T / dt)) + 1;
    PINNSE_CHECK_DATA(fields.dim(0) == nt_expected, "ns dataset: time axis inconsistent");
    return ds;
}

Tensor ns_sensor_traces(const Dataset& ds) {
    const Tensor& coords = ds.array("coords");
    const Tensor& fields = ds.array("fields");
    const Tensor& sensors = ds.array("sensor_coords");
    const int64_t nt = fields.dim(0), ns = sensors.dim(0);
    Tensor traces(Shape{nt, ns});
    for (int64_t s = 0; s < ns; ++s) {
        const int64_t node = nearest_node(coords, sensors.at2(s, 0), sensors.at2(s, 1));
        for (int64_t it = 0; it < nt; ++it) traces.at2(it, s) = fields.at3(it, node, 2);
    }
    return traces;
}

// ----------------------------------------------------------------- campaigns

namespace {

std::vector<std::string> assign_splits(size_t n, double train_frac, double val_frac,
                                       Rng& rng) {
    // deterministic shuffled assignment honoring the requested counts
    const size_t n_train = size_t(std::llround(train_frac * double(n)));
    const size_t n_val = size_t(std::llround(val_frac * double(n)));
    std::vector<std::string> splits(n, "test");
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    for (size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    for (size_t i = 0; i < n && i < n_train; ++i) splits[idx[i]] = "train";
    for (size_t i = n_train; i < n && i < n_train + n_val; ++i) splits[idx[i]] = "val";
    return splits;
}

}  // namespace

CampaignResult sample_rossler_campaign(const RosslerCampaignConfig& cfg) {
    CampaignResult out;
    out.manifest.app = "rossler";
    out.manifest.seed = cfg.seed;
    SobolSampler sobol(3, 1);  // skip the origin point
    Rng rng(cfg.seed);
    int accepted = 0, attempts = 0;
    // draw candidate chunks sequentially (the Sobol stream is ordered),
    // integrate them in parallel, then accept in draw order
    while (accepted < cfg.n_datasets) {
        PINNSE_CHECK(attempts < 20 * cfg.n_datasets + 100,
                     "rossler campaign: too many divergent draws");
        const int chunk = std::min(cfg.n_datasets - accepted + 4, 32);
        std::vector<std::array<double, 3>> draws(size_t(chunk), std::array<double, 3>{});
        for (auto& d : draws) {
            auto u = sobol.next();
            d = {cfg.x0_lo + (cfg.x0_hi - cfg.x0_lo) * u[0],
                 cfg.y0_lo + (cfg.y0_hi - cfg.y0_lo) * u[1],
                 cfg.c_lo + (cfg.c_hi - cfg.c_lo) * u[2]};
        }
        std::vector<RosslerTrajectory> trajs(size_t(chunk), RosslerTrajectory{});
        parallel_for(chunk, cfg.n_threads, [&](int64_t i) {
            phys::RosslerParams p;
            p.c = draws[size_t(i)][2];
            trajs[size_t(i)] = integrate_rossler(draws[size_t(i)][0], draws[size_t(i)][1],
                                                 cfg.z0, p);
        });
        for (int i = 0; i < chunk && accepted < cfg.n_datasets; ++i) {
            ++attempts;
            const auto& d = draws[size_t(i)];
            if (trajs[size_t(i)].diverged) {
                out.manifest.rejected.push_back(
                    "divergent: x0=" + std::to_string(d[0]) + " y0=" + std::to_string(d[1]) +
                    " c=" + std::to_string(d[2]));
                continue;
            }
            NoiseSpec noise{cfg.noise_alpha, rng.next_u64(), false};
            Dataset ds;
            ds.app = "rossler";
            ds.set_array("times", trajs[size_t(i)].times);
            ds.set_array("exact", trajs[size_t(i)].states);
            ds.set_array("noisy", add_noise(trajs[size_t(i)].states, noise));
            ds.set_scalar("x0", d[0]);
            ds.set_scalar("y0", d[1]);
            ds.set_scalar("z0", cfg.z0);
            ds.set_scalar("a", phys::RosslerParams{}.a);
            ds.set_scalar("b", phys::RosslerParams{}.b);
            ds.set_scalar("c", d[2]);
            ds.set_scalar("noise_alpha", cfg.noise_alpha);
            ds.set_scalar("dt_out", 0.01);
            ds.set_scalar("T", 20.0);
            out.datasets.push_back(std::move(ds));
            out.manifest.files.push_back("rossler_" + std::to_string(accepted) + ".psed");
            ++accepted;
        }
    }
    out.manifest.splits =
        assign_splits(out.datasets.size(), cfg.train_frac, cfg.val_frac, rng);
    return out;
}

CampaignResult sample_heat_campaign(const HeatCampaignConfig& cfg) {
    CampaignResult out;
    out.manifest.app = "heat";
    out.manifest.seed = cfg.seed;
    SobolSampler sobol(8, 1);
    Rng rng(cfg.seed);
    struct PointPlan {
        phys::HeatParams params;
        double t00, t0L;
        uint64_t window_seed[2], noise_seed[2];
    };
    std::vector<PointPlan> plan(size_t(cfg.n_points));
    for (int i = 0; i < cfg.n_points; ++i) {
        auto u = sobol.next();
        PointPlan& pp = plan[size_t(i)];
        phys::HeatParams& p = pp.params;
        p.alpha = cfg.alpha_lo + (cfg.alpha_hi - cfg.alpha_lo) * u[0];
        // both fluxes drawn from the same band; the band alternates per point
        const bool high = u[1] >= 0.5;
        const double band = high ? 2.0 * (u[1] - 0.5) : 2.0 * u[1];
        const double lo = high ? cfg.qk_high_lo : cfg.qk_low_lo;
        const double hi = high ? cfg.qk_high_hi : cfg.qk_low_hi;
        p.q0_over_k = lo + (hi - lo) * band;
        p.qL_over_k = lo + (hi - lo) * u[2];
        p.thickness = cfg.thick_lo + (cfg.thick_hi - cfg.thick_lo) * u[3];
        p.t_pdb = cfg.tpdb_lo + (cfg.tpdb_hi - cfg.tpdb_lo) * u[4];
        p.k = cfg.k_lo + (cfg.k_hi - cfg.k_lo) * u[7];
        p.h = cfg.h;
        p.t_inf = cfg.t_inf;
        pp.t00 = cfg.ic_lo + (cfg.ic_hi - cfg.ic_lo) * u[5];
        pp.t0L = cfg.ic_lo + (cfg.ic_hi - cfg.ic_lo) * u[6];
        for (int drop = 0; drop < 2; ++drop) {
            pp.window_seed[drop] = rng.next_u64();
            pp.noise_seed[drop] = rng.next_u64();
        }
    }
    out.datasets.resize(size_t(2 * cfg.n_points));
    parallel_for(cfg.n_points, cfg.n_threads, [&](int64_t i) {
        const PointPlan& pp = plan[size_t(i)];
        for (int drop = 0; drop < 2; ++drop) {
            HeatSimConfig sim;
            sim.params = pp.params;
            sim.t00 = pp.t00;
            sim.t0L = pp.t0L;
            sim.t_final = cfg.t_final;
            sim.with_drop = drop == 1;
            HeatField field = heat_solve(sim);

            HeatWindowSpec wspec;
            wspec.jitter_lo = cfg.jitter_lo;
            wspec.jitter_hi = cfg.jitter_hi;
            wspec.seed = pp.window_seed[drop];
            std::vector<double> times = acquisition_times(cfg.t_final, wspec);
            NoiseSpec noise{cfg.noise_alpha, pp.noise_seed[drop], false};
            nn::SensorWindow w = heat_window(field, sim, times, noise);

            Dataset ds;
            ds.app = "heat";
            ds.set_array("times", field.times);
            ds.set_array("xs", field.xs);
            ds.set_array("field", field.field);
            ds.set_array("sensor_rows", w.rows);
            ds.set_scalar("alpha", pp.params.alpha);
            ds.set_scalar("k", pp.params.k);
            ds.set_scalar("h", pp.params.h);
            ds.set_scalar("q0_over_k", pp.params.q0_over_k);
            ds.set_scalar("qL_over_k", pp.params.qL_over_k);
            ds.set_scalar("thickness", pp.params.thickness);
            ds.set_scalar("t_inf", pp.params.t_inf);
            ds.set_scalar("t_pdb", sim.with_drop ? pp.params.t_pdb : 1e30);
            ds.set_scalar("with_drop", drop);
            ds.set_scalar("t00", pp.t00);
            ds.set_scalar("t0L", pp.t0L);
            ds.set_scalar("T", cfg.t_final);
            ds.set_scalar("noise_alpha", cfg.noise_alpha);
            out.datasets[size_t(2 * i + drop)] = std::move(ds);
        }
    });
    for (int i = 0; i < cfg.n_points; ++i)
        for (int drop = 0; drop < 2; ++drop)
            out.manifest.files.push_back("heat_" + std::to_string(i) + "_" +
                                         (drop ? "drop" : "nodrop") + ".psed");
    // paired datasets share a split so the drop/no-drop pair never straddles
    std::vector<std::string> point_splits =
        assign_splits(size_t(cfg.n_points), cfg.train_frac, cfg.val_frac, rng);
    for (int i = 0; i < cfg.n_points; ++i) {
        out.manifest.splits.push_back(point_splits[size_t(i)]);
        out.manifest.splits.push_back(point_splits[size_t(i)]);
    }
    return out;
}

CampaignResult sample_ns_campaign(const NsCampaignConfig& cfg) {
    CampaignResult out;
    out.manifest.app = "ns";
    out.manifest.seed = cfg.seed;
    SobolSampler sobol(2, 1);
    Rng rng(cfg.seed);
    std::vector<NsToyConfig> toys(size_t(cfg.n_datasets));
    for (int i = 0; i < cfg.n_datasets; ++i) {
        auto u = sobol.next();
        toys[size_t(i)].nx = cfg.nx;
        toys[size_t(i)].ny = cfg.ny;
        toys[size_t(i)].params.u_max = cfg.umax_lo + (cfg.umax_hi - cfg.umax_lo) * u[0];
        toys[size_t(i)].params.freq = cfg.f_lo + (cfg.f_hi - cfg.f_lo) * u[1];
        out.manifest.files.push_back("ns_" + std::to_string(i) + ".psed");
    }
    out.datasets.resize(size_t(cfg.n_datasets));
    parallel_for(cfg.n_datasets, cfg.n_threads,
                 [&](int64_t i) { out.datasets[size_t(i)] = make_ns_toy_dataset(toys[size_t(i)]); });
    out.manifest.splits = assign_splits(out.datasets.size(), cfg.train_frac, cfg.val_frac, rng);
    return out;
}

void write_campaign(const CampaignResult& campaign, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (size_t i = 0; i < campaign.datasets.size(); ++i)
        write_dataset(campaign.datasets[i], (fs::path(dir) / campaign.manifest.files[i]).string());
    write_manifest(campaign.manifest, (fs::path(dir) / "manifest.json").string());
}

}  // namespace pinnse::data
