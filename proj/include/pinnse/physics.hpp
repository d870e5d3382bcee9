#pragma once

#include <cmath>

#include "pinnse/model.hpp"
#include "pinnse/tape.hpp"
#include "pinnse/tensor.hpp"

namespace pinnse::phys {

// --------------------------------------------------------------- Rossler

struct RosslerParams {
    double a = 0.2;
    double b = 0.2;
    double c = 5.7;
};

/// dx/dt = -(y+z), dy/dt = x + a y, dz/dt = b + z (x - c)
inline void rossler_rhs(const double state[3], const RosslerParams& p, double out[3]) {
    out[0] = -(state[1] + state[2]);
    out[1] = state[0] + p.a * state[1];
    out[2] = p.b + state[2] * (state[0] - p.c);
}

// ------------------------------------------------------------------- NS

struct NsParams {
    double rho = 1.0;
    double nu = 0.001;
    double u_max = 0.3;
    double freq = 3.0;  // inlet period parameter f
    double height = 0.205;
    double length = 0.55;
    double cyl_x = 0.1, cyl_y = 0.1, cyl_r = 0.025;
    double t_final = 6.0;
};

/// Parabolic inlet: u_x = 4 U(t) y (H - y) / H^2 with
/// U(t) = U_max t (sin(pi t / f)^2 + 1), u_y = 0.
inline double inlet_u_of_t(double t, const NsParams& p) {
    const double s = std::sin(3.14159265358979323846 * t / p.freq);
    return p.u_max * t * (s * s + 1.0);
}

inline void inlet_velocity(double t, double y, const NsParams& p, double& ux, double& uy) {
    ux = 4.0 * inlet_u_of_t(t, p) * y * (p.height - y) / (p.height * p.height);
    uy = 0.0;
}

/// Field values and derivatives at a set of points, all same-shaped.
struct NsFieldDerivs {
    Tensor u, v;
    Tensor u_t, u_x, u_y, u_xx, u_yy;
    Tensor v_t, v_x, v_y, v_xx, v_yy;
    Tensor p_x, p_y;
};

struct NsResidual {
    Tensor mom_x, mom_y, mass;
};

/// Momentum and mass residuals: r_momx = u_t + u u_x + v u_y + p_x/rho
/// - nu (u_xx + u_yy); analogous y; r_mass = u_x + v_y.
NsResidual ns_residual(const NsFieldDerivs& f, const NsParams& p);

// ------------------------------------------------------------------ heat

/// The source prints -k dT/dx = q - h (T - T_inf) at both faces. At x = L a
/// positive q then extracts heat, which contradicts the heated-plate data
/// the model is trained on; influx_positive flips the x = L flux term so
/// both heaters inject energy. Residual evaluation supports both.
enum class RobinSign : uint8_t { as_printed, influx_positive };

struct HeatParams {
    double alpha = 1.5e-7;   // diffusivity m^2/s
    double k = 0.3;          // conductivity W/(m K)
    double h = 8.0;          // natural convection coefficient
    double q0_over_k = 17e3; // imposed flux / k at x = 0, K/m
    double qL_over_k = 10e3; // imposed flux / k at x = L, K/m
    double thickness = 2e-3; // L, m
    double t_inf = 25.0;     // ambient, deg C
    double t_pdb = 1e30;     // bottom power-drop instant, s
};

/// r_pde = T_t - alpha T_xx, elementwise.
Tensor heat_pde_residual(const Tensor& T_t, const Tensor& T_xx, double alpha);

/// Robin residual at x = 0: -k T_x - q0 + h (T - T_inf).
double heat_bc0_residual(double T, double T_x, const HeatParams& p, double q0);
/// Robin residual at x = L; sign of the conductive term per RobinSign.
double heat_bcL_residual(double T, double T_x, const HeatParams& p, double qL, RobinSign sign);

// ----------------------------------------------------------- loss builders

struct LossParts {
    ad::Var total;
    std::vector<std::pair<std::string, double>> parts;  // reported values
    double value(const std::string& name) const;
};

/// Supervision grid, collocation times, and true parameters for one batch.
struct RosslerBatch {
    Tensor sup_qps;     // [b, Ns, 1]
    Tensor sup_labels;  // [b, Ns, 3]
    Tensor ode_qps;     // [b, Nc, 1]
    Tensor c_true;      // [b]
    RosslerParams phys;
};

struct RosslerWeights {
    double lambda = 0.0;
    double beta = 1.0;
};

/// L_total = L_sup + lambda L_ODE + beta L_P; L_sup and L_ODE are l1 means,
/// L_P is the squared error on c. The ODE loss uses the true c.
LossParts build_rossler_loss(ad::Tape& tape, const nn::ModelBundle& bundle,
                             const nn::TapeModel& model, const RosslerBatch& batch,
                             const RosslerWeights& w);

struct NsBatch {
    Tensor sup_vel_qps;   // [b, Nv, 3] (t,x,y)
    Tensor sup_vel_vals;  // [b, Nv, 2]
    Tensor sup_p_qps;     // [b, Np, 3]
    Tensor sup_p_vals;    // [b, Np, 1]
    Tensor inlet_qps;     // [b, Ni, 3]
    Tensor inlet_vals;    // [b, Ni, 2] reconstructed from the true parameters
    Tensor ic_qps;        // [b, Nic, 3] at t = 0, zero targets
    Tensor bc_qps;        // [b, Nbc, 3] walls + cylinder, no-slip
    Tensor colloc_qps;    // [b, Nc, 3]
    Tensor params_true;   // [b, 2]
    NsParams phys;
};

struct NsWeights {
    double alpha_w = 10.0;
    double lambda = 0.0;
    double eta = 0.1;
};

/// L_total = alpha_w L_sup + lambda L_PDE + eta (L_IC + L_BC) + L_P,
/// every part an l2 mean over its point set.
LossParts build_ns_loss(ad::Tape& tape, const nn::ModelBundle& bundle,
                        const nn::TapeModel& model, const NsBatch& batch, const NsWeights& w);

struct HeatBatch {
    Tensor sup_qps;     // [b, Ns, 2] (t,x), boundary sensor curves
    Tensor sup_vals;    // [b, Ns, 1]
    Tensor ic_qps;      // [b, Ni, 2] (0,x)
    Tensor ic_vals;     // [b, Ni, 1]
    Tensor bc0_qps;     // [b, Nb, 2]
    Tensor bcL_qps;     // [b, Nb, 2]
    Tensor q0k_t;       // [b, Nb] flux/k at the bc0 times
    Tensor qLk_t;       // [b, Nb] flux/k at the bcL times (0 after the drop)
    Tensor colloc_qps;  // [b, Nc, 2]
    Tensor alpha;       // [b]
    Tensor h_over_k;    // [b]
    Tensor t_inf;       // [b]
    RobinSign bcL_sign = RobinSign::influx_positive;
    // documented conditioning: losses are evaluated on scaled residuals
    double temp_scale = 100.0;
    double time_scale = 45.0;
    double fluxk_scale = 1.4e4;
};

struct HeatWeights {
    double beta1 = 0.0, beta2 = 5.0, beta3 = 1.0, beta4 = 10.0;
};

/// L_total = b1 L_PDE + b2 L_IC + b3 L_BC + b4 L_SUP, l2 means.
LossParts build_heat_loss(ad::Tape& tape, const nn::ModelBundle& bundle,
                          const nn::TapeModel& model, const HeatBatch& batch,
                          const HeatWeights& w);

/// Cross-validation residual of the z equation, computed from the PINN
/// trajectory and the identification head's c. Diagnostic only.
struct CrossvalZ {
    double l_ode_z = 0.0;          // | zd - b - z (x - c) | mean, sign-consistent
    double l_ode_z_printed = 0.0;  // | zd - b + z (x - c) | mean, as printed
    double c_hat = 0.0;
};

CrossvalZ crossval_residual_z(const nn::ModelBundle& bundle, const nn::SensorWindow& window,
                              const Tensor& eval_times, double b_param);

}  // namespace pinnse::phys
