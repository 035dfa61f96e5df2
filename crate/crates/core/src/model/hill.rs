//! Derivatives of the auto-regulated transcription rate.
//!
//! The rate is `K(t; b) * phi(p, H)` with `phi(p, H) = 1 / (1 + sqrt(p/H))`,
//! `H = b3*k_P / (2*gamma_R*gamma_P)` and `K` the pulsed transcription rate.
//! Parameter order is `(gamma_R, k_P, gamma_P, b0, b1, b2, b3)`; note that
//! `b3` enters through both `K` and `H`, so the chain rule below runs
//! through both routes.
//!
//! All partials up to third order carrying at least one protein index are
//! produced; they feed the covariance sensitivity equations.

use super::builtin::transcription_rate;

const NP: usize = 7;
/// Parameters entering `H` with their monomial exponents.
const H_EXPONENTS: [(usize, f64); 4] = [(0, -1.0), (1, 1.0), (2, -1.0), (6, 1.0)];

pub(crate) struct HillEval {
    pub value: f64,
    pub d_p: f64,
    pub d_pp: f64,
    pub d_ppp: f64,
    pub d_theta: [f64; NP],
    pub d_ptheta: [f64; NP],
    pub d_pptheta: [f64; NP],
    pub d_thetatheta: [[f64; NP]; NP],
    pub d_pthetatheta: [[f64; NP]; NP],
}

pub(crate) fn eval_hill_rate(p: f64, theta: &[f64], t: f64) -> HillEval {
    // The exponent 1/2 makes the rate non-differentiable at p = 0; solver
    // paths stay in the interior, the clamp only guards against NaN.
    let p = p.max(1e-12);

    let (k, dk4, d2k4) = transcription_rate(t, [theta[3], theta[4], theta[5], theta[6]]);
    let mut dk = [0.0; NP];
    let mut d2k = [[0.0; NP]; NP];
    for i in 0..4 {
        dk[3 + i] = dk4[i];
        for j in 0..4 {
            d2k[3 + i][3 + j] = d2k4[i][j];
        }
    }

    // H = b3*k_P/(2*gamma_R*gamma_P) and its monomial derivatives.
    let h = theta[6] * theta[1] / (2.0 * theta[0] * theta[2]);
    let mut dh = [0.0; NP];
    let mut d2h = [[0.0; NP]; NP];
    for (i, ei) in H_EXPONENTS {
        dh[i] = ei * h / theta[i];
        for (j, ej) in H_EXPONENTS {
            d2h[i][j] = if i == j {
                ei * (ei - 1.0) * h / (theta[i] * theta[i])
            } else {
                ei * ej * h / (theta[i] * theta[j])
            };
        }
    }

    // phi(p, H) = g(u), u = sqrt(p/H).
    let u = (p / h).sqrt();
    let inv = 1.0 / (1.0 + u);
    let g1 = -inv * inv;
    let g2 = 2.0 * inv * inv * inv;
    let g3 = -6.0 * inv * inv * inv * inv;

    let u_p = u / (2.0 * p);
    let u_pp = -u / (4.0 * p * p);
    let u_ppp = 3.0 * u / (8.0 * p * p * p);
    let u_h = -u / (2.0 * h);
    let u_hh = 3.0 * u / (4.0 * h * h);
    let u_ph = -u / (4.0 * p * h);
    let u_pph = u / (8.0 * p * p * h);
    let u_phh = 3.0 * u / (8.0 * p * h * h);

    let phi = inv;
    let phi_p = g1 * u_p;
    let phi_h = g1 * u_h;
    let phi_pp = g2 * u_p * u_p + g1 * u_pp;
    let phi_ph = g2 * u_p * u_h + g1 * u_ph;
    let phi_hh = g2 * u_h * u_h + g1 * u_hh;
    let phi_ppp = g3 * u_p * u_p * u_p + 3.0 * g2 * u_p * u_pp + g1 * u_ppp;
    let phi_pph = g3 * u_p * u_p * u_h + g2 * (u_pp * u_h + 2.0 * u_p * u_ph) + g1 * u_pph;
    let phi_phh = g3 * u_p * u_h * u_h + g2 * (2.0 * u_ph * u_h + u_p * u_hh) + g1 * u_phh;

    let mut out = HillEval {
        value: k * phi,
        d_p: k * phi_p,
        d_pp: k * phi_pp,
        d_ppp: k * phi_ppp,
        d_theta: [0.0; NP],
        d_ptheta: [0.0; NP],
        d_pptheta: [0.0; NP],
        d_thetatheta: [[0.0; NP]; NP],
        d_pthetatheta: [[0.0; NP]; NP],
    };
    for i in 0..NP {
        out.d_theta[i] = dk[i] * phi + k * phi_h * dh[i];
        out.d_ptheta[i] = dk[i] * phi_p + k * phi_ph * dh[i];
        out.d_pptheta[i] = dk[i] * phi_pp + k * phi_pph * dh[i];
        for j in 0..NP {
            out.d_thetatheta[i][j] = d2k[i][j] * phi
                + dk[i] * phi_h * dh[j]
                + dk[j] * phi_h * dh[i]
                + k * (phi_hh * dh[i] * dh[j] + phi_h * d2h[i][j]);
            out.d_pthetatheta[i][j] = d2k[i][j] * phi_p
                + dk[i] * phi_ph * dh[j]
                + dk[j] * phi_ph * dh[i]
                + k * (phi_phh * dh[i] * dh[j] + phi_ph * d2h[i][j]);
        }
    }
    out
}
