//! Scalar-loop evaluation of every A-quantity, written as explicit sums
//! over the projection-matrix entries. Deliberately independent of the
//! library's matrix helpers: each bracket entry below is spelled out from
//! the raw `z_lc`, `z2_lc` values and the diagonal vectors, so the two
//! routes share no code beyond the inputs.

pub struct LambdaInput<'a> {
    pub f: &'a [f64],
    pub g: &'a [f64],
    pub t: &'a [f64],
    pub d: &'a [f64],
    pub e: &'a [f64],
    pub b: &'a [f64],
    pub h: &'a [f64],
    pub m: &'a [f64],
}

pub struct AQuantities {
    pub a_lr: f64,
    pub a_r1: f64,
    pub a_r2: f64,
    pub a_r3: f64,
    pub a_t1: f64,
    pub a_t2: f64,
    pub a_t3: f64,
}

pub fn brute_force(z: &[Vec<f64>], z2: &[Vec<f64>], lam: &LambdaInput, phi: f64) -> AQuantities {
    let n = z.len();
    let inv_phi = 1.0 / phi;
    let (f, g) = (lam.f, lam.g);

    // A_LR (regression part)
    let mut a_lr = 0.0;
    for l in 0..n {
        for c in 0..n {
            let z3 = z[l][c].powi(3) - z2[l][c].powi(3);
            let zdzzd = z[l][l] * z[l][c] * z[c][c] - z2[l][l] * z2[l][c] * z2[c][c];
            a_lr += -4.0 * inv_phi * g[l] * z3 * (f[c] + g[c]);
            a_lr += inv_phi * f[l] * (2.0 * z3 + 3.0 * zdzzd) * f[c];
        }
        a_lr += 3.0 * inv_phi * lam.m[l] * (z[l][l].powi(2) - z2[l][l].powi(2));
    }

    // A_R1, A_R2, A_R3
    let (mut a_r1, mut a_r2, mut a_r3) = (0.0, 0.0, 0.0);
    for l in 0..n {
        for c in 0..n {
            let dz = z[l][c] - z2[l][c];
            let dz_ll = z[l][l] - z2[l][l];
            let dz_cc = z[c][c] - z2[c][c];
            // 3 F Z2d (Z - Z2) Z2d F
            a_r1 += 3.0 * inv_phi * f[l] * z2[l][l] * dz * z2[c][c] * f[c];
            // 6 F Z2d Z2 (Z - Z2)_d (F - G)
            a_r1 += 6.0 * inv_phi * f[l] * z2[l][l] * z2[l][c] * dz_cc * (f[c] - g[c]);
            // -6 F [Z2^(2) had (Z - Z2)] (2G - F)
            a_r1 += -6.0 * inv_phi * f[l] * z2[l][c].powi(2) * dz * (2.0 * g[c] - f[c]);

            // -3 (F-G)(Z-Z2)_d Z2 (Z-Z2)_d (F-G)
            a_r2 += -3.0 * inv_phi * (f[l] - g[l]) * dz_ll * z2[l][c] * dz_cc * (f[c] - g[c]);
            // -6 F Z2d (Z-Z2)(Z-Z2)_d (F-G)
            a_r2 += -6.0 * inv_phi * f[l] * z2[l][l] * dz * dz_cc * (f[c] - g[c]);
            // -6 (F-G)[(Z-Z2)^(2) had Z2](F-G)
            a_r2 += -6.0 * inv_phi * (f[l] - g[l]) * dz * dz * z2[l][c] * (f[c] - g[c]);

            // 3 (F-G)(Z-Z2)_d(Z-Z2)(Z-Z2)_d(F-G) + 2 (F-G)(Z-Z2)^(3)(F-G)
            a_r3 += 3.0 * inv_phi * (f[l] - g[l]) * dz_ll * dz * dz_cc * (f[c] - g[c]);
            a_r3 += 2.0 * inv_phi * (f[l] - g[l]) * dz.powi(3) * (f[c] - g[c]);
        }
        let dz_ll = z[l][l] - z2[l][l];
        // -6 H (Z-Z2)_d Z2d
        a_r1 += -6.0 * inv_phi * lam.h[l] * dz_ll * z2[l][l];
        // +3 B (Z-Z2)_d^(2)
        a_r2 += 3.0 * inv_phi * lam.b[l] * dz_ll * dz_ll;
    }

    // A_T1, A_T2, A_T3
    let (mut a_t1, mut a_t2, mut a_t3) = (0.0, 0.0, 0.0);
    for l in 0..n {
        let fg_l = f[l] + g[l];
        let f2g_l = f[l] + 2.0 * g[l];
        for c in 0..n {
            let fg_c = f[c] + g[c];
            let f2g_c = f[c] + 2.0 * g[c];
            let dz = z[l][c] - z2[l][c];
            let dz_ll = z[l][l] - z2[l][l];
            let dz_cc = z[c][c] - z2[c][c];
            let zz_d = z[l][c] * z[c][c];
            let z2z2_d = z2[l][c] * z2[c][c];

            // 12 (F+G)[Z_d Z Z_d - Z_2d Z2 Z_2d + Z^(3) - Z2^(3)](F+G)
            a_t1 += 12.0
                * inv_phi
                * fg_l
                * (z[l][l] * z[l][c] * z[c][c] - z2[l][l] * z2[l][c] * z2[c][c]
                    + z[l][c].powi(3)
                    - z2[l][c].powi(3))
                * fg_c;
            // -6 (F+2G)[(Z+Z2) had (Z^(2)-Z2^(2)) + (Z-Z2)_d(Z Z_d + Z2 Z_2d)
            //           + 2 Z_2d (Z Z_d - Z2 Z_2d) + 2 Z2^(2) had (Z-Z2)](F+G)
            a_t1 += -6.0
                * inv_phi
                * f2g_l
                * ((z[l][c] + z2[l][c]) * (z[l][c].powi(2) - z2[l][c].powi(2))
                    + dz_ll * (zz_d + z2z2_d)
                    + 2.0 * z2[l][l] * (zz_d - z2z2_d)
                    + 2.0 * z2[l][c].powi(2) * dz)
                * fg_c;
            // +3 (F+2G)[2 (Z-Z2)_d Z2 Z_2d + 2 Z2^(2) had (Z-Z2)
            //           + Z_2d (Z-Z2) Z_2d + Z_2d (Z-Z2)(Z-Z2)_d](F+2G)
            a_t1 += 3.0
                * inv_phi
                * f2g_l
                * (2.0 * dz_ll * z2[l][c] * z2[c][c]
                    + 2.0 * z2[l][c].powi(2) * dz
                    + z2[l][l] * dz * z2[c][c]
                    + z2[l][l] * dz * dz_cc)
                * f2g_c;

            // -3 (F+2G)[3/4 (Z-Z2)_d(Z-Z2)(Z-Z2)_d + 1/2 (Z-Z2)^(3)
            //           + Z_2d(Z-Z2)(Z-Z2)_d + (Z-Z2)_d Z2 (Z-Z2)_d
            //           + 2 Z2 had (Z-Z2)^(2)](F+2G)
            a_t2 += -3.0
                * inv_phi
                * f2g_l
                * (0.75 * dz_ll * dz * dz_cc
                    + 0.5 * dz.powi(3)
                    + z2[l][l] * dz * dz_cc
                    + dz_ll * z2[l][c] * dz_cc
                    + 2.0 * z2[l][c] * dz * dz)
                * f2g_c;
            // +6 (F+2G)[(Z-Z2) had (Z^(2)-Z2^(2)) + (Z-Z2)_d(Z Z_d - Z2 Z_2d)](F+G)
            a_t2 += 6.0
                * inv_phi
                * f2g_l
                * (dz * (z[l][c].powi(2) - z2[l][c].powi(2)) + dz_ll * (zz_d - z2z2_d))
                * fg_c;

            // (F+2G)[3/4 (Z-Z2)_d(Z-Z2)(Z-Z2)_d + 1/2 (Z-Z2)^(3)](F+2G)
            a_t3 += inv_phi
                * f2g_l
                * (0.75 * dz_ll * dz * dz_cc + 0.5 * dz.powi(3))
                * f2g_c;
        }
        let dz_ll = z[l][l] - z2[l][l];
        // -12 D (Zd^(2) - Z2d^(2)) + 6 T (Z-Z2)_d (Z_d + 3 Z_2d) - 6 E (Z-Z2)_d Z_2d
        a_t1 += -12.0 * inv_phi * lam.d[l] * (z[l][l].powi(2) - z2[l][l].powi(2));
        a_t1 += 6.0 * inv_phi * lam.t[l] * dz_ll * (z[l][l] + 3.0 * z2[l][l]);
        a_t1 += -6.0 * inv_phi * lam.e[l] * dz_ll * z2[l][l];
        // -3 (2T - E)(Z-Z2)_d^(2)
        a_t2 += -3.0 * inv_phi * (2.0 * lam.t[l] - lam.e[l]) * dz_ll * dz_ll;
    }

    AQuantities {
        a_lr,
        a_r1,
        a_r2,
        a_r3,
        a_t1,
        a_t2,
        a_t3,
    }
}

/// Independent recomputation of the phi-test correction ingredients straight
/// from the polygamma functions (never through `PhiDerivs`).
pub struct PhiTestAs {
    pub epsilon: f64,
    pub a_r: [f64; 3],
    pub a_t: [f64; 3],
}

pub fn phi_test_brute_force(family: bartglm::Family, phi0: f64, p: usize, n: usize) -> PhiTestAs {
    use bartglm::polygamma;
    let (d2, d3, d4) = match family {
        bartglm::Family::Normal | bartglm::Family::InverseNormal => (-0.5, 1.0, -3.0),
        bartglm::Family::Gamma => {
            let a2 = 1.0 / phi0 - polygamma(1, phi0).unwrap();
            let a3 = -1.0 / (phi0 * phi0) - polygamma(2, phi0).unwrap();
            let a4 = 2.0 / (phi0 * phi0 * phi0) - polygamma(3, phi0).unwrap();
            (
                phi0 * phi0 * a2,
                phi0 * phi0 * phi0 * a3,
                phi0 * phi0 * phi0 * phi0 * a4,
            )
        }
    };
    let (nf, pf) = (n as f64, p as f64);
    let epsilon = -pf * (pf - 2.0) / (4.0 * nf * d2) + (2.0 * pf * d3 + d4) / (4.0 * nf * d2 * d2)
        - 5.0 * d3 * d3 / (12.0 * nf * d2 * d2 * d2);
    let a_r = [
        -3.0 * pf * (pf - 2.0) / (nf * d2 * d2),
        -3.0 * (2.0 * pf * d3 + d4) / (nf * d2 * d2),
        -5.0 * d3 * d3 / (nf * d2 * d2 * d2),
    ];
    let a_t = [
        -3.0 * pf * (pf + 2.0) / (nf * d2)
            - 3.0 * (3.0 * pf * d3 - 4.0 * d4) / (nf * d2 * d2)
            - 18.0 * d3 * d3 / (nf * d2 * d2 * d2),
        -3.0 * (pf * d3 - d4) / (nf * d2 * d2) - 33.0 * d3 * d3 / (4.0 * nf * d2 * d2 * d2),
        -5.0 * d3 * d3 / (4.0 * nf * d2 * d2 * d2),
    ];
    PhiTestAs { epsilon, a_r, a_t }
}
