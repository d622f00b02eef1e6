//! Quantum-Markov-chain verification.
//!
//! For a tripartition A-B-C the conditional mutual information
//! `I(A:C|B)` vanishes exactly when the state is a quantum Markov chain,
//! and in that case:
//!
//! * the operator combination `K_ABC - K_AB - K_BC + K_B` vanishes on the
//!   support of `rho_ABC` (the Petz decomposition of the modular
//!   Hamiltonian), and
//! * the modular commutator `J(A,B,C)` is zero.
//!
//! Independently of Markovianity, `eta = exp(ln rho_AB + ln rho_BC -
//! ln rho_B)` satisfies `Tr eta <= 1` (a three-operator strengthening of
//! the Golden-Thompson inequality), with equality exactly on Markov
//! chains, and the conditional mutual information obeys
//! `I(A:C|B) = D(rho_ABC || eta / Tr eta) - ln Tr eta`.
//!
//! This module evaluates all of these diagnostics for the dense qudit
//! backend, the dense fermionic backend (twirled partial traces), and the
//! Gaussian backend (covariance matrices, evaluated natively at any size).

use crate::dense::{
    self, embed_op, log_density, modular_data, modular_hamiltonian, sorted_union, DensityOp,
    QuditState,
};
use crate::error::{Error, Result};
use crate::fermion::{
    fermion_cmi, fermion_modular_commutator, fermionic_rdm, ftrace, twirled_modular_kernel,
    FermionOp,
};
use crate::gaussian::{
    entanglement_kernel, gaussian_cmi, gaussian_entropy, gaussian_modular_commutator,
    pair_spectrum, quadratic_expectation, MajoranaCovariance,
};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Norm used for operator-valued residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualNorm {
    /// Largest singular value.
    #[default]
    Operator,
    /// Sum of singular values.
    Trace,
}

fn hermitian_norm(mat: &Array2<Complex64>, norm: ResidualNorm) -> Result<f64> {
    let vals = dense::eigvalsh(mat)?;
    Ok(match norm {
        ResidualNorm::Operator => vals.iter().fold(0.0f64, |m, &v| m.max(v.abs())),
        ResidualNorm::Trace => vals.iter().map(|v| v.abs()).sum(),
    })
}

/// Aggregated Markov-chain diagnostics for one tripartition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarkovReport {
    /// Conditional mutual information `I(A:C|B)` (nats).
    pub cmi_value: f64,
    /// Norm of `K_ABC - K_AB - K_BC + K_B` restricted to the support of
    /// `rho_ABC`.
    pub petz_residual: f64,
    /// `Tr exp(ln rho_AB + ln rho_BC - ln rho_B)`; at most `1 + 1e-9`.
    pub gt_trace: f64,
    /// Residual of `I(A:C|B) = D(rho || eta/Tr eta) - ln Tr eta`.
    pub rel_ent_identity_residual: f64,
    /// Modular commutator `J(A,B,C)`.
    pub j_value: f64,
    /// True when `rho_ABC` is rank-deficient and the diagnostics were
    /// restricted to its support.
    pub support_restricted: bool,
}

impl MarkovReport {
    fn validate(self, tol: f64) -> Result<MarkovReport> {
        for (name, v) in [
            ("cmiValue", self.cmi_value),
            ("petzResidual", self.petz_residual),
            ("gtTrace", self.gt_trace),
            ("relEntIdentityResidual", self.rel_ent_identity_residual),
            ("jValue", self.j_value),
        ] {
            if !v.is_finite() {
                return Err(Error::Linalg(format!("non-finite {name} in Markov report")));
            }
        }
        if self.cmi_value < tol && self.j_value.abs() >= 10.0 * tol {
            return Err(Error::ImplicationViolated {
                cmi: self.cmi_value,
                j: self.j_value,
            });
        }
        Ok(self)
    }
}

fn positions(sub: &[usize], ambient: &[usize]) -> Vec<usize> {
    sub.iter()
        .map(|s| ambient.binary_search(s).expect("subset of ambient"))
        .collect()
}

// ---------------------------------------------------------------------------
// Dense qudit backend
// ---------------------------------------------------------------------------

struct DenseKernels {
    rho_abc: DensityOp,
    k_ab: Array2<Complex64>,
    k_bc: Array2<Complex64>,
    k_b: Array2<Complex64>,
}

fn dense_kernels(
    state: &QuditState,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    floor: f64,
    log: bool,
) -> Result<DenseKernels> {
    let abc = sorted_union(&[a, b, c])?;
    let rho_abc = state.rdm(&abc)?;
    let layout = rho_abc.layout().clone();
    let ab_pos = positions(&sorted_union(&[a, b])?, &abc);
    let bc_pos = positions(&sorted_union(&[b, c])?, &abc);
    let b_pos = positions(&{
        let mut s = b.to_vec();
        s.sort_unstable();
        s
    }, &abc);
    let build = |pos: &[usize]| -> Result<Array2<Complex64>> {
        let sub = rho_abc.rdm(pos)?;
        let op = if log {
            log_density(&sub, floor)?
        } else {
            modular_hamiltonian(&sub, floor)?
        };
        embed_op(&op, pos, &layout)
    };
    Ok(DenseKernels {
        k_ab: build(&ab_pos)?,
        k_bc: build(&bc_pos)?,
        k_b: build(&b_pos)?,
        rho_abc,
    })
}

/// Norm of `K_ABC - K_AB - K_BC + K_B` projected onto the support of
/// `rho_ABC` (zero exactly for quantum Markov chains).
pub fn petz_residual_with_norm(
    state: &QuditState,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    floor: f64,
    norm: ResidualNorm,
) -> Result<f64> {
    let ks = dense_kernels(state, a, b, c, floor, false)?;
    let md = modular_data(&ks.rho_abc, floor)?;
    let r = &md.kernel - &ks.k_ab - &ks.k_bc + &ks.k_b;
    let projected = md.support.dot(&r).dot(&md.support);
    hermitian_norm(&projected, norm)
}

/// [`petz_residual_with_norm`] with the operator norm.
pub fn petz_residual(
    state: &QuditState,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    floor: f64,
) -> Result<f64> {
    petz_residual_with_norm(state, a, b, c, floor, ResidualNorm::Operator)
}

/// Result of the trace inequality and relative-entropy identity checks.
#[derive(Debug, Clone, Copy)]
pub struct GtCheck {
    /// `Tr exp(ln rho_AB + ln rho_BC - ln rho_B)`.
    pub gt_trace: f64,
    /// `|I(A:C|B) - D(rho || eta/Tr eta) + ln Tr eta|`.
    pub rel_ent_identity_residual: f64,
}

fn gt_from_parts(
    log_sum: &Array2<Complex64>,
    rho_abc_mat: &Array2<Complex64>,
    entropy_abc: f64,
    cmi: f64,
) -> Result<GtCheck> {
    let eta = dense::hermitian_function(log_sum, f64::exp)?;
    let gt_trace = eta.diag().sum().re;
    // D(rho || eta/Tr eta) = -S(rho) - Tr(rho L) + ln Tr eta.
    let tr_rho_l = rho_abc_mat.dot(log_sum).diag().sum().re;
    let d = -entropy_abc - tr_rho_l + gt_trace.ln();
    Ok(GtCheck {
        gt_trace,
        rel_ent_identity_residual: (cmi - d + gt_trace.ln()).abs(),
    })
}

/// Evaluate `Tr eta` and the relative-entropy identity for a qudit state.
pub fn gt_lieb_check(
    state: &QuditState,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    floor: f64,
) -> Result<GtCheck> {
    let ks = dense_kernels(state, a, b, c, floor, true)?;
    let log_sum = &ks.k_ab + &ks.k_bc - &ks.k_b;
    let cmi = dense::cmi(state, a, b, c)?;
    let s = ks.rho_abc.entropy()?;
    gt_from_parts(&log_sum, ks.rho_abc.mat(), s, cmi)
}

/// Full Markov diagnostic suite for a qudit state.
///
/// Errors with [`Error::ImplicationViolated`] when `cmi < tol` but
/// `|J| >= 10 tol` — a numerical inconsistency, never a physics result.
pub fn markov_suite(
    state: &QuditState,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    floor: f64,
    tol: f64,
) -> Result<MarkovReport> {
    let cmi = dense::cmi(state, a, b, c)?;
    let petz = petz_residual(state, a, b, c, floor)?;
    let gt = gt_lieb_check(state, a, b, c, floor)?;
    let j = dense::modular_commutator(state, a, b, c, floor)?;
    let abc = sorted_union(&[a, b, c])?;
    let rho_abc = state.rdm(&abc)?;
    let md = modular_data(&rho_abc, floor)?;
    MarkovReport {
        cmi_value: cmi,
        petz_residual: petz,
        gt_trace: gt.gt_trace,
        rel_ent_identity_residual: gt.rel_ent_identity_residual,
        j_value: j,
        support_restricted: md.rank < rho_abc.mat().nrows(),
    }
    .validate(tol)
}

// ---------------------------------------------------------------------------
// Fermionic backend
// ---------------------------------------------------------------------------

fn fermion_complement(n_modes: usize, keep: &[usize]) -> Vec<usize> {
    (0..n_modes).filter(|m| !keep.contains(m)).collect()
}

/// Fermionic analogue of [`petz_residual`], built from twirled modular
/// kernels on the A+B+C mode space (the kernels' identity offsets cancel
/// in the combination).
pub fn petz_residual_fermion_with_norm(
    op: &FermionOp,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    floor: f64,
    norm: ResidualNorm,
) -> Result<f64> {
    let abc = sorted_union(&[a, b, c])?;
    let rho = fermionic_rdm(op, &abc)?;
    let ab_pos = positions(&sorted_union(&[a, b])?, &abc);
    let bc_pos = positions(&sorted_union(&[b, c])?, &abc);
    let b_pos = positions(&sorted_union(&[b])?, &abc);
    let all: Vec<usize> = (0..abc.len()).collect();
    let k_abc = twirled_modular_kernel(&rho, &all, floor)?;
    let k_ab = twirled_modular_kernel(&rho, &ab_pos, floor)?;
    let k_bc = twirled_modular_kernel(&rho, &bc_pos, floor)?;
    let k_b = twirled_modular_kernel(&rho, &b_pos, floor)?;
    let r = &k_abc - &k_ab - &k_bc + &k_b;
    let (vals, vecs) = dense::eigh(rho.mat())?;
    let indicator = vals.mapv(|p| if p > floor { 1.0 } else { 0.0 });
    let support = dense::spectral_assemble(&indicator, &vecs);
    hermitian_norm(&support.dot(&r).dot(&support), norm)
}

/// [`petz_residual_fermion_with_norm`] with the operator norm.
pub fn petz_residual_fermion(
    op: &FermionOp,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    floor: f64,
) -> Result<f64> {
    petz_residual_fermion_with_norm(op, a, b, c, floor, ResidualNorm::Operator)
}

/// Fermionic version of [`gt_lieb_check`], using twirled partial traces.
pub fn gt_lieb_check_fermion(
    op: &FermionOp,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    floor: f64,
) -> Result<GtCheck> {
    let abc = sorted_union(&[a, b, c])?;
    let rho = fermionic_rdm(op, &abc)?;
    let n = abc.len();
    let ab_pos = positions(&sorted_union(&[a, b])?, &abc);
    let bc_pos = positions(&sorted_union(&[b, c])?, &abc);
    let b_pos = positions(&sorted_union(&[b])?, &abc);
    let log_of = |keep: &[usize]| -> Result<Array2<Complex64>> {
        let twirled = ftrace(&rho, &fermion_complement(n, keep))?;
        dense::hermitian_function(twirled.mat(), |p| p.max(floor).ln())
    };
    let log_sum = &log_of(&ab_pos)? + &log_of(&bc_pos)? - &log_of(&b_pos)?;
    let cmi = fermion_cmi(&rho, &positions(&sorted_union(&[a])?, &abc), &b_pos, &{
        positions(&sorted_union(&[c])?, &abc)
    })?;
    let vals = dense::eigvalsh(rho.mat())?;
    let s: f64 = vals.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
    gt_from_parts(&log_sum, rho.mat(), s, cmi)
}

/// Full Markov diagnostic suite for a fermionic state.
pub fn markov_suite_fermion(
    op: &FermionOp,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    floor: f64,
    tol: f64,
) -> Result<MarkovReport> {
    let cmi = fermion_cmi(op, a, b, c)?;
    let petz = petz_residual_fermion(op, a, b, c, floor)?;
    let gt = gt_lieb_check_fermion(op, a, b, c, floor)?;
    let j = fermion_modular_commutator(op, a, b, c, floor)?;
    let abc = sorted_union(&[a, b, c])?;
    let rho = fermionic_rdm(op, &abc)?;
    let vals = dense::eigvalsh(rho.mat())?;
    let rank = vals.iter().filter(|&&p| p > floor).count();
    MarkovReport {
        cmi_value: cmi,
        petz_residual: petz,
        gt_trace: gt.gt_trace,
        rel_ent_identity_residual: gt.rel_ent_identity_residual,
        j_value: j,
        support_restricted: rank < rho.mat().nrows(),
    }
    .validate(tol)
}

// ---------------------------------------------------------------------------
// Gaussian backend
// ---------------------------------------------------------------------------

/// `ln Tr exp(-(i/4) gamma^T h gamma)` from the pair values of `h`
/// (each pair contributes `2 cosh(v/2)`).
fn gaussian_ln_partition(kernel: &Array2<f64>) -> Result<f64> {
    let vals = pair_spectrum(kernel)?;
    Ok(vals
        .iter()
        .map(|&v| {
            let x = v.abs() / 2.0;
            // ln(2 cosh x), overflow-safe.
            x + (1.0 + (-2.0 * x).exp()).ln()
        })
        .sum::<f64>()
        / 2.0)
}

fn pad_into(kernel: &Array2<f64>, sub: &[usize], n_ambient: usize) -> Array2<f64> {
    let mut out = Array2::zeros((2 * n_ambient, 2 * n_ambient));
    for (a, &ma) in sub.iter().enumerate() {
        for (b, &mb) in sub.iter().enumerate() {
            for ra in 0..2 {
                for rb in 0..2 {
                    out[(2 * ma + ra, 2 * mb + rb)] = kernel[(2 * a + ra, 2 * b + rb)];
                }
            }
        }
    }
    out
}

/// Gaussian Petz residual.
///
/// The four modular Hamiltonians are `-ln rho_X = K(h_X) + ln Z(h_X)`
/// (kernels zero-padded to the A+B+C mode space). Their combination is a
/// quadratic operator `K(R)` with `R = h_ABC - h_AB - h_BC + h_B` plus
/// the scalar `s = ln Z_ABC - ln Z_AB - ln Z_BC + ln Z_B`. The many-body
/// operator norm is half the sum of pair values of `R` plus `|s|` — all
/// computable from 2n-dimensional spectra.
pub fn petz_residual_gaussian(
    cov: &MajoranaCovariance,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<f64> {
    let abc = sorted_union(&[a, b, c])?;
    let n = abc.len();
    let ab_pos = positions(&sorted_union(&[a, b])?, &abc);
    let bc_pos = positions(&sorted_union(&[b, c])?, &abc);
    let b_pos = positions(&sorted_union(&[b])?, &abc);
    let g_abc = cov.restrict(&abc)?;
    let h_abc = entanglement_kernel(&g_abc)?;
    let h_ab = pad_into(&entanglement_kernel(&g_abc.restrict(&ab_pos)?)?, &ab_pos, n);
    let h_bc = pad_into(&entanglement_kernel(&g_abc.restrict(&bc_pos)?)?, &bc_pos, n);
    let h_b = pad_into(&entanglement_kernel(&g_abc.restrict(&b_pos)?)?, &b_pos, n);
    let r = &h_abc - &h_ab - &h_bc + &h_b;
    let s = gaussian_ln_partition(&h_abc)? - gaussian_ln_partition(&h_ab)?
        - gaussian_ln_partition(&h_bc)?
        + gaussian_ln_partition(&h_b)?;
    // Operator norm of (i/4) gamma^T R gamma + s: eigenvalues are
    // sum_k v_k (n_k - 1/2) + s over occupations n_k.
    let vals = pair_spectrum(&r)?;
    Ok(vals.iter().map(|v| v.abs()).sum::<f64>() / 4.0 + s.abs())
}

/// Gaussian version of [`gt_lieb_check`], evaluated natively on
/// covariance matrices (no dense bridge, any system size).
pub fn gt_lieb_check_gaussian(
    cov: &MajoranaCovariance,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<GtCheck> {
    let abc = sorted_union(&[a, b, c])?;
    let n = abc.len();
    let ab_pos = positions(&sorted_union(&[a, b])?, &abc);
    let bc_pos = positions(&sorted_union(&[b, c])?, &abc);
    let b_pos = positions(&sorted_union(&[b])?, &abc);
    let g_abc = cov.restrict(&abc)?;
    let h_ab = pad_into(&entanglement_kernel(&g_abc.restrict(&ab_pos)?)?, &ab_pos, n);
    let h_bc = pad_into(&entanglement_kernel(&g_abc.restrict(&bc_pos)?)?, &bc_pos, n);
    let h_b = pad_into(&entanglement_kernel(&g_abc.restrict(&b_pos)?)?, &b_pos, n);
    // ln rho_X = -K(h_X) - ln Z(h_X) with Z evaluated on the padded space.
    let m = &h_ab + &h_bc - &h_b;
    let ln_z_m = gaussian_ln_partition(&m)?;
    let ln_norm =
        gaussian_ln_partition(&h_ab)? + gaussian_ln_partition(&h_bc)? - gaussian_ln_partition(&h_b)?;
    let ln_tr_eta = ln_z_m - ln_norm;
    // D(rho || eta/Tr eta) = -S + <K(M)> + ln Z(M).
    let cmi = gaussian_cmi(cov, a, b, c)?;
    let s = gaussian_entropy(&g_abc)?;
    let d = -s + quadratic_expectation(&m, &g_abc) + ln_z_m;
    Ok(GtCheck {
        gt_trace: ln_tr_eta.exp(),
        rel_ent_identity_residual: (cmi - d + ln_tr_eta).abs(),
    })
}

/// Full Markov diagnostic suite for a Gaussian state.
pub fn markov_suite_gaussian(
    cov: &MajoranaCovariance,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    tol: f64,
) -> Result<MarkovReport> {
    let cmi = gaussian_cmi(cov, a, b, c)?;
    let petz = petz_residual_gaussian(cov, a, b, c)?;
    let gt = gt_lieb_check_gaussian(cov, a, b, c)?;
    let j = gaussian_modular_commutator(cov, a, b, c)?;
    let abc = sorted_union(&[a, b, c])?;
    let radius = cov.restrict(&abc)?.spectral_radius()?;
    MarkovReport {
        cmi_value: cmi,
        petz_residual: petz,
        gt_trace: gt.gt_trace,
        rel_ent_identity_residual: gt.rel_ent_identity_residual,
        j_value: j,
        // Pair values at 1 mean pure directions: the entanglement kernels
        // were clamped, the Gaussian analogue of support restriction.
        support_restricted: radius > 1.0 - 1e-9,
    }
    .validate(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{DensityOp, PureState, SiteLayout, DEFAULT_FLOOR};
    use crate::fermion::random_even_density;
    use crate::gaussian::{thermal_covariance, QuadraticHam};
    use ndarray::{Array1, Array2};
    use num_complex::Complex64;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_density_mat(rng: &mut ChaCha8Rng, dim: usize) -> Array2<Complex64> {
        let mut g = Array2::<Complex64>::zeros((dim, dim));
        for z in g.iter_mut() {
            *z = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        let adj = g.mapv(|z| z.conj());
        let mut w = g.dot(&adj.t());
        let tr: Complex64 = w.diag().sum();
        w.mapv_inplace(|z| z / tr.re);
        w
    }

    fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
        let (ra, ca) = a.dim();
        let (rb, cb) = b.dim();
        let mut out = Array2::zeros((ra * rb, ca * cb));
        for ((i, j), &x) in a.indexed_iter() {
            for ((k, l), &y) in b.indexed_iter() {
                out[(i * rb + k, j * cb + l)] = x * y;
            }
        }
        out
    }

    /// Exact Markov state rho_AB1 (x) rho_B2C on four qubits with
    /// A = {0}, B = {1, 2}, C = {3}.
    fn markov_state(rng: &mut ChaCha8Rng) -> QuditState {
        let left = random_density_mat(rng, 4);
        let right = random_density_mat(rng, 4);
        let mat = kron(&left, &right);
        QuditState::Mixed(DensityOp::new(SiteLayout::qubits(4).unwrap(), mat).unwrap())
    }

    fn ghz() -> QuditState {
        let layout = SiteLayout::qubits(3).unwrap();
        let mut amps = Array1::zeros(8);
        amps[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[7] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        QuditState::Pure(PureState::new(layout, amps).unwrap())
    }

    #[test]
    fn product_state_reports_all_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mat = kron(
            &kron(&random_density_mat(&mut rng, 2), &random_density_mat(&mut rng, 2)),
            &random_density_mat(&mut rng, 2),
        );
        let state =
            QuditState::Mixed(DensityOp::new(SiteLayout::qubits(3).unwrap(), mat).unwrap());
        let report =
            markov_suite(&state, &[0], &[1], &[2], DEFAULT_FLOOR, TOL).unwrap();
        assert!(report.cmi_value.abs() < 1e-10, "cmi {}", report.cmi_value);
        assert!(report.petz_residual < 1e-10, "petz {}", report.petz_residual);
        assert!((report.gt_trace - 1.0).abs() < 1e-9, "gt {}", report.gt_trace);
        assert!(report.rel_ent_identity_residual < 1e-9);
        assert!(report.j_value.abs() < 1e-10);
        assert!(!report.support_restricted);
    }

    #[test]
    fn constructed_markov_state_passes_all_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..5 {
            let state = markov_state(&mut rng);
            let report =
                markov_suite(&state, &[0], &[1, 2], &[3], DEFAULT_FLOOR, TOL).unwrap();
            assert!(report.cmi_value.abs() < 1e-10, "cmi {}", report.cmi_value);
            assert!(report.petz_residual < 1e-8, "petz {}", report.petz_residual);
            assert!(
                (report.gt_trace - 1.0).abs() < 1e-9,
                "gt {}",
                report.gt_trace
            );
            assert!(report.rel_ent_identity_residual < 1e-9);
            assert!(report.j_value.abs() < 1e-8, "J {}", report.j_value);
        }
    }

    #[test]
    fn ghz_state_report() {
        let state = ghz();
        let report = markov_suite(&state, &[0], &[1], &[2], DEFAULT_FLOOR, TOL).unwrap();
        assert!(
            (report.cmi_value - std::f64::consts::LN_2).abs() < 1e-10,
            "cmi {}",
            report.cmi_value
        );
        assert!(report.petz_residual > 0.1, "petz {}", report.petz_residual);
        assert!(report.gt_trace <= 1.0 + 1e-9, "gt {}", report.gt_trace);
        assert!(report.support_restricted);
    }

    #[test]
    fn maximally_mixed_state_has_unit_gt_trace() {
        let layout = SiteLayout::qubits(3).unwrap();
        let mat = Array2::<Complex64>::eye(8).mapv(|z| z / 8.0);
        let state = QuditState::Mixed(DensityOp::new(layout, mat).unwrap());
        let gt = gt_lieb_check(&state, &[0], &[1], &[2], DEFAULT_FLOOR).unwrap();
        assert!((gt.gt_trace - 1.0).abs() < 1e-12, "gt {}", gt.gt_trace);
        assert!(gt.rel_ent_identity_residual < 1e-12);
    }

    #[test]
    fn random_full_rank_states_obey_trace_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..5 {
            let mat = random_density_mat(&mut rng, 64);
            let state =
                QuditState::Mixed(DensityOp::new(SiteLayout::qubits(6).unwrap(), mat).unwrap());
            let gt =
                gt_lieb_check(&state, &[0, 1], &[2, 3], &[4, 5], DEFAULT_FLOOR).unwrap();
            assert!(gt.gt_trace <= 1.0 + 1e-9, "gt {}", gt.gt_trace);
            assert!(
                gt.rel_ent_identity_residual <= 1e-8,
                "residual {}",
                gt.rel_ent_identity_residual
            );
            // Generic states are strictly inside the inequality.
            assert!(gt.gt_trace < 1.0);
        }
    }

    #[test]
    fn trace_norm_dominates_operator_norm() {
        let state = ghz();
        let op_norm =
            petz_residual_with_norm(&state, &[0], &[1], &[2], DEFAULT_FLOOR, ResidualNorm::Operator)
                .unwrap();
        let tr_norm =
            petz_residual_with_norm(&state, &[0], &[1], &[2], DEFAULT_FLOOR, ResidualNorm::Trace)
                .unwrap();
        assert!(tr_norm >= op_norm - 1e-12);
        assert!(op_norm > 0.1);
    }

    #[test]
    fn fermionic_markov_product_passes_all_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        // Even-parity factors on modes {0,1} and {2,3}: with matched mode
        // ordering the fermionic product is the matrix Kronecker product.
        let left = random_even_density(&mut rng, 2).unwrap();
        let right = random_even_density(&mut rng, 2).unwrap();
        let op = FermionOp::new(4, kron(left.mat(), right.mat())).unwrap();
        let report =
            markov_suite_fermion(&op, &[0], &[1, 2], &[3], DEFAULT_FLOOR, TOL).unwrap();
        assert!(report.cmi_value.abs() < 1e-10, "cmi {}", report.cmi_value);
        assert!(report.petz_residual < 1e-8, "petz {}", report.petz_residual);
        assert!((report.gt_trace - 1.0).abs() < 1e-9, "gt {}", report.gt_trace);
        assert!(report.rel_ent_identity_residual < 1e-9);
        assert!(report.j_value.abs() < 1e-8, "J {}", report.j_value);
    }

    #[test]
    fn fermionic_generic_state_obeys_trace_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let op = random_even_density(&mut rng, 4).unwrap();
        let report =
            markov_suite_fermion(&op, &[0], &[1, 2], &[3], DEFAULT_FLOOR, TOL).unwrap();
        assert!(report.gt_trace <= 1.0 + 1e-9, "gt {}", report.gt_trace);
        assert!(report.cmi_value > 1e-3, "generic state should not be Markov");
        assert!(report.rel_ent_identity_residual < 1e-8);
    }

    #[test]
    fn gaussian_markov_block_product_passes_all_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        // Decoupled quadratic Hamiltonians on modes {0,1} and {2,3}.
        let mut ham = QuadraticHam::new(4);
        for (i, j) in [(0usize, 1usize), (2, 3)] {
            ham.add_number(i, 0.4 + rng.random::<f64>()).unwrap();
            ham.add_number(j, 0.4 + rng.random::<f64>()).unwrap();
            ham.add_hopping(i, j, c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .unwrap();
            ham.add_pairing(i, j, c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .unwrap();
        }
        let cov = thermal_covariance(&ham, 1.0).unwrap();
        let report = markov_suite_gaussian(&cov, &[0], &[1, 2], &[3], TOL).unwrap();
        assert!(report.cmi_value.abs() < 1e-10, "cmi {}", report.cmi_value);
        assert!(report.petz_residual < 1e-8, "petz {}", report.petz_residual);
        assert!((report.gt_trace - 1.0).abs() < 1e-9, "gt {}", report.gt_trace);
        assert!(report.rel_ent_identity_residual < 1e-8);
        assert!(report.j_value.abs() < 1e-8, "J {}", report.j_value);
    }

    #[test]
    fn gaussian_suite_matches_fermionic_dense_bridge() {
        use crate::gaussian::{gaussian_state_dense, random_quadratic_ham};
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let ham = random_quadratic_ham(&mut rng, 6, true);
        let cov = thermal_covariance(&ham, 1.0).unwrap();
        let rho = gaussian_state_dense(&cov).unwrap();
        let (a, b, cc) = (&[0usize, 1][..], &[2usize, 3][..], &[4usize, 5][..]);
        let g = markov_suite_gaussian(&cov, a, b, cc, TOL).unwrap();
        let f = markov_suite_fermion(&rho, a, b, cc, DEFAULT_FLOOR, TOL).unwrap();
        assert!((g.cmi_value - f.cmi_value).abs() < 1e-8, "cmi");
        assert!(
            (g.petz_residual - f.petz_residual).abs() < 1e-7,
            "petz {} vs {}",
            g.petz_residual,
            f.petz_residual
        );
        assert!(
            (g.gt_trace - f.gt_trace).abs() < 1e-8,
            "gt {} vs {}",
            g.gt_trace,
            f.gt_trace
        );
        assert!((g.j_value - f.j_value).abs() < 1e-8, "J");
        assert!(g.rel_ent_identity_residual < 1e-8);
        assert!(f.rel_ent_identity_residual < 1e-8);
        // Generic thermal states sit strictly inside the inequality.
        assert!(g.gt_trace < 1.0);
    }

    #[test]
    fn report_serializes_with_camel_case_keys() {
        let report = MarkovReport {
            cmi_value: 0.0,
            petz_residual: 0.0,
            gt_trace: 1.0,
            rel_ent_identity_residual: 0.0,
            j_value: 0.0,
            support_restricted: false,
        };
        let json = serde_json::to_string(&report).unwrap();
        for key in [
            "cmiValue",
            "petzResidual",
            "gtTrace",
            "relEntIdentityResidual",
            "jValue",
            "supportRestricted",
        ] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
    }
}
