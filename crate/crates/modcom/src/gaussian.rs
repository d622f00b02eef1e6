//! Free-fermion (Gaussian) backend on Majorana covariance matrices.
//!
//! Majorana index convention: mode `m` owns `gamma_{2m} = c_m` and
//! `gamma_{2m+1} = d_m`, matching [`crate::fermion::majorana`].
//!
//! * Quadratic Hamiltonians are stored as `H = (i/4) gamma^T A gamma` with
//!   `A` real antisymmetric (scalar offsets are dropped; they never affect
//!   commutators, covariances, or information quantities).
//! * States are covariance matrices `Gamma_jk = (i/2) Tr(rho [gamma_j,
//!   gamma_k])`.
//! * The ground state of a gapped kernel is `Gamma = -sgn_pair(A)`; a
//!   thermal state is `Gamma = -tanh_pair(beta A / 2)`.
//! * The entanglement kernel of a reduced covariance is
//!   `h = -2 artanh_pair(Gamma)`, i.e. the reduced state is
//!   `exp(-(i/4) gamma^T h gamma)` up to normalization.
//! * The modular commutator of three disjoint mode blocks is
//!
//!   ```text
//!   J(A,B,C) = (1/4) tr([h_AB, h_BC] Gamma_ABC)
//!   ```
//!
//!   with each entanglement kernel zero-padded to the ABC support.
//!
//! `f_pair` applies an odd scalar function to the antisymmetric pair
//! structure: if `A = Q blkdiag([[0, v_k], [-v_k, 0]]) Q^T`, then
//! `f_pair(A) = Q blkdiag([[0, f(v_k)], [-f(v_k), 0]]) Q^T`. It is computed
//! as `-i f(iA)` through a complex Hermitian eigendecomposition.

use crate::dense;
use crate::error::{Error, Result};
use crate::fermion::{majorana, FermionOp};
use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// Pair values below this are treated as a vanishing many-body gap.
pub const GAP_FLOOR: f64 = 1e-10;

/// Covariance pair values are clamped to `1 - KERNEL_CLAMP` before the
/// inverse hyperbolic tangent when building entanglement kernels.
pub const KERNEL_CLAMP: f64 = 1e-12;

fn check_antisymmetric(mat: &Array2<f64>) -> Result<()> {
    if mat.nrows() != mat.ncols() || mat.nrows() % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: mat.nrows() + (mat.nrows() % 2),
            got: mat.ncols(),
        });
    }
    let mut defect = 0.0f64;
    for i in 0..mat.nrows() {
        for j in 0..=i {
            defect = defect.max((mat[(i, j)] + mat[(j, i)]).abs());
        }
    }
    if defect > 1e-10 {
        return Err(Error::NotAntisymmetric(defect));
    }
    Ok(())
}

/// Apply an odd scalar function to a real antisymmetric matrix through its
/// pair structure (see module docs).
pub fn pair_function(a: &Array2<f64>, f: impl Fn(f64) -> f64) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut ia = Array2::<Complex64>::zeros((n, n));
    for ((i, j), &v) in a.indexed_iter() {
        ia[(i, j)] = Complex64::new(0.0, v);
    }
    let (vals, vecs) = dense::eigh(&ia)?;
    let out_c = dense::spectral_assemble(&vals.mapv(&f), &vecs);
    // -i f(iA) is real antisymmetric for odd f; residual imaginary parts
    // are numerical noise.
    let mut out = Array2::<f64>::zeros((n, n));
    let mut imag = 0.0f64;
    let mut scale = 1.0f64;
    for ((i, j), &z) in out_c.indexed_iter() {
        let w = Complex64::new(0.0, -1.0) * z;
        out[(i, j)] = w.re;
        imag = imag.max(w.im.abs());
        scale = scale.max(w.re.abs());
    }
    // This residual separates programming errors (non-odd f, conjugation
    // slips: order one relative to the output) from conditioning noise. The
    // latter can reach ~1e-6 relative for steep functions: a clamped artanh
    // on a nearly pure state has derivative ~1/KERNEL_CLAMP at the clamp,
    // amplifying machine-epsilon eigenvalue jitter within degenerate pairs.
    if imag > 1e-4 * scale {
        return Err(Error::Linalg(format!(
            "pair function lost antisymmetry (imag {imag:.3e}, scale {scale:.3e})"
        )));
    }
    // Exact antisymmetrization to kill round-off.
    let t = out.t().to_owned();
    Ok((&out - &t) / 2.0)
}

/// The pair values (non-negative) of a real antisymmetric matrix: the
/// spectrum of `iA` is `{+v_k, -v_k}`; this returns all eigenvalues.
pub fn pair_spectrum(a: &Array2<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    let mut ia = Array2::<Complex64>::zeros((n, n));
    for ((i, j), &v) in a.indexed_iter() {
        ia[(i, j)] = Complex64::new(0.0, v);
    }
    dense::eigvalsh(&ia)
}

// ---------------------------------------------------------------------------
// Quadratic Hamiltonians
// ---------------------------------------------------------------------------

/// A quadratic fermion Hamiltonian `H = (i/4) gamma^T A gamma` (scalar
/// offsets dropped).
#[derive(Debug, Clone)]
pub struct QuadraticHam {
    n_modes: usize,
    kernel: Array2<f64>,
}

impl QuadraticHam {
    pub fn new(n_modes: usize) -> Self {
        QuadraticHam {
            n_modes,
            kernel: Array2::zeros((2 * n_modes, 2 * n_modes)),
        }
    }

    pub fn from_kernel(kernel: Array2<f64>) -> Result<Self> {
        check_antisymmetric(&kernel)?;
        let n_modes = kernel.nrows() / 2;
        // Antisymmetrize exactly.
        let t = kernel.t().to_owned();
        Ok(QuadraticHam {
            n_modes,
            kernel: (&kernel - &t) / 2.0,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn kernel(&self) -> &Array2<f64> {
        &self.kernel
    }

    fn add_antisym(&mut self, p: usize, q: usize, val: f64) {
        self.kernel[(p, q)] += val;
        self.kernel[(q, p)] -= val;
    }

    /// Add `t a^dag_i a_j + conj(t) a^dag_j a_i` for `i != j`.
    pub fn add_hopping(&mut self, i: usize, j: usize, t: Complex64) -> Result<()> {
        if i == j || i >= self.n_modes || j >= self.n_modes {
            return Err(Error::ModeOutOfRange(i.max(j), self.n_modes));
        }
        let (ci, di, cj, dj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
        self.add_antisym(ci, cj, t.im);
        self.add_antisym(di, dj, t.im);
        self.add_antisym(ci, dj, t.re);
        self.add_antisym(di, cj, -t.re);
        Ok(())
    }

    /// Add `delta a^dag_i a^dag_j + conj(delta) a_j a_i` for `i != j`.
    pub fn add_pairing(&mut self, i: usize, j: usize, delta: Complex64) -> Result<()> {
        if i == j || i >= self.n_modes || j >= self.n_modes {
            return Err(Error::ModeOutOfRange(i.max(j), self.n_modes));
        }
        let (ci, di, cj, dj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
        self.add_antisym(ci, cj, delta.im);
        self.add_antisym(di, dj, -delta.im);
        self.add_antisym(ci, dj, -delta.re);
        self.add_antisym(di, cj, -delta.re);
        Ok(())
    }

    /// Add `e n_j` (the scalar `e/2` is dropped).
    pub fn add_number(&mut self, j: usize, e: f64) -> Result<()> {
        if j >= self.n_modes {
            return Err(Error::ModeOutOfRange(j, self.n_modes));
        }
        self.add_antisym(2 * j, 2 * j + 1, e);
        Ok(())
    }

    /// Dense Fock-space matrix `(i/4) sum_jk A_jk gamma_j gamma_k`
    /// (small systems; used as the ground truth in tests).
    pub fn dense(&self) -> Result<FermionOp> {
        let dim = 1usize << self.n_modes;
        let gammas: Vec<Array2<Complex64>> = (0..2 * self.n_modes)
            .map(|k| Ok(majorana(self.n_modes, k)?.to_matrix()))
            .collect::<Result<Vec<_>>>()?;
        let mut h = Array2::<Complex64>::zeros((dim, dim));
        for j in 0..2 * self.n_modes {
            for k in 0..2 * self.n_modes {
                let a = self.kernel[(j, k)];
                if a == 0.0 {
                    continue;
                }
                let prod = gammas[j].dot(&gammas[k]);
                h.scaled_add(Complex64::new(0.0, 0.25 * a), &prod);
            }
        }
        FermionOp::new(self.n_modes, h)
    }
}

// ---------------------------------------------------------------------------
// Covariance matrices
// ---------------------------------------------------------------------------

/// A Majorana covariance matrix `Gamma_jk = (i/2) Tr(rho [gamma_j,
/// gamma_k])`: real, antisymmetric, with pair values in `[0, 1]`
/// (1 = pure pair).
#[derive(Debug, Clone)]
pub struct MajoranaCovariance {
    n_modes: usize,
    mat: Array2<f64>,
}

impl MajoranaCovariance {
    pub fn new(mat: Array2<f64>) -> Result<Self> {
        check_antisymmetric(&mat)?;
        let n_modes = mat.nrows() / 2;
        Ok(MajoranaCovariance { n_modes, mat })
    }

    /// Extract the covariance of a dense fermionic density operator.
    pub fn from_dense(rho: &FermionOp) -> Result<Self> {
        let n = rho.n_modes();
        let mut mat = Array2::<f64>::zeros((2 * n, 2 * n));
        let perms: Vec<crate::fermion::SignedPerm> =
            (0..2 * n).map(|k| majorana(n, k)).collect::<Result<_>>()?;
        for j in 0..2 * n {
            for k in (j + 1)..2 * n {
                // (i/2) tr(rho [g_j, g_k]) = i tr(rho g_j g_k) for j != k.
                let prod = perms[j].compose(&perms[k]);
                let mut tr = Complex64::default();
                for x in 0..prod.dim() {
                    tr += prod.phase_at(x) * rho.mat()[(x, prod.perm_at(x))];
                }
                let v = Complex64::i() * tr;
                mat[(j, k)] = v.re;
                mat[(k, j)] = -v.re;
            }
        }
        MajoranaCovariance::new(mat)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mat(&self) -> &Array2<f64> {
        &self.mat
    }

    /// Principal submatrix on the given modes (ascending).
    pub fn restrict(&self, modes: &[usize]) -> Result<MajoranaCovariance> {
        for w in modes.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Malformed("mode list must be strictly ascending".into()));
            }
        }
        if let Some(&m) = modes.last() {
            if m >= self.n_modes {
                return Err(Error::ModeOutOfRange(m, self.n_modes));
            }
        }
        let rows: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let k = rows.len();
        let mut sub = Array2::zeros((k, k));
        for (a, &ra) in rows.iter().enumerate() {
            for (b, &rb) in rows.iter().enumerate() {
                sub[(a, b)] = self.mat[(ra, rb)];
            }
        }
        MajoranaCovariance::new(sub)
    }

    /// Deviation from purity: for a pure Gaussian state `Gamma^2 = -1`.
    pub fn purity_defect(&self) -> f64 {
        let sq = self.mat.dot(&self.mat);
        let mut defect = 0.0f64;
        for ((i, j), &v) in sq.indexed_iter() {
            let want = if i == j { -1.0 } else { 0.0 };
            defect = defect.max((v - want).abs());
        }
        defect
    }

    /// Covariance of the complex-conjugated state: `c` Majoranas are real
    /// and `d` Majoranas imaginary in the occupation basis, so conjugation
    /// flips the sign of every c-d and d-c entry.
    pub fn conjugated(&self) -> MajoranaCovariance {
        let mut mat = self.mat.clone();
        for ((i, j), v) in mat.indexed_iter_mut() {
            let s = if (i % 2) == (j % 2) { 1.0 } else { -1.0 };
            *v *= -s;
        }
        MajoranaCovariance {
            n_modes: self.n_modes,
            mat,
        }
    }

    /// Largest absolute pair value (must be <= 1 + numerical noise).
    pub fn spectral_radius(&self) -> Result<f64> {
        let vals = pair_spectrum(&self.mat)?;
        Ok(vals.iter().fold(0.0f64, |m, &v| m.max(v.abs())))
    }
}

/// Ground-state covariance of a gapped quadratic Hamiltonian:
/// `Gamma = -sgn_pair(A)`. Errors with [`Error::GaplessKernel`] when the
/// smallest pair value is below [`GAP_FLOOR`].
pub fn ground_covariance(ham: &QuadraticHam) -> Result<MajoranaCovariance> {
    let spec = pair_spectrum(ham.kernel())?;
    let min_gap = spec.iter().fold(f64::INFINITY, |m, &v| m.min(v.abs()));
    if min_gap < GAP_FLOOR {
        return Err(Error::GaplessKernel(min_gap));
    }
    let g = pair_function(ham.kernel(), |v| -v.signum())?;
    MajoranaCovariance::new(g)
}

/// Thermal covariance `Gamma = -tanh_pair(beta A / 2)`.
pub fn thermal_covariance(ham: &QuadraticHam, beta: f64) -> Result<MajoranaCovariance> {
    let g = pair_function(ham.kernel(), |v| -(beta * v / 2.0).tanh())?;
    MajoranaCovariance::new(g)
}

/// Von Neumann entropy (nats) of a Gaussian state.
pub fn gaussian_entropy(cov: &MajoranaCovariance) -> Result<f64> {
    let vals = pair_spectrum(cov.mat())?;
    let h2 = |p: f64| -> f64 {
        let mut s = 0.0;
        if p > 0.0 {
            s -= p * p.ln();
        }
        if p < 1.0 {
            s -= (1.0 - p) * (1.0 - p).ln();
        }
        s
    };
    // Eigenvalues of i Gamma come in +/- pairs; halve the full sum.
    Ok(vals
        .iter()
        .map(|&v| 0.5 * h2(((1.0 + v.abs().min(1.0)) / 2.0).clamp(0.0, 1.0)))
        .sum())
}

/// Entanglement kernel `h = -2 artanh_pair(Gamma)`: the reduced state is
/// `exp(-(i/4) gamma^T h gamma)` up to normalization. Pair values are
/// clamped to `1 - KERNEL_CLAMP` (the Gaussian analogue of the dense
/// spectral floor).
pub fn entanglement_kernel(cov: &MajoranaCovariance) -> Result<Array2<f64>> {
    let clamp = 1.0 - KERNEL_CLAMP;
    pair_function(cov.mat(), |v| {
        let x = v.clamp(-clamp, clamp);
        -2.0 * x.atanh()
    })
}

/// Expectation `<(i/4) gamma^T A gamma> = -(1/4) tr(A Gamma)`.
pub fn quadratic_expectation(a: &Array2<f64>, cov: &MajoranaCovariance) -> f64 {
    let prod = a.dot(cov.mat());
    -0.25 * prod.diag().sum()
}

fn sorted_union(parts: &[&[usize]]) -> Result<Vec<usize>> {
    let mut all: Vec<usize> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    let len = all.len();
    all.sort_unstable();
    all.dedup();
    if all.len() != len {
        return Err(Error::BlocksOverlap);
    }
    Ok(all)
}

/// Zero-pad a kernel on `sub` modes into the index space of `ambient`
/// modes (both ascending; `sub` must be a subset of `ambient`).
fn pad_kernel(kernel: &Array2<f64>, sub: &[usize], ambient: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((2 * ambient.len(), 2 * ambient.len()));
    let pos: Vec<usize> = sub
        .iter()
        .map(|m| ambient.binary_search(m).expect("subset of ambient"))
        .collect();
    for (a, &pa) in pos.iter().enumerate() {
        for (b, &pb) in pos.iter().enumerate() {
            for ra in 0..2 {
                for rb in 0..2 {
                    out[(2 * pa + ra, 2 * pb + rb)] = kernel[(2 * a + ra, 2 * b + rb)];
                }
            }
        }
    }
    out
}

/// Conditional mutual information `I(A : C | B)` of mode blocks.
pub fn gaussian_cmi(
    cov: &MajoranaCovariance,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<f64> {
    let ab = sorted_union(&[a, b])?;
    let bc = sorted_union(&[b, c])?;
    let abc = sorted_union(&[a, b, c])?;
    Ok(gaussian_entropy(&cov.restrict(&ab)?)? + gaussian_entropy(&cov.restrict(&bc)?)?
        - gaussian_entropy(&cov.restrict(b)?)?
        - gaussian_entropy(&cov.restrict(&abc)?)?)
}

/// Tripartite entropy combination `S_A + S_B + S_C - S_AB - S_BC - S_CA +
/// S_ABC` of mode blocks; on a disk tripartition of a gapped ground state
/// it converges to minus the topological entanglement entropy.
pub fn gaussian_kitaev_preskill(
    cov: &MajoranaCovariance,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<f64> {
    let ab = sorted_union(&[a, b])?;
    let bc = sorted_union(&[b, c])?;
    let ca = sorted_union(&[c, a])?;
    let abc = sorted_union(&[a, b, c])?;
    Ok(gaussian_entropy(&cov.restrict(a)?)?
        + gaussian_entropy(&cov.restrict(b)?)?
        + gaussian_entropy(&cov.restrict(c)?)?
        - gaussian_entropy(&cov.restrict(&ab)?)?
        - gaussian_entropy(&cov.restrict(&bc)?)?
        - gaussian_entropy(&cov.restrict(&ca)?)?
        + gaussian_entropy(&cov.restrict(&abc)?)?)
}

/// Modular commutator `J(A,B,C) = (1/4) tr([h_AB, h_BC] Gamma_ABC)` of
/// disjoint mode blocks.
pub fn gaussian_modular_commutator(
    cov: &MajoranaCovariance,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<f64> {
    let ab = sorted_union(&[a, b])?;
    let bc = sorted_union(&[b, c])?;
    sorted_union(&[a, b, c])?;
    gaussian_kernel_commutator(cov, &ab, &bc)
}

/// `i <[K_X, K_Y]>` where `K_X` is the entanglement kernel of the modes in
/// `x`. Unlike the three-block commutator, `x` and `y` may overlap
/// arbitrarily; each list must be strictly ascending.
pub fn gaussian_kernel_commutator(
    cov: &MajoranaCovariance,
    x: &[usize],
    y: &[usize],
) -> Result<f64> {
    let mut union: Vec<usize> = x.iter().chain(y.iter()).copied().collect();
    union.sort_unstable();
    union.dedup();
    let h_x = entanglement_kernel(&cov.restrict(x)?)?;
    let h_y = entanglement_kernel(&cov.restrict(y)?)?;
    let h1 = pad_kernel(&h_x, x, &union);
    let h2 = pad_kernel(&h_y, y, &union);
    let gamma = cov.restrict(&union)?;
    let comm = h1.dot(&h2) - h2.dot(&h1);
    let prod = comm.dot(gamma.mat());
    Ok(0.25 * prod.diag().sum())
}

/// Chiral central charge estimate `c_minus = 3 J(A,B,C) / pi`.
pub fn gaussian_chiral_central_charge(
    cov: &MajoranaCovariance,
    a: &[usize],
    b: &[usize],
    c: &[usize],
) -> Result<f64> {
    Ok(3.0 * gaussian_modular_commutator(cov, a, b, c)? / std::f64::consts::PI)
}

/// Random quadratic Hamiltonian with order-one couplings: on-site
/// energies, complex hoppings, and (optionally) complex pairings between
/// every mode pair.
pub fn random_quadratic_ham(
    rng: &mut impl rand::Rng,
    n_modes: usize,
    with_pairing: bool,
) -> QuadraticHam {
    let mut ham = QuadraticHam::new(n_modes);
    for i in 0..n_modes {
        ham.add_number(i, 2.0 * (rng.random::<f64>() - 0.5)).unwrap();
        for j in (i + 1)..n_modes {
            let t = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            ham.add_hopping(i, j, t).unwrap();
            if with_pairing {
                let d = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                ham.add_pairing(i, j, d).unwrap();
            }
        }
    }
    ham
}

/// Dense density operator of a Gaussian state (small systems; ground truth
/// for tests): `rho = exp(-(i/4) gamma^T h gamma) / Z` with
/// `h = -2 artanh_pair(Gamma)`.
pub fn gaussian_state_dense(cov: &MajoranaCovariance) -> Result<FermionOp> {
    let h = entanglement_kernel(cov)?;
    let ham = QuadraticHam::from_kernel(h)?;
    let hd = ham.dense()?;
    let mut rho = dense::hermitian_function(hd.mat(), |e| (-e).exp())?;
    let tr: Complex64 = rho.diag().sum();
    rho.mapv_inplace(|z| z / tr.re);
    FermionOp::new(cov.n_modes(), rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DEFAULT_FLOOR;
    use crate::fermion::{
        fermion_cmi, fermion_entropy, fermion_modular_commutator, fermionic_rdm,
    };
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    fn random_ham(rng: &mut ChaCha8Rng, n: usize, with_pairing: bool) -> QuadraticHam {
        random_quadratic_ham(rng, n, with_pairing)
    }

    #[test]
    fn pair_function_identity_and_sign_on_two_by_two() {
        let a = ndarray::array![[0.0, 0.7], [-0.7, 0.0]];
        let id = pair_function(&a, |v| v).unwrap();
        assert!(max_abs(&(&id - &a)) < 1e-12);
        let sg = pair_function(&a, |v| v.signum()).unwrap();
        let expect = ndarray::array![[0.0, 1.0], [-1.0, 0.0]];
        assert!(max_abs(&(&sg - &expect)) < 1e-12);
    }

    #[test]
    fn dense_bridge_is_hermitian_and_matches_number_operator() {
        // H = e n_0 on two modes: dense form must be e (1 - Z_0)/2 - e/2
        // = -(e/2) Z_0 shifted; our convention drops the scalar, so the
        // dense matrix is diag with entries -(e/2) (+e/2) on bit 0.
        let mut ham = QuadraticHam::new(2);
        ham.add_number(0, 1.3).unwrap();
        let hd = ham.dense().unwrap();
        for x in 0..4usize {
            let occ = (x >> 1) & 1;
            let want = if occ == 1 { 0.65 } else { -0.65 };
            assert!((hd.mat()[(x, x)] - c(want, 0.0)).norm() < 1e-14, "x={x}");
        }
        // Random Hamiltonian: dense form is Hermitian.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ham = random_ham(&mut rng, 3, true);
        let hd = ham.dense().unwrap();
        let adj = hd.mat().t().mapv(|z| z.conj());
        let defect = (hd.mat() - &adj).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(defect < 1e-13);
    }

    #[test]
    fn ground_covariance_matches_dense_ground_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2usize, 3, 4] {
            let ham = random_ham(&mut rng, n, true);
            let cov = ground_covariance(&ham).unwrap();
            assert!(cov.purity_defect() < 1e-10);

            // Dense ground state from the Fock-space matrix.
            let hd = ham.dense().unwrap();
            let (vals, vecs) = dense::eigh(hd.mat()).unwrap();
            assert!(
                vals[1] - vals[0] > 1e-6,
                "nondegenerate ground state expected"
            );
            let dim = 1usize << n;
            let mut rho = Array2::<Complex64>::zeros((dim, dim));
            for x in 0..dim {
                for y in 0..dim {
                    rho[(x, y)] = vecs[(x, 0)] * vecs[(y, 0)].conj();
                }
            }
            let rho = FermionOp::new(n, rho).unwrap();
            let cov_dense = MajoranaCovariance::from_dense(&rho).unwrap();
            let diff = max_abs(&(cov.mat() - cov_dense.mat()));
            assert!(diff < 1e-10, "n={n}: {diff:.3e}");
        }
    }

    #[test]
    fn thermal_covariance_matches_dense_gibbs_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 3;
        let beta = 1.7;
        let ham = random_ham(&mut rng, n, true);
        let cov = thermal_covariance(&ham, beta).unwrap();
        let hd = ham.dense().unwrap();
        let mut rho = dense::hermitian_function(hd.mat(), |e| (-beta * e).exp()).unwrap();
        let tr: Complex64 = rho.diag().sum();
        rho.mapv_inplace(|z| z / tr.re);
        let rho = FermionOp::new(n, rho).unwrap();
        let cov_dense = MajoranaCovariance::from_dense(&rho).unwrap();
        assert!(max_abs(&(cov.mat() - cov_dense.mat())) < 1e-11);

        // Entropy agreement.
        let s_g = gaussian_entropy(&cov).unwrap();
        let evals = dense::eigvalsh(rho.mat()).unwrap();
        let s_d: f64 = evals.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
        assert!((s_g - s_d).abs() < 1e-10, "{s_g} vs {s_d}");
    }

    #[test]
    fn vacuum_covariance_and_entropy() {
        let rho = FermionOp::vacuum(3).unwrap();
        let cov = MajoranaCovariance::from_dense(&rho).unwrap();
        // Gamma_{2m, 2m+1} = -1 for each mode, zero elsewhere.
        for j in 0..6 {
            for k in 0..6 {
                let want = if j + 1 == k && j % 2 == 0 {
                    -1.0
                } else if k + 1 == j && k % 2 == 0 {
                    1.0
                } else {
                    0.0
                };
                assert!((cov.mat()[(j, k)] - want).abs() < 1e-13, "({j},{k})");
            }
        }
        assert!(gaussian_entropy(&cov).unwrap().abs() < 1e-12);
        assert!(cov.purity_defect() < 1e-12);
    }

    #[test]
    fn entanglement_kernel_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ham = random_ham(&mut rng, 3, true);
        let cov = thermal_covariance(&ham, 2.0).unwrap();
        let h = entanglement_kernel(&cov).unwrap();
        // Gamma = -tanh_pair(h/2) reproduces the covariance.
        let back = pair_function(&h, |v| -(v / 2.0).tanh()).unwrap();
        assert!(max_abs(&(&back - cov.mat())) < 1e-10);
        // And the kernel equals 2 * beta A for beta = 2 (h = -2 artanh(-tanh(A)))
        let expect = ham.kernel() * 2.0;
        assert!(max_abs(&(&h - &expect)) < 1e-9);
    }

    #[test]
    fn restriction_matches_dense_reduced_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 4;
        let ham = random_ham(&mut rng, n, true);
        let cov = thermal_covariance(&ham, 1.0).unwrap();
        let rho = gaussian_state_dense(&cov).unwrap();
        for keep in [vec![0usize, 1], vec![1, 3], vec![0, 2, 3]] {
            let sub_cov = cov.restrict(&keep).unwrap();
            let sub_rho = fermionic_rdm(&rho, &keep).unwrap();
            let sub_cov_dense = MajoranaCovariance::from_dense(&sub_rho).unwrap();
            let diff = max_abs(&(sub_cov.mat() - sub_cov_dense.mat()));
            assert!(diff < 1e-10, "keep {keep:?}: {diff:.3e}");
            // Entropies agree too.
            let s_g = gaussian_entropy(&sub_cov).unwrap();
            let s_d = fermion_entropy(&rho, &keep).unwrap();
            assert!((s_g - s_d).abs() < 1e-9, "keep {keep:?}: {s_g} vs {s_d}");
        }
    }

    #[test]
    fn gaussian_cmi_and_commutator_match_dense_backend() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 6;
        let ham = random_ham(&mut rng, n, true);
        let cov = thermal_covariance(&ham, 1.0).unwrap();
        let rho = gaussian_state_dense(&cov).unwrap();
        let (a, b, cc) = (&[0usize, 1][..], &[2usize, 3][..], &[4usize, 5][..]);

        let cmi_g = gaussian_cmi(&cov, a, b, cc).unwrap();
        let cmi_d = fermion_cmi(&rho, a, b, cc).unwrap();
        assert!((cmi_g - cmi_d).abs() < 1e-8, "cmi {cmi_g} vs {cmi_d}");

        let j_g = gaussian_modular_commutator(&cov, a, b, cc).unwrap();
        let j_d = fermion_modular_commutator(&rho, a, b, cc, DEFAULT_FLOOR).unwrap();
        assert!((j_g - j_d).abs() < 1e-8, "J {j_g} vs {j_d}");

        // Antisymmetry and conjugation-oddness at the Gaussian level.
        let j_rev = gaussian_modular_commutator(&cov, cc, b, a).unwrap();
        assert!((j_g + j_rev).abs() < 1e-10);
        let j_conj = gaussian_modular_commutator(&cov.conjugated(), a, b, cc).unwrap();
        assert!((j_g + j_conj).abs() < 1e-10);
    }

    #[test]
    fn tripartite_entropy_combination_matches_dense_and_vanishes_when_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ham = random_ham(&mut rng, 6, true);
        let (a, b, cc) = (&[0usize, 1][..], &[2usize, 3][..], &[4usize, 5][..]);

        // Thermal state: match the dense fermionic entropy combination.
        let cov = thermal_covariance(&ham, 0.8).unwrap();
        let rho = gaussian_state_dense(&cov).unwrap();
        let kp_g = gaussian_kitaev_preskill(&cov, a, b, cc).unwrap();
        let ent = |modes: &[usize]| fermion_entropy(&rho, modes).unwrap();
        let kp_d = ent(a) + ent(b) + ent(cc) - ent(&[0, 1, 2, 3]) - ent(&[2, 3, 4, 5])
            - ent(&[0, 1, 4, 5])
            + ent(&[0, 1, 2, 3, 4, 5]);
        assert!((kp_g - kp_d).abs() < 1e-8, "kp {kp_g} vs dense {kp_d}");

        // Pure state covering all modes: the combination cancels exactly.
        let pure = ground_covariance(&ham).unwrap();
        let kp_pure = gaussian_kitaev_preskill(&pure, a, b, cc).unwrap();
        assert!(kp_pure.abs() < 1e-9, "pure-state combination {kp_pure:.3e}");
    }

    #[test]
    fn conjugated_covariance_matches_dense_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let ham = random_ham(&mut rng, 3, true);
        let cov = thermal_covariance(&ham, 1.0).unwrap();
        let rho = gaussian_state_dense(&cov).unwrap();
        let cov_conj_dense = MajoranaCovariance::from_dense(&rho.conjugate()).unwrap();
        assert!(max_abs(&(cov.conjugated().mat() - cov_conj_dense.mat())) < 1e-10);
    }

    #[test]
    fn quadratic_expectation_matches_dense_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ham = random_ham(&mut rng, 3, true);
        let obs = random_ham(&mut rng, 3, true);
        let cov = thermal_covariance(&ham, 1.3).unwrap();
        let rho = gaussian_state_dense(&cov).unwrap();
        let od = obs.dense().unwrap();
        let dense_val: Complex64 = rho.mat().dot(od.mat()).diag().sum();
        let g_val = quadratic_expectation(obs.kernel(), &cov);
        assert!(
            (g_val - dense_val.re).abs() < 1e-10,
            "{g_val} vs {dense_val}"
        );
        assert!(dense_val.im.abs() < 1e-12);
    }

    #[test]
    fn gapless_kernel_is_rejected() {
        // Zero Hamiltonian has no gap.
        let ham = QuadraticHam::new(2);
        match ground_covariance(&ham) {
            Err(Error::GaplessKernel(_)) => {}
            other => panic!("expected GaplessKernel, got {other:?}"),
        }
    }

    #[test]
    fn real_hopping_states_have_zero_commutator() {
        // With purely real hopping amplitudes the state is conjugation
        // invariant, so J must vanish.
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let n = 6;
        let mut ham = QuadraticHam::new(n);
        for i in 0..n {
            ham.add_number(i, 0.5 + rng.random::<f64>()).unwrap();
            for j in (i + 1)..n {
                ham.add_hopping(i, j, c(rng.random::<f64>() - 0.5, 0.0)).unwrap();
            }
        }
        let cov = thermal_covariance(&ham, 1.0).unwrap();
        let j = gaussian_modular_commutator(&cov, &[0, 1], &[2, 3], &[4, 5]).unwrap();
        assert!(j.abs() < 1e-10, "J = {j}");
    }
}
