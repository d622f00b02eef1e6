//! Exact dense backend for small qudit systems.
//!
//! States live on a [`SiteLayout`] (one finite-dimensional factor per site,
//! row-major index order with site 0 slowest). The backend provides reduced
//! density matrices, von Neumann entropies in nats, conditional mutual
//! information, modular Hamiltonians `K = -ln rho` with a spectral floor,
//! and the modular commutator
//!
//! ```text
//! J(A, B, C) = i Tr(rho_ABC [K_AB, K_BC]),
//! ```
//!
//! together with the chiral-central-charge estimate `c_minus = 3 J / pi`.
//!
//! Everything here is exact diagonalization; the total dimension is capped
//! at 2^14. Larger systems belong to the Gaussian backend.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

/// Spectral floor used when taking operator logarithms: eigenvalues of a
/// density matrix below this value are treated as part of the kernel.
pub const DEFAULT_FLOOR: f64 = 1e-12;

/// Hard cap on the total Hilbert-space dimension of the dense backend.
/// Amplitude vectors may use the full cap; operator-valued routines should
/// stay far below it (a reduced density matrix of dimension `d` costs
/// `d^2` complex entries), which the pure-state reductions arrange by
/// diagonalizing the smaller side of each bipartition.
pub const DIM_CAP: usize = 1 << 16;

/// Per-site local dimensions of a finite qudit system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteLayout {
    dims: Vec<usize>,
}

impl SiteLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::Malformed("site dimensions must be >= 2".into()));
        }
        let layout = SiteLayout { dims };
        layout.total_dim()?;
        Ok(layout)
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn uniform(n_sites: usize, local_dim: usize) -> Result<Self> {
        Self::new(vec![local_dim; n_sites])
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> Result<usize> {
        let mut d: usize = 1;
        for &k in &self.dims {
            d = d
                .checked_mul(k)
                .filter(|&d| d <= DIM_CAP)
                .ok_or(Error::DimTooLarge(usize::MAX, DIM_CAP))?;
        }
        Ok(d)
    }

    /// Row-major strides: site 0 is the slowest index.
    fn strides(&self) -> Vec<usize> {
        let n = self.dims.len();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        strides
    }

    /// Layout of a subset of sites (given in ascending order).
    pub fn sub(&self, sites: &[usize]) -> Result<SiteLayout> {
        let dims = sites
            .iter()
            .map(|&s| {
                self.dims
                    .get(s)
                    .copied()
                    .ok_or(Error::SiteOutOfRange(s, self.dims.len()))
            })
            .collect::<Result<Vec<_>>>()?;
        SiteLayout::new(dims)
    }

    fn check_subset(&self, sites: &[usize]) -> Result<()> {
        for w in sites.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Malformed(
                    "site subset must be strictly ascending".into(),
                ));
            }
        }
        if let Some(&last) = sites.last() {
            if last >= self.dims.len() {
                return Err(Error::SiteOutOfRange(last, self.dims.len()));
            }
        }
        Ok(())
    }

    /// Flat-index offsets contributed by a subset of sites: entry `m` is the
    /// full-space offset of the subset configuration with mixed-radix index
    /// `m` (subset sites in ascending order, first subset site slowest).
    /// Returns the offsets together with the complement-site offsets.
    fn split_offsets(&self, sites: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
        self.check_subset(sites)?;
        let strides = self.strides();
        let in_subset: Vec<bool> = {
            let mut mask = vec![false; self.dims.len()];
            for &s in sites {
                mask[s] = true;
            }
            mask
        };
        let offsets_for = |selected: bool| -> Vec<usize> {
            let mut offs = vec![0usize];
            for (site, &dim) in self.dims.iter().enumerate() {
                if in_subset[site] != selected {
                    continue;
                }
                let mut next = Vec::with_capacity(offs.len() * dim);
                for &o in &offs {
                    for v in 0..dim {
                        next.push(o + v * strides[site]);
                    }
                }
                offs = next;
            }
            offs
        };
        Ok((offsets_for(true), offsets_for(false)))
    }
}

/// A normalized pure state.
#[derive(Debug, Clone)]
pub struct PureState {
    layout: SiteLayout,
    amps: Array1<Complex64>,
}

impl PureState {
    pub fn new(layout: SiteLayout, amps: Array1<Complex64>) -> Result<Self> {
        let dim = layout.total_dim()?;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: amps.len(),
            });
        }
        Ok(PureState { layout, amps })
    }

    /// Normalize in place and return the state.
    pub fn normalized(layout: SiteLayout, amps: Array1<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Malformed("zero state vector".into()));
        }
        Self::new(layout, amps / Complex64::new(norm, 0.0))
    }

    /// Computational basis state |index>.
    pub fn basis_state(layout: SiteLayout, index: usize) -> Result<Self> {
        let dim = layout.total_dim()?;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: index,
            });
        }
        let mut amps = Array1::zeros(dim);
        amps[index] = Complex64::new(1.0, 0.0);
        Self::new(layout, amps)
    }

    pub fn layout(&self) -> &SiteLayout {
        &self.layout
    }

    pub fn amps(&self) -> &Array1<Complex64> {
        &self.amps
    }

    /// Complex conjugation in the computational basis.
    pub fn conjugate(&self) -> PureState {
        PureState {
            layout: self.layout.clone(),
            amps: self.amps.mapv(|z| z.conj()),
        }
    }

    /// Reduced density matrix on `keep` (ascending site indices).
    pub fn rdm(&self, keep: &[usize]) -> Result<DensityOp> {
        let (keep_offs, rest_offs) = self.layout.split_offsets(keep)?;
        let dk = keep_offs.len();
        let mut mat = Array2::zeros((dk, dk));
        for (a, &oa) in keep_offs.iter().enumerate() {
            for (b, &ob) in keep_offs.iter().enumerate().skip(a) {
                let mut z = Complex64::default();
                for &ot in &rest_offs {
                    z += self.amps[oa + ot] * self.amps[ob + ot].conj();
                }
                mat[(a, b)] = z;
                if a != b {
                    mat[(b, a)] = z.conj();
                }
            }
        }
        DensityOp::new(self.layout.sub(keep)?, mat)
    }
}

/// A density operator on a site layout. Construction checks shape only;
/// use [`DensityOp::validated`] to enforce the density-operator axioms.
#[derive(Debug, Clone)]
pub struct DensityOp {
    layout: SiteLayout,
    mat: Array2<Complex64>,
}

impl DensityOp {
    pub fn new(layout: SiteLayout, mat: Array2<Complex64>) -> Result<Self> {
        let dim = layout.total_dim()?;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mat.nrows(),
            });
        }
        Ok(DensityOp { layout, mat })
    }

    /// Construct and verify hermiticity, unit trace, and positivity
    /// (smallest eigenvalue >= -tol).
    pub fn validated(layout: SiteLayout, mat: Array2<Complex64>, tol: f64) -> Result<Self> {
        let op = Self::new(layout, mat)?;
        let herm_defect = op
            .mat
            .indexed_iter()
            .map(|((i, j), z)| (z - op.mat[(j, i)].conj()).norm())
            .fold(0.0f64, f64::max);
        if herm_defect > tol {
            return Err(Error::NotDensityOperator(format!(
                "hermiticity defect {herm_defect:.3e}"
            )));
        }
        let trace = op.trace();
        if (trace.re - 1.0).abs() > tol || trace.im.abs() > tol {
            return Err(Error::NotDensityOperator(format!(
                "trace {trace} is not 1"
            )));
        }
        let evals = eigvalsh(&op.mat)?;
        let min = evals.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::NotDensityOperator(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(op)
    }

    pub fn from_pure(psi: &PureState) -> DensityOp {
        let dim = psi.amps.len();
        let mut mat = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                mat[(i, j)] = psi.amps[i] * psi.amps[j].conj();
            }
        }
        DensityOp {
            layout: psi.layout.clone(),
            mat,
        }
    }

    pub fn layout(&self) -> &SiteLayout {
        &self.layout
    }

    pub fn mat(&self) -> &Array2<Complex64> {
        &self.mat
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.diag().sum()
    }

    /// Complex conjugation in the computational basis.
    pub fn conjugate(&self) -> DensityOp {
        DensityOp {
            layout: self.layout.clone(),
            mat: self.mat.mapv(|z| z.conj()),
        }
    }

    /// Partial trace keeping `keep` (ascending site indices).
    pub fn rdm(&self, keep: &[usize]) -> Result<DensityOp> {
        let (keep_offs, rest_offs) = self.layout.split_offsets(keep)?;
        let dk = keep_offs.len();
        let mut mat = Array2::zeros((dk, dk));
        for (a, &oa) in keep_offs.iter().enumerate() {
            for (b, &ob) in keep_offs.iter().enumerate() {
                let mut z = Complex64::default();
                for &ot in &rest_offs {
                    z += self.mat[(oa + ot, ob + ot)];
                }
                mat[(a, b)] = z;
            }
        }
        DensityOp::new(self.layout.sub(keep)?, mat)
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> Result<f64> {
        let evals = eigvalsh(&self.mat)?;
        Ok(evals
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum())
    }
}

/// A dense state that remembers whether it is pure (pure states get the
/// cheaper Schmidt-based reductions and a vector-level commutator path).
#[derive(Debug, Clone)]
pub enum QuditState {
    Pure(PureState),
    Mixed(DensityOp),
}

impl QuditState {
    pub fn layout(&self) -> &SiteLayout {
        match self {
            QuditState::Pure(p) => p.layout(),
            QuditState::Mixed(m) => m.layout(),
        }
    }

    pub fn rdm(&self, keep: &[usize]) -> Result<DensityOp> {
        match self {
            QuditState::Pure(p) => p.rdm(keep),
            QuditState::Mixed(m) => m.rdm(keep),
        }
    }

    pub fn conjugate(&self) -> QuditState {
        match self {
            QuditState::Pure(p) => QuditState::Pure(p.conjugate()),
            QuditState::Mixed(m) => QuditState::Mixed(m.conjugate()),
        }
    }

    /// Entropy of the reduced state on `sites`. For pure states the smaller
    /// side of the bipartition is diagonalized.
    pub fn entropy_of(&self, sites: &[usize]) -> Result<f64> {
        match self {
            QuditState::Mixed(m) => m.rdm(sites)?.entropy(),
            QuditState::Pure(p) => {
                let n = p.layout().n_sites();
                if sites.len() == n {
                    return Ok(0.0);
                }
                let rest: Vec<usize> = (0..n).filter(|s| !sites.contains(s)).collect();
                let keep_dim = p.layout().sub(sites)?.total_dim()?;
                let rest_dim = p.layout().sub(&rest)?.total_dim()?;
                if rest_dim < keep_dim {
                    p.rdm(&rest)?.entropy()
                } else {
                    p.rdm(sites)?.entropy()
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Linear-algebra helpers
// ---------------------------------------------------------------------------

pub(crate) fn eigvalsh(mat: &Array2<Complex64>) -> Result<Array1<f64>> {
    // Symmetrize first so round-off in callers cannot trip LAPACK.
    let (vals, _) = eigh(mat)?;
    Ok(vals)
}

pub(crate) fn eigh(mat: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let n = mat.nrows();
    let mut h = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = (mat[(i, j)] + mat[(j, i)].conj()) * 0.5;
        }
    }
    let (vals, vecs) = h
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Linalg(format!("eigh: {e}")))?;
    // The LAPACK driver sees the row-major buffer as the transposed
    // (= conjugated, for Hermitian input) matrix, so the returned vectors
    // diagonalize the conjugate. Conjugate them back so that the columns
    // of `vecs` are eigenvectors of `mat`: mat . vecs = vecs . diag(vals).
    // A unit test pins this orientation.
    Ok((vals, vecs.mapv(|z| z.conj())))
}

/// Apply a scalar function to a Hermitian matrix through its spectrum.
pub(crate) fn hermitian_function(
    mat: &Array2<Complex64>,
    f: impl Fn(f64) -> f64,
) -> Result<Array2<Complex64>> {
    let (vals, vecs) = eigh(mat)?;
    Ok(spectral_assemble(&vals.mapv(f), &vecs))
}

/// Assemble `U diag(vals) U^dagger`.
pub(crate) fn spectral_assemble(vals: &Array1<f64>, vecs: &Array2<Complex64>) -> Array2<Complex64> {
    let mut scaled = vecs.clone();
    for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let s = Complex64::new(vals[k], 0.0);
        col.mapv_inplace(|z| z * s);
    }
    let adj = vecs.mapv(|z| z.conj());
    scaled.dot(&adj.t())
}

// ---------------------------------------------------------------------------
// Modular Hamiltonians
// ---------------------------------------------------------------------------

/// Spectral data of a modular Hamiltonian.
#[derive(Debug, Clone)]
pub struct ModularData {
    /// `K = -ln rho` with eigenvalues of `rho` clamped to the floor.
    pub kernel: Array2<Complex64>,
    /// Orthogonal projector onto the support of `rho` (eigenvalues > floor).
    pub support: Array2<Complex64>,
    /// Rank of the support.
    pub rank: usize,
}

/// Modular Hamiltonian `K = -ln rho`, clamping eigenvalues below `floor`.
pub fn modular_hamiltonian(rho: &DensityOp, floor: f64) -> Result<Array2<Complex64>> {
    hermitian_function(rho.mat(), |p| -p.max(floor).ln())
}

/// Modular Hamiltonian plus support projector and rank.
pub fn modular_data(rho: &DensityOp, floor: f64) -> Result<ModularData> {
    let (vals, vecs) = eigh(rho.mat())?;
    let kernel = spectral_assemble(&vals.mapv(|p| -p.max(floor).ln()), &vecs);
    let indicator = vals.mapv(|p| if p > floor { 1.0 } else { 0.0 });
    let rank = indicator.iter().filter(|&&x| x > 0.5).count();
    let support = spectral_assemble(&indicator, &vecs);
    Ok(ModularData {
        kernel,
        support,
        rank,
    })
}

/// Matrix logarithm of a density operator with the spectral floor
/// (`ln rho = -K`).
pub fn log_density(rho: &DensityOp, floor: f64) -> Result<Array2<Complex64>> {
    hermitian_function(rho.mat(), |p| p.max(floor).ln())
}

// ---------------------------------------------------------------------------
// Subset-operator embedding
// ---------------------------------------------------------------------------

/// Embed an operator acting on `op_sites` (ascending) into the full layout:
/// tensor with the identity on all other sites.
pub fn embed_op(
    op: &Array2<Complex64>,
    op_sites: &[usize],
    layout: &SiteLayout,
) -> Result<Array2<Complex64>> {
    let (sub_offs, rest_offs) = layout.split_offsets(op_sites)?;
    let ds = sub_offs.len();
    if op.nrows() != ds || op.ncols() != ds {
        return Err(Error::DimensionMismatch {
            expected: ds,
            got: op.nrows(),
        });
    }
    let dim = layout.total_dim()?;
    let mut out = Array2::zeros((dim, dim));
    for (a, &oa) in sub_offs.iter().enumerate() {
        for (b, &ob) in sub_offs.iter().enumerate() {
            let z = op[(a, b)];
            if z == Complex64::default() {
                continue;
            }
            for &ot in &rest_offs {
                out[(oa + ot, ob + ot)] = z;
            }
        }
    }
    Ok(out)
}

/// Apply an operator supported on `op_sites` to a pure state without
/// forming the embedded matrix.
pub fn apply_subset_op(
    psi: &PureState,
    op: &Array2<Complex64>,
    op_sites: &[usize],
) -> Result<PureState> {
    let (sub_offs, rest_offs) = psi.layout().split_offsets(op_sites)?;
    let ds = sub_offs.len();
    if op.nrows() != ds || op.ncols() != ds {
        return Err(Error::DimensionMismatch {
            expected: ds,
            got: op.nrows(),
        });
    }
    let mut out = Array1::zeros(psi.amps().len());
    for &ot in &rest_offs {
        for (a, &oa) in sub_offs.iter().enumerate() {
            let mut z = Complex64::default();
            for (b, &ob) in sub_offs.iter().enumerate() {
                z += op[(a, b)] * psi.amps()[ob + ot];
            }
            out[oa + ot] = z;
        }
    }
    PureState::new(psi.layout().clone(), out)
}

// ---------------------------------------------------------------------------
// Information quantities
// ---------------------------------------------------------------------------

/// Union of disjoint ascending index blocks; errors on overlap.
pub(crate) fn sorted_union(parts: &[&[usize]]) -> Result<Vec<usize>> {
    let mut all: Vec<usize> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    let len = all.len();
    all.sort_unstable();
    all.dedup();
    if all.len() != len {
        return Err(Error::BlocksOverlap);
    }
    Ok(all)
}

/// Conditional mutual information `I(A : C | B)` in nats.
pub fn cmi(state: &QuditState, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    let ab = sorted_union(&[a, b])?;
    let bc = sorted_union(&[b, c])?;
    let abc = sorted_union(&[a, b, c])?;
    let s_ab = state.entropy_of(&ab)?;
    let s_bc = state.entropy_of(&bc)?;
    let s_b = state.entropy_of(b)?;
    let s_abc = state.entropy_of(&abc)?;
    Ok(s_ab + s_bc - s_b - s_abc)
}

/// The Kitaev–Preskill alternating entropy combination
/// `S_A + S_B + S_C - S_AB - S_BC - S_CA + S_ABC`.
///
/// For a gapped two-dimensional ground state this equals minus the
/// topological entanglement entropy (e.g. `-ln 2` for the toric code).
pub fn kitaev_preskill(state: &QuditState, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    let ab = sorted_union(&[a, b])?;
    let bc = sorted_union(&[b, c])?;
    let ca = sorted_union(&[c, a])?;
    let abc = sorted_union(&[a, b, c])?;
    Ok(state.entropy_of(a)? + state.entropy_of(b)? + state.entropy_of(c)?
        - state.entropy_of(&ab)?
        - state.entropy_of(&bc)?
        - state.entropy_of(&ca)?
        + state.entropy_of(&abc)?)
}

/// Modular commutator `J(A,B,C) = i Tr(rho_ABC [K_AB, K_BC])` as a complex
/// number, with both trace orderings evaluated independently. The imaginary
/// part measures numerical error; the exact quantity is real.
pub fn modular_commutator_complex(
    state: &QuditState,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    floor: f64,
) -> Result<Complex64> {
    let ab = sorted_union(&[a, b])?;
    let bc = sorted_union(&[b, c])?;
    sorted_union(&[a, b, c])?;
    kernel_commutator_complex(state, &ab, &bc, floor)
}

/// `i <[K_X, K_Y]>` where `K_X = -ln rho_X`. Unlike the three-block
/// commutator, `x` and `y` may overlap arbitrarily; each list must be
/// strictly ascending. The result is Hermitian in exact arithmetic, so the
/// imaginary part measures numerical error.
pub fn kernel_commutator_complex(
    state: &QuditState,
    x: &[usize],
    y: &[usize],
    floor: f64,
) -> Result<Complex64> {
    let mut union: Vec<usize> = x.iter().chain(y.iter()).copied().collect();
    union.sort_unstable();
    union.dedup();
    let k_x = modular_hamiltonian(&state.rdm(x)?, floor)?;
    let k_y = modular_hamiltonian(&state.rdm(y)?, floor)?;

    // Positions of the X / Y sites inside the union subsystem.
    let idx = |sites: &[usize]| -> Vec<usize> {
        sites
            .iter()
            .map(|s| union.binary_search(s).expect("subset of the union"))
            .collect()
    };
    let x_in = idx(x);
    let y_in = idx(y);

    if let QuditState::Pure(psi) = state {
        if union.len() == psi.layout().n_sites() {
            // i <[K1, K2]> = i (<K1 psi | K2 psi> - <K2 psi | K1 psi>).
            let k1 = apply_subset_op(psi, &k_x, x)?;
            let k2 = apply_subset_op(psi, &k_y, y)?;
            let z1: Complex64 = k1
                .amps()
                .iter()
                .zip(k2.amps().iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            let z2: Complex64 = k2
                .amps()
                .iter()
                .zip(k1.amps().iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            return Ok(Complex64::i() * (z1 - z2));
        }
    }

    let rho = state.rdm(&union)?;
    let sub_layout = rho.layout().clone();
    let k1 = embed_op(&k_x, &x_in, &sub_layout)?;
    let k2 = embed_op(&k_y, &y_in, &sub_layout)?;
    // tr(rho K1 K2) = sum_{ik} (rho K1)_{ik} (K2)_{ki}, and the reverse order.
    let rk1 = rho.mat().dot(&k1);
    let rk2 = rho.mat().dot(&k2);
    let mut z1 = Complex64::default();
    let mut z2 = Complex64::default();
    let n = rk1.nrows();
    for i in 0..n {
        for k in 0..n {
            z1 += rk1[(i, k)] * k2[(k, i)];
            z2 += rk2[(i, k)] * k1[(k, i)];
        }
    }
    Ok(Complex64::i() * (z1 - z2))
}

/// Modular commutator `J(A,B,C)` (real part of the complex evaluation).
pub fn modular_commutator(
    state: &QuditState,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    floor: f64,
) -> Result<f64> {
    Ok(modular_commutator_complex(state, a, b, c, floor)?.re)
}

/// Chiral central charge estimate `c_minus = 3 J(A,B,C) / pi`.
pub fn chiral_central_charge(
    state: &QuditState,
    a: &[usize],
    b: &[usize],
    c: &[usize],
    floor: f64,
) -> Result<f64> {
    Ok(3.0 * modular_commutator(state, a, b, c, floor)? / std::f64::consts::PI)
}
