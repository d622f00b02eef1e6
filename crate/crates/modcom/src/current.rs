//! Modular-current calculus on coarse-grained triangular-lattice disks.
//!
//! The entanglement Hamiltonian `K_D = -ln rho_D` of a disk `D` cut from a
//! gapped two-dimensional state admits, in the ideal (exactly
//! conditional-independent) limit, a decomposition into terms supported on
//! the disk's unit triangular faces, its interior-touching edges, and its
//! interior vertices, with coefficients `+1`, `-1`, `+1`. Distributing each
//! term evenly over the sites it touches produces one local generator
//! `K~_v` per site, and the antisymmetric quantity
//!
//! ```text
//! f_uv = i <[K~_u, K~_v]>
//! ```
//!
//! behaves like a current: it is conserved at every site, vanishes between
//! interior sites, and circulates along the boundary with a universal total
//! flux of one quarter of the bulk three-region commutator `J`.
//!
//! The module evaluates `f_uv` two ways:
//!
//! * **symbolically** — exact rational multiples of the reference value `J`,
//!   obtained by reducing every commutator of decomposition terms with the
//!   ideal-state rules (disjoint or nested supports drop out, chain-like
//!   triples carry no conditional correlations, and corner triples deform to
//!   the reference orientation); no floating point enters anywhere;
//! * **numerically** — delegating each `i <[K_X, K_Y]>` to a density-matrix
//!   backend (dense qudit or fermionic Gaussian) through [`CurrentBackend`].

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use num::rational::Ratio;
use num::{One, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dense::{kernel_commutator_complex, QuditState};
use crate::error::{Error, Result};
use crate::gaussian::{gaussian_kernel_commutator, MajoranaCovariance};
use crate::lattice::{is_chain_like, Cell, Disk, Edge, Face};

/// Exact rational scalar used throughout the symbolic calculus.
pub type Rational = Ratio<i64>;

// ---------------------------------------------------------------------------
// Decomposition terms
// ---------------------------------------------------------------------------

/// Support of one term in the local decomposition of `K_D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermSupport {
    Face(Face),
    Edge(Edge),
    Vertex(Cell),
}

impl TermSupport {
    /// The cells the term acts on.
    pub fn cells(&self) -> Vec<Cell> {
        match self {
            TermSupport::Face(f) => f.cells().to_vec(),
            TermSupport::Edge(e) => vec![e.0, e.1],
            TermSupport::Vertex(c) => vec![*c],
        }
    }

    pub fn contains(&self, c: &Cell) -> bool {
        match self {
            TermSupport::Face(f) => f.cells().contains(c),
            TermSupport::Edge(e) => e.0 == *c || e.1 == *c,
            TermSupport::Vertex(v) => v == c,
        }
    }

    fn cell_set(&self) -> BTreeSet<Cell> {
        self.cells().into_iter().collect()
    }
}

/// One weighted term of a decomposition or of a site generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Term {
    pub support: TermSupport,
    pub coefficient: Rational,
}

/// The local decomposition of a disk's entanglement Hamiltonian:
/// `K_D = sum_f K_f - sum_e K_e + sum_v K_v` over faces, interior-touching
/// edges, and interior vertices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermList {
    pub entries: Vec<Term>,
}

impl TermList {
    /// Signed multiset of supports, for comparisons that ignore ordering.
    pub fn multiset(&self) -> BTreeMap<BTreeSet<Cell>, Rational> {
        let mut out: BTreeMap<BTreeSet<Cell>, Rational> = BTreeMap::new();
        for t in &self.entries {
            *out.entry(t.support.cell_set()).or_insert_with(Rational::zero) += t.coefficient;
        }
        out.retain(|_, w| !w.is_zero());
        out
    }
}

/// Every unit face with all three corners inside the disk, the edges not
/// lying exclusively between boundary cells, and the cells whose entire
/// neighborhood is inside, with coefficients `+1`, `-1`, `+1`.
///
/// A degenerate disk without faces or interior (one or two cells) produces
/// an empty list. On disks of width at least three cells every excluded
/// edge borders exactly one face, so "both endpoints on the boundary"
/// coincides with "not flanked by two faces"; on thinner necks the two
/// notions differ and the boundary-endpoint rule used here is the one the
/// decomposition is stated for.
pub fn decompose_modular_ham(disk: &Disk) -> TermList {
    let boundary = disk.boundary_cells();
    let mut entries = Vec::new();
    for f in disk.faces() {
        entries.push(Term {
            support: TermSupport::Face(f),
            coefficient: Rational::one(),
        });
    }
    for e in disk.edges() {
        if !(boundary.contains(&e.0) && boundary.contains(&e.1)) {
            entries.push(Term {
                support: TermSupport::Edge(e),
                coefficient: -Rational::one(),
            });
        }
    }
    for v in disk.interior_cells() {
        entries.push(Term {
            support: TermSupport::Vertex(v),
            coefficient: Rational::one(),
        });
    }
    TermList { entries }
}

// ---------------------------------------------------------------------------
// Site generators
// ---------------------------------------------------------------------------

/// The per-site share of the decomposition: every face a site touches at
/// one third, every interior-touching edge at minus one half, and the
/// site's own vertex term in full. Summing the generators over all sites
/// reproduces the decomposition exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteGenerator {
    pub site: Cell,
    pub terms: Vec<Term>,
}

/// Distribute a decomposition over the disk's sites: a face coefficient is
/// split across its three corners, an edge coefficient across its two
/// endpoints, and a vertex term stays on its site. Sites the decomposition
/// never touches (boundary sites of degenerate disks) receive empty
/// generators.
pub fn site_generators(terms: &TermList, disk: &Disk) -> Vec<SiteGenerator> {
    let mut per: BTreeMap<Cell, Vec<Term>> =
        disk.cells().iter().map(|c| (*c, Vec::new())).collect();
    for t in &terms.entries {
        let (cells, share) = match t.support {
            TermSupport::Face(_) => (t.support.cells(), Rational::new(1, 3)),
            TermSupport::Edge(_) => (t.support.cells(), Rational::new(1, 2)),
            TermSupport::Vertex(_) => (t.support.cells(), Rational::one()),
        };
        for c in cells {
            if let Some(list) = per.get_mut(&c) {
                list.push(Term {
                    support: t.support,
                    coefficient: t.coefficient * share,
                });
            }
        }
    }
    per.into_iter()
        .map(|(site, terms)| SiteGenerator { site, terms })
        .collect()
}

// ---------------------------------------------------------------------------
// Symbolic values
// ---------------------------------------------------------------------------

/// An exact rational multiple of the reference commutator `J`.
///
/// The reference is the three-cell evaluation on any upward face, taking
/// the corners in counterclockwise order starting from the lower-right one;
/// every corner configuration the reduction rules meet is deformed onto it,
/// picking up a sign from its orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SymbolicValue(pub Rational);

impl SymbolicValue {
    pub fn new(num: i64, den: i64) -> Self {
        SymbolicValue(Rational::new(num, den))
    }

    pub fn zero() -> Self {
        SymbolicValue(Rational::zero())
    }

    pub fn rational(&self) -> Rational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Numeric value for a given reference commutator.
    pub fn evaluate(&self, j: f64) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN) * j
    }
}

impl fmt::Display for SymbolicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Ratio keeps itself reduced with a positive denominator.
        if self.0.is_zero() {
            write!(f, "0")
        } else if *self.0.denom() == 1 {
            write!(f, "{} J", self.0.numer())
        } else {
            write!(f, "{}/{} J", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for SymbolicValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serde_json::Map::new();
        map.insert("num".into(), serde_json::json!(*self.0.numer()));
        map.insert("den".into(), serde_json::json!(*self.0.denom()));
        serde_json::Value::Object(map).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SymbolicValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            num: i64,
            den: i64,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.den == 0 {
            return Err(D::Error::custom("zero denominator"));
        }
        Ok(SymbolicValue(Rational::new(raw.num, raw.den)))
    }
}

// ---------------------------------------------------------------------------
// The reduction rules
// ---------------------------------------------------------------------------

/// Orientation of the ordered cell triple `(p, q, r)` in the Euclidean
/// embedding: `+1` counterclockwise, `-1` clockwise, `0` degenerate. The
/// cross product of the step vectors reduces to an integer expression in
/// axial coordinates.
fn orientation(p: &Cell, q: &Cell, r: &Cell) -> i64 {
    let uq = (q.q - p.q) as i64;
    let ur = (q.r - p.r) as i64;
    let vq = (r.q - q.q) as i64;
    let vr = (r.r - q.r) as i64;
    (uq * vr - ur * vq).signum()
}

fn coords(s: &BTreeSet<Cell>) -> Vec<(i32, i32)> {
    s.iter().map(|c| (c.q, c.r)).collect()
}

/// Reduce `i <[K_S1, K_S2]>` on an ideal state to a rational multiple of
/// the reference commutator.
///
/// Rules, in order: identical supports commute; disjoint supports commute;
/// nested supports carry no commutator expectation; otherwise the pair is a
/// three-region evaluation `J(S1 \ S2, S1 ∩ S2, S2 \ S1)`, which vanishes
/// for chain-like triples and deforms onto the reference face (with an
/// orientation sign) when the three regions meet around a corner, witnessed
/// by a face having one cell in each region.
fn reduce_commutator(s1: &BTreeSet<Cell>, s2: &BTreeSet<Cell>) -> Result<Rational> {
    if s1 == s2 {
        return Ok(Rational::zero());
    }
    let shared: BTreeSet<Cell> = s1.intersection(s2).copied().collect();
    if shared.is_empty() {
        return Ok(Rational::zero());
    }
    if shared.len() == s1.len() || shared.len() == s2.len() {
        return Ok(Rational::zero());
    }
    let x: BTreeSet<Cell> = s1.difference(&shared).copied().collect();
    let z: BTreeSet<Cell> = s2.difference(&shared).copied().collect();

    let mut sign: Option<i64> = None;
    for p in &x {
        for r in &z {
            if !p.is_adjacent(r) {
                continue;
            }
            for q in &shared {
                if q.is_adjacent(p) && q.is_adjacent(r) {
                    let s = orientation(p, q, r);
                    match sign {
                        None => sign = Some(s),
                        Some(prev) if prev != s => {
                            return Err(Error::UnreducedTerm(coords(s1), coords(s2)))
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    if let Some(s) = sign {
        return Ok(Rational::from_integer(s));
    }
    if is_chain_like(&x, &shared, &z) {
        Ok(Rational::zero())
    } else {
        Err(Error::UnreducedTerm(coords(s1), coords(s2)))
    }
}

/// Exact current between two site generators, in units of `J`.
fn symbolic_pair(gu: &SiteGenerator, gv: &SiteGenerator) -> Result<Rational> {
    let mut acc = Rational::zero();
    for t1 in &gu.terms {
        let s1 = t1.support.cell_set();
        for t2 in &gv.terms {
            let s2 = t2.support.cell_set();
            let reduced = reduce_commutator(&s1, &s2)?;
            if !reduced.is_zero() {
                acc += t1.coefficient * t2.coefficient * reduced;
            }
        }
    }
    Ok(acc)
}

/// The exact site-to-site current `f_uv = i <[K~_u, K~_v]>` on an ideal
/// state, as a rational multiple of the reference commutator.
pub fn symbolic_current(u: Cell, v: Cell, disk: &Disk) -> Result<SymbolicValue> {
    if u == v {
        return Err(Error::Malformed(
            "current endpoints must be distinct sites".into(),
        ));
    }
    if !disk.contains(&u) || !disk.contains(&v) {
        return Err(Error::Malformed(
            "current endpoints must lie in the disk".into(),
        ));
    }
    let terms = decompose_modular_ham(disk);
    let gens = site_generators(&terms, disk);
    let find = |c: Cell| gens.iter().find(|g| g.site == c).expect("site in disk");
    Ok(SymbolicValue(symbolic_pair(find(u), find(v))?))
}

// ---------------------------------------------------------------------------
// Numeric backends
// ---------------------------------------------------------------------------

/// A state backend able to evaluate `i <[K_X, K_Y]>` for overlapping cell
/// sets, where `K_X` is the modular Hamiltonian of the subsystem carrying
/// the cells of `X`.
pub trait CurrentBackend {
    fn commutator_expectation(&self, x: &BTreeSet<Cell>, y: &BTreeSet<Cell>) -> Result<f64>;
}

fn gather_indices(map: &BTreeMap<Cell, Vec<usize>>, cells: &BTreeSet<Cell>) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for c in cells {
        let block = map
            .get(c)
            .ok_or_else(|| Error::Malformed(format!("cell ({}, {}) has no indices", c.q, c.r)))?;
        out.extend_from_slice(block);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn validate_cell_map(map: &BTreeMap<Cell, Vec<usize>>) -> Result<()> {
    let mut all: Vec<usize> = Vec::new();
    for (c, block) in map {
        if block.is_empty() {
            return Err(Error::Malformed(format!(
                "cell ({}, {}) carries no indices",
                c.q, c.r
            )));
        }
        all.extend_from_slice(block);
    }
    let n = all.len();
    all.sort_unstable();
    all.dedup();
    if all.len() != n {
        return Err(Error::Malformed(
            "cells must carry disjoint index blocks".into(),
        ));
    }
    Ok(())
}

/// Dense qudit backend: each cell carries a block of qudit site indices.
pub struct DenseCellBackend<'a> {
    state: &'a QuditState,
    sites: BTreeMap<Cell, Vec<usize>>,
    floor: f64,
}

impl<'a> DenseCellBackend<'a> {
    pub fn new(
        state: &'a QuditState,
        sites: BTreeMap<Cell, Vec<usize>>,
        floor: f64,
    ) -> Result<Self> {
        validate_cell_map(&sites)?;
        Ok(DenseCellBackend {
            state,
            sites,
            floor,
        })
    }
}

impl CurrentBackend for DenseCellBackend<'_> {
    fn commutator_expectation(&self, x: &BTreeSet<Cell>, y: &BTreeSet<Cell>) -> Result<f64> {
        let xs = gather_indices(&self.sites, x)?;
        let ys = gather_indices(&self.sites, y)?;
        Ok(kernel_commutator_complex(self.state, &xs, &ys, self.floor)?.re)
    }
}

/// Fermionic Gaussian backend: each cell carries a block of mode indices.
pub struct GaussianCellBackend<'a> {
    cov: &'a MajoranaCovariance,
    modes: BTreeMap<Cell, Vec<usize>>,
}

impl<'a> GaussianCellBackend<'a> {
    pub fn new(cov: &'a MajoranaCovariance, modes: BTreeMap<Cell, Vec<usize>>) -> Result<Self> {
        validate_cell_map(&modes)?;
        Ok(GaussianCellBackend { cov, modes })
    }
}

impl CurrentBackend for GaussianCellBackend<'_> {
    fn commutator_expectation(&self, x: &BTreeSet<Cell>, y: &BTreeSet<Cell>) -> Result<f64> {
        let xs = gather_indices(&self.modes, x)?;
        let ys = gather_indices(&self.modes, y)?;
        gaussian_kernel_commutator(self.cov, &xs, &ys)
    }
}

type PairCache = BTreeMap<(Vec<Cell>, Vec<Cell>), f64>;

fn numeric_pair(
    backend: &dyn CurrentBackend,
    gu: &SiteGenerator,
    gv: &SiteGenerator,
    cache: &mut PairCache,
) -> Result<f64> {
    let mut acc = 0.0;
    for t1 in &gu.terms {
        let s1 = t1.support.cell_set();
        for t2 in &gv.terms {
            let s2 = t2.support.cell_set();
            // Identical and disjoint supports commute exactly; skipping them
            // is not an approximation.
            if s1 == s2 || s1.intersection(&s2).next().is_none() {
                continue;
            }
            let k1: Vec<Cell> = s1.iter().copied().collect();
            let k2: Vec<Cell> = s2.iter().copied().collect();
            let coeff = (t1.coefficient * t2.coefficient).to_f64().unwrap();
            let (key, flip) = if k1 <= k2 {
                ((k1, k2), 1.0)
            } else {
                ((k2, k1), -1.0)
            };
            let val = match cache.get(&key) {
                Some(v) => *v,
                None => {
                    let xs: BTreeSet<Cell> = key.0.iter().copied().collect();
                    let ys: BTreeSet<Cell> = key.1.iter().copied().collect();
                    let v = backend.commutator_expectation(&xs, &ys)?;
                    cache.insert(key, v);
                    v
                }
            };
            acc += coeff * flip * val;
        }
    }
    Ok(acc)
}

/// The numeric current `f_uv = i <[K~_u, K~_v]>` on a backend state.
pub fn numeric_current(
    backend: &dyn CurrentBackend,
    generators: &[SiteGenerator],
    u: Cell,
    v: Cell,
) -> Result<f64> {
    let find = |c: Cell| {
        generators
            .iter()
            .find(|g| g.site == c)
            .ok_or_else(|| Error::Malformed(format!("site ({}, {}) has no generator", c.q, c.r)))
    };
    let mut cache = PairCache::new();
    numeric_pair(backend, find(u)?, find(v)?, &mut cache)
}

// ---------------------------------------------------------------------------
// Current maps
// ---------------------------------------------------------------------------

/// Sparse antisymmetric current table plus per-site divergence, in either
/// exact-rational or floating-point form. Entries are stored once per
/// unordered pair, keyed by the smaller site first; the accessors restore
/// the sign.
#[derive(Debug, Clone)]
pub enum CurrentData {
    Symbolic {
        entries: BTreeMap<(Cell, Cell), Rational>,
        divergence: BTreeMap<Cell, Rational>,
    },
    Numeric {
        entries: BTreeMap<(Cell, Cell), f64>,
        divergence: BTreeMap<Cell, f64>,
    },
}

#[derive(Debug, Clone)]
pub struct CurrentMap {
    sites: Vec<Cell>,
    data: CurrentData,
}

impl CurrentMap {
    pub fn sites(&self) -> &[Cell] {
        &self.sites
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self.data, CurrentData::Symbolic { .. })
    }

    pub fn data(&self) -> &CurrentData {
        &self.data
    }

    /// Exact value for a site pair; `None` in numeric mode.
    pub fn symbolic_value(&self, u: Cell, v: Cell) -> Option<SymbolicValue> {
        match &self.data {
            CurrentData::Symbolic { entries, .. } => {
                if u == v {
                    return Some(SymbolicValue::zero());
                }
                let (key, s) = if u < v { ((u, v), 1) } else { ((v, u), -1) };
                let raw = entries.get(&key).copied().unwrap_or_else(Rational::zero);
                Some(SymbolicValue(raw * Rational::from_integer(s)))
            }
            CurrentData::Numeric { .. } => None,
        }
    }

    /// Floating value for a site pair: symbolic entries are reported in
    /// units of the reference commutator.
    pub fn value_f64(&self, u: Cell, v: Cell) -> f64 {
        if u == v {
            return 0.0;
        }
        let (key, s) = if u < v { ((u, v), 1.0) } else { ((v, u), -1.0) };
        let raw = match &self.data {
            CurrentData::Symbolic { entries, .. } => entries
                .get(&key)
                .map(|r| r.to_f64().unwrap_or(f64::NAN))
                .unwrap_or(0.0),
            CurrentData::Numeric { entries, .. } => entries.get(&key).copied().unwrap_or(0.0),
        };
        s * raw
    }

    /// Stored nonzero entries as `(u, v, value)`, symbolic ones in units of
    /// the reference commutator.
    pub fn entries_f64(&self) -> Vec<(Cell, Cell, f64)> {
        match &self.data {
            CurrentData::Symbolic { entries, .. } => entries
                .iter()
                .map(|((u, v), r)| (*u, *v, r.to_f64().unwrap_or(f64::NAN)))
                .collect(),
            CurrentData::Numeric { entries, .. } => {
                entries.iter().map(|((u, v), x)| (*u, *v, *x)).collect()
            }
        }
    }

    /// Largest per-site divergence magnitude (exactly zero in symbolic
    /// mode by construction).
    pub fn max_divergence(&self) -> f64 {
        match &self.data {
            CurrentData::Symbolic { divergence, .. } => divergence
                .values()
                .map(|r| r.to_f64().unwrap_or(f64::NAN).abs())
                .fold(0.0, f64::max),
            CurrentData::Numeric { divergence, .. } => {
                divergence.values().map(|x| x.abs()).fold(0.0, f64::max)
            }
        }
    }

    /// Largest entry magnitude, for relative comparisons.
    pub fn max_entry(&self) -> f64 {
        self.entries_f64()
            .iter()
            .map(|(_, _, x)| x.abs())
            .fold(0.0, f64::max)
    }

    /// JSON export: symbolic entries as numerator/denominator pairs,
    /// numeric ones as floats.
    pub fn to_json(&self) -> serde_json::Value {
        let cell = |c: &Cell| serde_json::json!({ "q": c.q, "r": c.r });
        match &self.data {
            CurrentData::Symbolic {
                entries,
                divergence,
            } => serde_json::json!({
                "mode": "symbolic",
                "sites": self.sites.iter().map(cell).collect::<Vec<_>>(),
                "entries": entries.iter().map(|((u, v), r)| serde_json::json!({
                    "u": cell(u), "v": cell(v),
                    "num": *r.numer(), "den": *r.denom(),
                })).collect::<Vec<_>>(),
                "perSiteDivergence": divergence.iter().map(|(c, r)| serde_json::json!({
                    "site": cell(c), "num": *r.numer(), "den": *r.denom(),
                })).collect::<Vec<_>>(),
            }),
            CurrentData::Numeric {
                entries,
                divergence,
            } => serde_json::json!({
                "mode": "numeric",
                "sites": self.sites.iter().map(cell).collect::<Vec<_>>(),
                "entries": entries.iter().map(|((u, v), x)| serde_json::json!({
                    "u": cell(u), "v": cell(v), "value": x,
                })).collect::<Vec<_>>(),
                "perSiteDivergence": divergence.iter().map(|(c, x)| serde_json::json!({
                    "site": cell(c), "value": x,
                })).collect::<Vec<_>>(),
            }),
        }
    }
}

impl Serialize for CurrentMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

/// Site pairs that can interact: generators reach one cell beyond their
/// site, so supports of sites more than two apart are disjoint and commute
/// exactly.
fn interacting_pairs(disk: &Disk) -> Vec<(Cell, Cell)> {
    let cells: Vec<Cell> = disk.cells().iter().copied().collect();
    let mut out = Vec::new();
    for (i, u) in cells.iter().enumerate() {
        for v in cells.iter().skip(i + 1) {
            if u.distance(v) <= 2 {
                out.push((*u, *v));
            }
        }
    }
    out
}

/// Exact current map of the disk. The conservation law — zero divergence at
/// every site — holds identically for the ideal decomposition, so any
/// nonzero residual is a defect of the reduction rules and is reported as
/// an error rather than a value.
pub fn current_report(disk: &Disk) -> Result<CurrentMap> {
    let terms = decompose_modular_ham(disk);
    let gens = site_generators(&terms, disk);
    let by_site: BTreeMap<Cell, &SiteGenerator> = gens.iter().map(|g| (g.site, g)).collect();
    let mut entries = BTreeMap::new();
    let mut divergence: BTreeMap<Cell, Rational> = disk
        .cells()
        .iter()
        .map(|c| (*c, Rational::zero()))
        .collect();
    for (u, v) in interacting_pairs(disk) {
        let val = symbolic_pair(by_site[&u], by_site[&v])?;
        if !val.is_zero() {
            *divergence.get_mut(&u).unwrap() += val;
            *divergence.get_mut(&v).unwrap() -= val;
            entries.insert((u, v), val);
        }
    }
    for (site, d) in &divergence {
        if !d.is_zero() {
            return Err(Error::ConservationViolated(
                site.q,
                site.r,
                format!("{}/{}", d.numer(), d.denom()),
            ));
        }
    }
    Ok(CurrentMap {
        sites: disk.cells().iter().copied().collect(),
        data: CurrentData::Symbolic {
            entries,
            divergence,
        },
    })
}

/// Numeric current map of the disk on a backend state. Divergences are
/// reported, not enforced: how close they come to zero measures how well
/// the state satisfies the ideal decomposition.
pub fn numeric_current_report(disk: &Disk, backend: &dyn CurrentBackend) -> Result<CurrentMap> {
    let terms = decompose_modular_ham(disk);
    let gens = site_generators(&terms, disk);
    let by_site: BTreeMap<Cell, &SiteGenerator> = gens.iter().map(|g| (g.site, g)).collect();
    let mut cache = PairCache::new();
    let mut entries = BTreeMap::new();
    let mut divergence: BTreeMap<Cell, f64> =
        disk.cells().iter().map(|c| (*c, 0.0)).collect();
    for (u, v) in interacting_pairs(disk) {
        let val = numeric_pair(backend, by_site[&u], by_site[&v], &mut cache)?;
        if val != 0.0 {
            *divergence.get_mut(&u).unwrap() += val;
            *divergence.get_mut(&v).unwrap() -= val;
            entries.insert((u, v), val);
        }
    }
    Ok(CurrentMap {
        sites: disk.cells().iter().copied().collect(),
        data: CurrentData::Numeric {
            entries,
            divergence,
        },
    })
}

// ---------------------------------------------------------------------------
// Edge current
// ---------------------------------------------------------------------------

/// Ring-window size on each side of a cut.
const CUT_SPAN: usize = 4;

/// The two windows of a boundary cut: the cut sits between consecutive
/// boundary-ring cells `ring[k]` and `ring[k+1]` (counterclockwise order),
/// and each window takes four ring cells on its side plus the second-layer
/// cells wedged between consecutive window cells. The cell above the cut
/// edge itself joins the forward window; the split of such borderline cells
/// does not affect the total, which is what the windows exist to capture:
/// every site pair with a nonzero current crossing the cut.
fn cut_windows(disk: &Disk, cut: usize) -> Result<(BTreeSet<Cell>, BTreeSet<Cell>)> {
    let ring = disk.boundary_ring()?;
    let n = ring.len();
    if cut >= n {
        return Err(Error::CutOutOfRange(cut, n));
    }
    if n < 2 * CUT_SPAN {
        return Err(Error::CutTooShallow(CUT_SPAN));
    }
    let at = |i: isize| -> Cell {
        let m = n as isize;
        ring[(((i % m) + m) % m) as usize]
    };
    let k = cut as isize;
    let wedge = |a: Cell, b: Cell| -> Vec<Cell> {
        a.neighbors()
            .into_iter()
            .filter(|c| b.is_adjacent(c) && disk.contains(c))
            .collect()
    };
    let mut left: BTreeSet<Cell> = (0..CUT_SPAN as isize).map(|d| at(k - d)).collect();
    let mut right: BTreeSet<Cell> = (1..=CUT_SPAN as isize).map(|d| at(k + d)).collect();
    for d in 0..(CUT_SPAN as isize - 1) {
        left.extend(wedge(at(k - d - 1), at(k - d)));
    }
    for d in 0..=(CUT_SPAN as isize - 1) {
        right.extend(wedge(at(k + d), at(k + d + 1)));
    }
    left = left.difference(&right).copied().collect();
    if left.len() < 3 || right.len() < 3 {
        return Err(Error::CutTooShallow(CUT_SPAN));
    }
    Ok((left, right))
}

/// Exact edge current through a boundary cut: the sum of `f_uv` over pairs
/// with `u` behind the cut and `v` ahead of it (counterclockwise order).
/// On any disk wide enough for the windows, every cut yields one quarter of
/// the reference commutator.
pub fn edge_current(disk: &Disk, cut: usize) -> Result<SymbolicValue> {
    let (left, right) = cut_windows(disk, cut)?;
    let terms = decompose_modular_ham(disk);
    let gens = site_generators(&terms, disk);
    let by_site: BTreeMap<Cell, &SiteGenerator> = gens.iter().map(|g| (g.site, g)).collect();
    let mut acc = Rational::zero();
    for u in &left {
        for v in &right {
            acc += symbolic_pair(by_site[u], by_site[v])?;
        }
    }
    Ok(SymbolicValue(acc))
}

/// Numeric edge current through a boundary cut on a backend state.
pub fn numeric_edge_current(
    disk: &Disk,
    cut: usize,
    backend: &dyn CurrentBackend,
) -> Result<f64> {
    let (left, right) = cut_windows(disk, cut)?;
    let terms = decompose_modular_ham(disk);
    let gens = site_generators(&terms, disk);
    let by_site: BTreeMap<Cell, &SiteGenerator> = gens.iter().map(|g| (g.site, g)).collect();
    let mut cache = PairCache::new();
    let mut acc = 0.0;
    for u in &left {
        for v in &right {
            acc += numeric_pair(backend, by_site[u], by_site[v], &mut cache)?;
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
