//! Wave-front-set membership predicates for the two-point functions and
//! their products, plus graph-immersion feasibility for the time-ordered
//! cone over point configurations. All decisions are exact over rationals.
//!
//! Conventions: global inertial coordinates, parallel transport is the
//! identity on components, and a covector is "coparallel" to a null segment
//! when it is proportional to it componentwise.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lp::{self, Feasibility, LpOutcome};
use crate::minkowski::{classify_pair, diff, minkowski_square, CausalVerdict, Rat};
use crate::wick::{enumerate_saturated_graphs, ContractionGraph};

#[derive(Debug, Error)]
pub enum ConeError {
    #[error("covectors k and k' must not both vanish")]
    BothZero,
    #[error("cone generators must share a base point")]
    BaseMismatch,
    #[error("generator must be nonzero")]
    ZeroGenerator,
    #[error("all covectors vanish")]
    AllZero,
    #[error("dimension mismatch")]
    DimensionMismatch,
}

fn is_zero_vec(v: &[Rat]) -> bool {
    v.iter().all(|c| c.is_zero())
}

/// k parallel to v, with a nonzero factor (v itself nonzero).
fn proportional_nonzero(k: &[Rat], v: &[Rat]) -> bool {
    if is_zero_vec(k) {
        return false;
    }
    for i in 0..k.len() {
        for j in i + 1..k.len() {
            if &k[i] * &v[j] != &k[j] * &v[i] {
                return false;
            }
        }
    }
    // same support: k_i = c v_i forces k_i = 0 wherever v_i = 0
    k.iter().zip(v).all(|(ki, vi)| !vi.is_zero() || ki.is_zero())
}

fn is_null(v: &[Rat]) -> bool {
    !is_zero_vec(v) && minkowski_square(v).is_zero()
}

/// k in the closed future cone V̄₊ (including 0 excluded separately).
fn in_closed_future(k: &[Rat]) -> bool {
    !k[0].is_negative() && !minkowski_square(k).is_negative()
}

/// `(x,k) ~ (x',k')` for the commutator function: x'-x null (or zero), k a
/// null covector coparallel to the segment (any null k at coincidence), and
/// k' equal to k under the trivial transport.
pub fn wf_commutator_member(
    x: &[Rat],
    k: &[Rat],
    xp: &[Rat],
    kp: &[Rat],
) -> Result<bool, ConeError> {
    if is_zero_vec(k) && is_zero_vec(kp) {
        return Err(ConeError::BothZero);
    }
    if x.len() != k.len() || xp.len() != kp.len() || x.len() != xp.len() {
        return Err(ConeError::DimensionMismatch);
    }
    if k != kp {
        return Ok(false);
    }
    let v = diff(xp, x);
    if is_zero_vec(&v) {
        return Ok(is_null(k));
    }
    if !minkowski_square(&v).is_zero() {
        return Ok(false);
    }
    Ok(proportional_nonzero(k, &v))
}

/// Hadamard two-point membership: the commutator condition with the extra
/// positive-frequency restriction k in V̄₊.
pub fn wf2_hadamard_member(
    x: &[Rat],
    k: &[Rat],
    xp: &[Rat],
    kp: &[Rat],
) -> Result<bool, ConeError> {
    Ok(wf_commutator_member(x, k, xp, kp)? && in_closed_future(k))
}

/// Feynman propagator membership: the off-diagonal piece O (null-related
/// distinct points, frequency sign tied to the causal order) plus the
/// diagonal piece D (coincident points, arbitrary nonzero covector).
pub fn wf_feynman_member(
    x: &[Rat],
    k: &[Rat],
    xp: &[Rat],
    kp: &[Rat],
) -> Result<bool, ConeError> {
    if is_zero_vec(k) && is_zero_vec(kp) {
        return Err(ConeError::BothZero);
    }
    if x.len() != k.len() || xp.len() != kp.len() || x.len() != xp.len() {
        return Err(ConeError::DimensionMismatch);
    }
    if k != kp {
        return Ok(false);
    }
    let v = diff(xp, x);
    if is_zero_vec(&v) {
        // D piece: any nonzero covector on the diagonal
        return Ok(!is_zero_vec(k));
    }
    if !minkowski_square(&v).is_zero() {
        return Ok(false);
    }
    if !proportional_nonzero(k, &v) {
        return Ok(false);
    }
    // O piece sign rule: k future-directed when x is the later point
    let x_later = x[0] > xp[0];
    Ok(if x_later {
        k[0].is_positive()
    } else {
        k[0].is_negative()
    })
}

/// A finitely generated closed convex cone of covectors at a base point
/// (the zero covector is excluded from membership).
#[derive(Debug, Clone)]
pub struct ConeGenerators {
    pub base: Vec<Rat>,
    pub generators: Vec<Vec<Rat>>,
}

impl ConeGenerators {
    pub fn new(base: Vec<Rat>, generators: Vec<Vec<Rat>>) -> Result<Self, ConeError> {
        if generators.iter().any(|g| is_zero_vec(g)) {
            return Err(ConeError::ZeroGenerator);
        }
        Ok(ConeGenerators { base, generators })
    }
}

/// Hörmander criterion for multiplying distributions: true iff no
/// nontrivial nonnegative combination a + b = 0 with a in cone(A), b in
/// cone(B). Decided by exact LP feasibility of the cancellation.
pub fn hormander_product_check(a: &ConeGenerators, b: &ConeGenerators) -> Result<bool, ConeError> {
    if a.base != b.base {
        return Err(ConeError::BaseMismatch);
    }
    let gens: Vec<&Vec<Rat>> = a.generators.iter().chain(b.generators.iter()).collect();
    if gens.is_empty() {
        return Ok(true);
    }
    let d = gens[0].len();
    if gens.iter().any(|g| g.len() != d) {
        return Err(ConeError::DimensionMismatch);
    }
    // Σ λ_g g = 0, Σ λ_g = 1, λ >= 0
    let m = gens.len();
    let mut rows: Vec<Vec<Rat>> = (0..d)
        .map(|c| gens.iter().map(|g| g[c].clone()).collect())
        .collect();
    rows.push(vec![Rat::one(); m]);
    let mut rhs = vec![Rat::zero(); d];
    rhs.push(Rat::one());
    Ok(matches!(lp::feasible(&rows, &rhs), Feasibility::Infeasible))
}

/// Restriction criterion: the listed cones may be restricted to the linear
/// subspace iff none contains a nonzero covector annihilating the subspace
/// (i.e. lying in its conormal space).
pub fn restriction_allowed(
    cones: &[ConeGenerators],
    subspace_basis: &[Vec<Rat>],
) -> Result<bool, ConeError> {
    for cone in cones {
        if cone.generators.is_empty() {
            continue;
        }
        let d = cone.generators[0].len();
        if cone.generators.iter().any(|g| g.len() != d)
            || subspace_basis.iter().any(|s| s.len() != d)
        {
            return Err(ConeError::DimensionMismatch);
        }
        let m = cone.generators.len();
        // feasibility: λ >= 0, Σλ = 1, (Σ λ g) · s_j = 0 for all j
        let mut rows: Vec<Vec<Rat>> = Vec::new();
        for s in subspace_basis {
            rows.push(
                cone.generators
                    .iter()
                    .map(|g| g.iter().zip(s).map(|(a, b)| a * b).sum())
                    .collect(),
            );
        }
        rows.push(vec![Rat::one(); m]);
        let mut rhs = vec![Rat::zero(); subspace_basis.len()];
        rhs.push(Rat::one());
        if matches!(lp::feasible(&rows, &rhs), Feasibility::Feasible { .. }) {
            // a combination annihilates the subspace; it blocks restriction
            // only if a nonzero such covector exists
            if nonzero_conormal_element_exists(&cone.generators, &rows, &rhs, d) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Whether the feasible set {λ >= 0 satisfying `rows`·λ = `rhs`} contains a
/// point with Σ λ g ≠ 0: maximize each coordinate of the image in both
/// signs; all-zero optima mean the image is identically zero there.
fn nonzero_conormal_element_exists(
    gens: &[Vec<Rat>],
    rows: &[Vec<Rat>],
    rhs: &[Rat],
    d: usize,
) -> bool {
    for c in 0..d {
        for sign in [1i64, -1] {
            let obj: Vec<Rat> = gens
                .iter()
                .map(|g| &g[c] * BigRational::from(BigInt::from(sign)))
                .collect();
            match lp::maximize(rows, rhs, &obj) {
                LpOutcome::Optimal { value, .. } => {
                    if value.is_positive() {
                        return true;
                    }
                }
                LpOutcome::Unbounded => return true,
                LpOutcome::Infeasible => return false,
            }
        }
    }
    false
}

/// A point configuration with one covector per point.
#[derive(Debug, Clone)]
pub struct CovectorConfig {
    pub d: usize,
    pub points: Vec<Vec<Rat>>,
    pub covectors: Vec<Vec<Rat>>,
}

impl CovectorConfig {
    pub fn new(
        d: usize,
        points: Vec<Vec<Rat>>,
        covectors: Vec<Vec<Rat>>,
    ) -> Result<Self, ConeError> {
        if points.len() != covectors.len()
            || points.iter().any(|p| p.len() != d)
            || covectors.iter().any(|k| k.len() != d)
        {
            return Err(ConeError::DimensionMismatch);
        }
        if covectors.iter().all(|k| is_zero_vec(k)) {
            return Err(ConeError::AllZero);
        }
        Ok(CovectorConfig {
            d,
            points,
            covectors,
        })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }
}

/// One oriented edge of a feasibility witness: `k_e = beta * direction`,
/// flowing from `source` to `range` (plus sign at the source vertex).
#[derive(Debug, Clone)]
pub struct EdgeWitness {
    pub source: usize,
    pub range: usize,
    pub direction: Vec<Rat>,
    pub beta: Rat,
}

#[derive(Debug, Clone)]
pub enum ImmersionVerdict {
    Feasible { witness: Vec<EdgeWitness> },
    Infeasible,
    /// d >= 3 with coincident-point edges and no direction grid: the null
    /// cone cannot be enumerated, so infeasibility is not claimed.
    IncompleteSearch,
}

/// Null directions available for an edge between the points `i` and `j`:
/// both future null rays in d = 2 at coincidence, a single ray for distinct
/// null-related points, nothing otherwise. `grid` supplies extra future
/// null directions for coincident pairs in d >= 3.
fn edge_rays(
    cc: &CovectorConfig,
    i: usize,
    j: usize,
    grid: Option<&[Vec<Rat>]>,
) -> (Vec<Vec<Rat>>, bool) {
    match classify_pair(&cc.points[i], &cc.points[j]) {
        CausalVerdict::Equal => {
            if cc.d == 2 {
                let one = Rat::one;
                (
                    vec![vec![one(), one()], vec![one(), -one()]],
                    true,
                )
            } else if let Some(grid) = grid {
                let rays: Vec<Vec<Rat>> = grid
                    .iter()
                    .filter(|u| u.len() == cc.d && is_null(u) && u[0].is_positive())
                    .cloned()
                    .collect();
                (rays, true)
            } else {
                (Vec::new(), true)
            }
        }
        CausalVerdict::Lightlike { .. } => {
            let v = diff(&cc.points[j], &cc.points[i]);
            let future = if v[0].is_positive() {
                v
            } else {
                v.into_iter().map(|c| -c).collect()
            };
            (vec![future], false)
        }
        _ => (Vec::new(), false),
    }
}

struct SlotTable {
    /// (i, j, ray, sign): contribution `sign * beta * ray` to k_i and
    /// `-sign * beta * ray` to k_j.
    slots: Vec<(usize, usize, Vec<Rat>, i64)>,
    incomplete: bool,
}

fn build_slots(cc: &CovectorConfig, grid: Option<&[Vec<Rat>]>, signed: bool) -> SlotTable {
    let n = cc.n();
    let mut slots = Vec::new();
    let mut incomplete = false;
    for i in 0..n {
        for j in i + 1..n {
            let (rays, coincident) = edge_rays(cc, i, j, grid);
            if coincident && cc.d >= 3 && rays.is_empty() {
                incomplete = true;
            }
            for ray in rays {
                slots.push((i, j, ray.clone(), 1));
                if signed {
                    slots.push((i, j, ray, -1));
                }
            }
        }
    }
    SlotTable { slots, incomplete }
}

fn vertex_constraints(cc: &CovectorConfig, slots: &[(usize, usize, Vec<Rat>, i64)], extra_cols: usize) -> (Vec<Vec<Rat>>, Vec<Rat>) {
    let n = cc.n();
    let d = cc.d;
    let mut rows = Vec::with_capacity(n * d);
    let mut rhs = Vec::with_capacity(n * d);
    for v in 0..n {
        for c in 0..d {
            let mut row: Vec<Rat> = slots
                .iter()
                .map(|(i, j, ray, sign)| {
                    let s = BigRational::from(BigInt::from(*sign));
                    if *i == v {
                        &ray[c] * &s
                    } else if *j == v {
                        -(&ray[c] * &s)
                    } else {
                        Rat::zero()
                    }
                })
                .collect();
            row.extend(std::iter::repeat(Rat::zero()).take(extra_cols));
            rows.push(row);
            rhs.push(cc.covectors[v][c].clone());
        }
    }
    (rows, rhs)
}

fn witness_from_solution(
    slots: &[(usize, usize, Vec<Rat>, i64)],
    x: &[Rat],
) -> Vec<EdgeWitness> {
    let mut out = Vec::new();
    for (slot, beta) in slots.iter().zip(x) {
        if beta.is_positive() {
            let (i, j, ray, sign) = slot;
            // negative-sign slots are edges oriented from j to i
            let (source, range) = if *sign > 0 { (*i, *j) } else { (*j, *i) };
            out.push(EdgeWitness {
                source,
                range,
                direction: ray.clone(),
                beta: beta.clone(),
            });
        }
    }
    out
}

/// Membership in the time-ordered cone: does some admissible null-edge
/// multigraph carry edge covectors reproducing every k_i? Edges between
/// distinct points may run in either admissible orientation; the verdict is
/// a complete decision in d = 2 and for configurations without coincident
/// pairs in any d.
pub fn gamma_to_member(
    cc: &CovectorConfig,
    grid: Option<&[Vec<Rat>]>,
) -> Result<ImmersionVerdict, ConeError> {
    let table = build_slots(cc, grid, true);
    if table.slots.is_empty() {
        return Ok(if table.incomplete {
            ImmersionVerdict::IncompleteSearch
        } else {
            ImmersionVerdict::Infeasible
        });
    }
    let (rows, rhs) = vertex_constraints(cc, &table.slots, 0);
    match lp::feasible(&rows, &rhs) {
        Feasibility::Feasible { x } => Ok(ImmersionVerdict::Feasible {
            witness: witness_from_solution(&table.slots, &x),
        }),
        Feasibility::Infeasible => Ok(if table.incomplete {
            ImmersionVerdict::IncompleteSearch
        } else {
            ImmersionVerdict::Infeasible
        }),
    }
}

/// Membership in the saturated-graph cone: some graph with exactly `m_i`
/// edge ends at vertex i, all edge covectors future-directed and nonzero.
pub fn digamma_member(
    cc: &CovectorConfig,
    degrees: &[usize],
    grid: Option<&[Vec<Rat>]>,
) -> Result<ImmersionVerdict, ConeError> {
    if degrees.len() != cc.n() {
        return Err(ConeError::DimensionMismatch);
    }
    let mut incomplete = false;
    let graphs = enumerate_saturated_graphs(degrees);
    for g in &graphs {
        match saturated_graph_feasible(cc, g, grid) {
            SaturatedOutcome::Feasible(witness) => {
                return Ok(ImmersionVerdict::Feasible { witness })
            }
            SaturatedOutcome::Infeasible => {}
            SaturatedOutcome::Incomplete => incomplete = true,
        }
    }
    Ok(if incomplete {
        ImmersionVerdict::IncompleteSearch
    } else {
        ImmersionVerdict::Infeasible
    })
}

enum SaturatedOutcome {
    Feasible(Vec<EdgeWitness>),
    Infeasible,
    Incomplete,
}

/// Strict feasibility for one saturated graph: every populated pair must
/// carry a strictly positive future aggregate. Strictness is decided by
/// maximizing a common slack ε with the aggregate of each used pair at
/// least ε.
fn saturated_graph_feasible(
    cc: &CovectorConfig,
    g: &ContractionGraph,
    grid: Option<&[Vec<Rat>]>,
) -> SaturatedOutcome {
    let n = cc.n();
    let mut slots: Vec<(usize, usize, Vec<Rat>, i64)> = Vec::new();
    let mut used_pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mult = g.multiplicity(i, j);
            if mult == 0 {
                continue;
            }
            let (rays, coincident) = edge_rays(cc, i, j, grid);
            if rays.is_empty() {
                return if coincident && cc.d >= 3 {
                    SaturatedOutcome::Incomplete
                } else {
                    SaturatedOutcome::Infeasible
                };
            }
            used_pairs.push((i, j));
            for ray in rays {
                slots.push((i, j, ray, 1));
            }
        }
    }
    if used_pairs.is_empty() {
        return SaturatedOutcome::Infeasible;
    }
    // columns: betas, then epsilon, then one slack per used pair, then the
    // cap slack for epsilon <= 1
    let n_beta = slots.len();
    let n_pairs = used_pairs.len();
    let extra = 1 + n_pairs + 1;
    let (mut rows, mut rhs) = vertex_constraints(cc, &slots, extra);
    for (p, (i, j)) in used_pairs.iter().enumerate() {
        let mut row = vec![Rat::zero(); n_beta + extra];
        for (s, (si, sj, _, _)) in slots.iter().enumerate() {
            if si == i && sj == j {
                row[s] = Rat::one();
            }
        }
        row[n_beta] = -Rat::one();
        row[n_beta + 1 + p] = -Rat::one();
        rows.push(row);
        rhs.push(Rat::zero());
    }
    let mut cap = vec![Rat::zero(); n_beta + extra];
    cap[n_beta] = Rat::one();
    cap[n_beta + 1 + n_pairs] = Rat::one();
    rows.push(cap);
    rhs.push(Rat::one());
    let mut obj = vec![Rat::zero(); n_beta + extra];
    obj[n_beta] = Rat::one();
    match lp::maximize(&rows, &rhs, &obj) {
        LpOutcome::Optimal { value, x } => {
            if value.is_positive() {
                SaturatedOutcome::Feasible(witness_from_solution(&slots, &x[..n_beta]))
            } else {
                SaturatedOutcome::Infeasible
            }
        }
        LpOutcome::Unbounded => unreachable!("epsilon is capped at 1"),
        LpOutcome::Infeasible => SaturatedOutcome::Infeasible,
    }
}

/// Substitute a witness back into the vertex balance: returns the exact
/// k_i it reproduces.
pub fn witness_vertex_sums(d: usize, n: usize, witness: &[EdgeWitness]) -> Vec<Vec<Rat>> {
    let mut sums = vec![vec![Rat::zero(); d]; n];
    for e in witness {
        for c in 0..d {
            let contrib = &e.beta * &e.direction[c];
            sums[e.source][c] += &contrib;
            sums[e.range][c] -= &contrib;
        }
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::rat_int;

    fn r(n: i64) -> Rat {
        rat_int(n)
    }

    fn v(cs: &[i64]) -> Vec<Rat> {
        cs.iter().map(|&c| r(c)).collect()
    }

    #[test]
    fn commutator_membership_examples() {
        // null-related pair, coparallel null covector, equal components
        assert!(wf_commutator_member(&v(&[0, 0]), &v(&[1, 1]), &v(&[1, 1]), &v(&[1, 1])).unwrap());
        // spacelike separation: no null geodesic
        assert!(!wf_commutator_member(&v(&[0, 0]), &v(&[1, 1]), &v(&[0, 3]), &v(&[1, 1])).unwrap());
        // degenerate geodesic: coincident points with a null covector
        assert!(wf_commutator_member(&v(&[2, 5]), &v(&[1, -1]), &v(&[2, 5]), &v(&[1, -1])).unwrap());
        // coincident with timelike covector: not in the set
        assert!(!wf_commutator_member(&v(&[0, 0]), &v(&[1, 0]), &v(&[0, 0]), &v(&[1, 0])).unwrap());
        // transport must preserve components
        assert!(!wf_commutator_member(&v(&[0, 0]), &v(&[1, 1]), &v(&[1, 1]), &v(&[2, 2])).unwrap());
        // covector not parallel to the segment
        assert!(
            !wf_commutator_member(&v(&[0, 0]), &v(&[1, -1]), &v(&[1, 1]), &v(&[1, -1])).unwrap()
        );
        assert!(matches!(
            wf_commutator_member(&v(&[0, 0]), &v(&[0, 0]), &v(&[1, 1]), &v(&[0, 0])),
            Err(ConeError::BothZero)
        ));
    }

    #[test]
    fn hadamard_restricts_to_future_frequencies() {
        assert!(wf2_hadamard_member(&v(&[0, 0]), &v(&[1, 1]), &v(&[1, 1]), &v(&[1, 1])).unwrap());
        assert!(
            !wf2_hadamard_member(&v(&[0, 0]), &v(&[-1, -1]), &v(&[1, 1]), &v(&[-1, -1])).unwrap()
        );
        assert!(wf2_hadamard_member(&v(&[0, 0]), &v(&[1, -1]), &v(&[0, 0]), &v(&[1, -1])).unwrap());
    }

    #[test]
    fn feynman_diagonal_and_sign_rule() {
        // D piece: arbitrary nonzero covector on the diagonal
        assert!(wf_feynman_member(&v(&[0, 0]), &v(&[0, 1]), &v(&[0, 0]), &v(&[0, 1])).unwrap());
        // O piece: x later, future covector
        assert!(wf_feynman_member(&v(&[1, 1]), &v(&[1, 1]), &v(&[0, 0]), &v(&[1, 1])).unwrap());
        // x later but past covector: wrong frequency side
        assert!(!wf_feynman_member(&v(&[1, 1]), &v(&[-1, -1]), &v(&[0, 0]), &v(&[-1, -1])).unwrap());
        // x earlier, past covector
        assert!(wf_feynman_member(&v(&[0, 0]), &v(&[-1, -1]), &v(&[1, 1]), &v(&[-1, -1])).unwrap());
        // spacelike distinct points
        assert!(!wf_feynman_member(&v(&[0, 0]), &v(&[1, 1]), &v(&[0, 5]), &v(&[1, 1])).unwrap());
    }

    #[test]
    fn hormander_criterion_examples() {
        let base = v(&[0, 0]);
        let future = ConeGenerators::new(base.clone(), vec![v(&[1, 1]), v(&[1, -1])]).unwrap();
        assert!(hormander_product_check(&future, &future).unwrap());

        let a = ConeGenerators::new(base.clone(), vec![v(&[1, 1])]).unwrap();
        let b = ConeGenerators::new(base.clone(), vec![v(&[-1, -1])]).unwrap();
        assert!(!hormander_product_check(&a, &b).unwrap());

        // Feynman D-piece: all directions against itself cancels
        let all = ConeGenerators::new(
            base.clone(),
            vec![v(&[1, 0]), v(&[-1, 0]), v(&[0, 1]), v(&[0, -1])],
        )
        .unwrap();
        assert!(!hormander_product_check(&all, &all).unwrap());

        let empty = ConeGenerators::new(base, vec![]).unwrap();
        assert!(hormander_product_check(&empty, &empty).unwrap());
    }

    #[test]
    fn hormander_symmetric_and_monotone() {
        let base = v(&[0, 0]);
        let gens = [v(&[1, 1]), v(&[1, -1]), v(&[-1, -1]), v(&[2, 1])];
        for i in 1..=gens.len() {
            for j in 1..=gens.len() {
                let a = ConeGenerators::new(base.clone(), gens[..i].to_vec()).unwrap();
                let b = ConeGenerators::new(base.clone(), gens[..j].to_vec()).unwrap();
                assert_eq!(
                    hormander_product_check(&a, &b).unwrap(),
                    hormander_product_check(&b, &a).unwrap()
                );
            }
        }
        // adding generators can only turn true into false
        let mut prev = true;
        for i in 1..=gens.len() {
            let a = ConeGenerators::new(base.clone(), gens[..i].to_vec()).unwrap();
            let now = hormander_product_check(&a, &a).unwrap();
            assert!(prev || !now);
            prev = now;
        }
    }

    #[test]
    fn restriction_to_diagonal() {
        // R^4 = two copies of R^2; diagonal spanned by (e, e)
        let base = v(&[0, 0, 0, 0]);
        let diag = vec![v(&[1, 0, 1, 0]), v(&[0, 1, 0, 1])];
        // Hadamard generators (k, -k), k future null: annihilate the diagonal
        let hadamard = ConeGenerators::new(
            base.clone(),
            vec![v(&[1, 1, -1, -1]), v(&[1, -1, -1, 1])],
        )
        .unwrap();
        assert!(!restriction_allowed(&[hadamard], &diag).unwrap());

        // a cone transverse to the conormal restricts fine
        let transverse = ConeGenerators::new(base.clone(), vec![v(&[1, 1, 1, 1])]).unwrap();
        assert!(restriction_allowed(&[transverse], &diag).unwrap());

        let empty = ConeGenerators::new(base, vec![]).unwrap();
        assert!(restriction_allowed(&[empty], &diag).unwrap());
    }

    #[test]
    fn gamma_to_examples() {
        // coincident pair, antipodal null covectors: degenerate edge
        let cc = CovectorConfig::new(
            2,
            vec![v(&[0, 0]), v(&[0, 0])],
            vec![v(&[1, 1]), v(&[-1, -1])],
        )
        .unwrap();
        match gamma_to_member(&cc, None).unwrap() {
            ImmersionVerdict::Feasible { witness } => {
                let sums = witness_vertex_sums(2, 2, &witness);
                assert_eq!(sums[0], v(&[1, 1]));
                assert_eq!(sums[1], v(&[-1, -1]));
            }
            other => panic!("expected feasible, got {other:?}"),
        }

        // both covectors strictly future timelike: excluded
        let cc = CovectorConfig::new(
            2,
            vec![v(&[0, 0]), v(&[1, 1])],
            vec![v(&[2, 1]), v(&[2, -1])],
        )
        .unwrap();
        assert!(matches!(
            gamma_to_member(&cc, None).unwrap(),
            ImmersionVerdict::Infeasible
        ));

        // spacelike pair: no admissible edges at all
        let cc = CovectorConfig::new(
            2,
            vec![v(&[0, 0]), v(&[0, 7])],
            vec![v(&[1, 1]), v(&[1, -1])],
        )
        .unwrap();
        assert!(matches!(
            gamma_to_member(&cc, None).unwrap(),
            ImmersionVerdict::Infeasible
        ));
    }

    #[test]
    fn gamma_to_coincident_covectors_sum_to_zero() {
        // on the diagonal, feasibility forces k1 + k2 = 0: probe both sides
        let ok = CovectorConfig::new(
            2,
            vec![v(&[3, 4]), v(&[3, 4])],
            vec![v(&[2, 0]), v(&[-2, 0])],
        )
        .unwrap();
        assert!(matches!(
            gamma_to_member(&ok, None).unwrap(),
            ImmersionVerdict::Feasible { .. }
        ));
        let bad = CovectorConfig::new(
            2,
            vec![v(&[3, 4]), v(&[3, 4])],
            vec![v(&[2, 0]), v(&[-1, 0])],
        )
        .unwrap();
        assert!(matches!(
            gamma_to_member(&bad, None).unwrap(),
            ImmersionVerdict::Infeasible
        ));
    }

    #[test]
    fn gamma_to_incomplete_in_higher_dimension() {
        let cc = CovectorConfig::new(
            3,
            vec![v(&[0, 0, 0]), v(&[0, 0, 0])],
            vec![v(&[1, 1, 0]), v(&[-1, -1, 0])],
        )
        .unwrap();
        assert!(matches!(
            gamma_to_member(&cc, None).unwrap(),
            ImmersionVerdict::IncompleteSearch
        ));
        // with a grid containing the needed ray, it becomes feasible
        let grid = vec![v(&[1, 1, 0]), v(&[1, -1, 0]), v(&[1, 0, 1]), v(&[1, 0, -1])];
        assert!(matches!(
            gamma_to_member(&cc, Some(&grid)).unwrap(),
            ImmersionVerdict::Feasible { .. }
        ));
    }

    #[test]
    fn digamma_examples() {
        // null-related pair, two parallel edges
        let cc = CovectorConfig::new(
            2,
            vec![v(&[0, 0]), v(&[1, 1])],
            vec![v(&[2, 2]), v(&[-2, -2])],
        )
        .unwrap();
        match digamma_member(&cc, &[2, 2], None).unwrap() {
            ImmersionVerdict::Feasible { witness } => {
                let sums = witness_vertex_sums(2, 2, &witness);
                assert_eq!(sums[0], v(&[2, 2]));
                assert_eq!(sums[1], v(&[-2, -2]));
                for e in &witness {
                    assert!(e.beta.is_positive());
                    assert!(e.direction[0].is_positive());
                }
            }
            other => panic!("expected feasible, got {other:?}"),
        }

        // spacelike pair: saturation unattainable
        let cc = CovectorConfig::new(
            2,
            vec![v(&[0, 0]), v(&[0, 9])],
            vec![v(&[1, 1]), v(&[1, -1])],
        )
        .unwrap();
        assert!(matches!(
            digamma_member(&cc, &[2, 2], None).unwrap(),
            ImmersionVerdict::Infeasible
        ));

        // odd total degree: no saturated graphs at all
        let cc = CovectorConfig::new(
            2,
            vec![v(&[0, 0]), v(&[1, 1])],
            vec![v(&[1, 1]), v(&[-1, -1])],
        )
        .unwrap();
        assert!(matches!(
            digamma_member(&cc, &[2, 1], None).unwrap(),
            ImmersionVerdict::Infeasible
        ));
    }

    #[test]
    fn digamma_strictness_rejects_wrong_sign() {
        // coincident pair with k1 past-directed cannot be a sum of future
        // null edges out of vertex 1
        let cc = CovectorConfig::new(
            2,
            vec![v(&[0, 0]), v(&[0, 0])],
            vec![v(&[-2, 0]), v(&[2, 0])],
        )
        .unwrap();
        // saturated edges carry +k_e at the lower-index vertex and every
        // ray is future, so a past-directed k at vertex 0 is unreachable
        assert!(matches!(
            digamma_member(&cc, &[2, 2], None).unwrap(),
            ImmersionVerdict::Infeasible
        ));
    }

    #[test]
    fn digamma_implies_gamma_to() {
        let configs = [
            (vec![v(&[0, 0]), v(&[1, 1])], vec![v(&[2, 2]), v(&[-2, -2])]),
            (vec![v(&[0, 0]), v(&[0, 0])], vec![v(&[2, 0]), v(&[-2, 0])]),
        ];
        for (pts, ks) in configs {
            let cc = CovectorConfig::new(2, pts, ks).unwrap();
            if matches!(
                digamma_member(&cc, &[2, 2], None).unwrap(),
                ImmersionVerdict::Feasible { .. }
            ) {
                assert!(matches!(
                    gamma_to_member(&cc, None).unwrap(),
                    ImmersionVerdict::Feasible { .. }
                ));
            }
        }
    }
}
