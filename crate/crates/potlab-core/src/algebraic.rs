//! Bivariate polynomials P(z, y), per-fiber root solving, singular-set
//! computation, and numerical analytic continuation of the root functions
//! along paths, including monodromy permutations.

use num_complex::Complex64;
use thiserror::Error;

use crate::poly::{aberth_roots, Poly, RootError};
use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraicError {
    #[error("leading coefficient p_k must not be the zero polynomial")]
    ZeroLeadingPolynomial,
    #[error("polynomial must have y-degree >= 1")]
    DegreeZero,
    #[error("polynomial is not squarefree in y (resultant with its y-derivative vanishes identically)")]
    NotSquarefree,
    #[error("discriminant vanishes identically; input has a repeated factor")]
    DegenerateDiscriminant,
    #[error("leading coefficient vanishes at z = {z}")]
    LeadingCoefficientVanishes { z: Complex64 },
    #[error("fiber root iteration failed: {0}")]
    Roots(#[from] RootError),
    #[error("fiber residual {residual:.3e} exceeds tolerance {tolerance:.3e} at z = {z}")]
    ResidualTooLarge {
        z: Complex64,
        residual: f64,
        tolerance: f64,
    },
    #[error("start labels do not solve the first fiber")]
    InvalidStartLabels,
    #[error("path vertex {z} is within safety clearance of the singular set")]
    PathHitsSingularSet { z: Complex64 },
    #[error("continuation step underflow near z = {z} (path passes too close to a singular point)")]
    StepUnderflow { z: Complex64 },
    #[error("path needs at least one vertex")]
    EmptyPath,
}

/// P(z, y) = sum_j p_j(z) y^j with complex polynomial coefficients in z.
///
/// Construction enforces a nonzero leading coefficient polynomial and
/// squarefreeness in y (the resultant of P and dP/dy must not vanish
/// identically).
#[derive(Debug, Clone, PartialEq)]
pub struct BivariatePolynomial {
    coeffs: Vec<Poly>,
}

impl BivariatePolynomial {
    pub fn new(coeffs: Vec<Poly>) -> Result<Self, AlgebraicError> {
        if coeffs.len() < 2 {
            return Err(AlgebraicError::DegreeZero);
        }
        if coeffs.last().unwrap().is_zero() {
            return Err(AlgebraicError::ZeroLeadingPolynomial);
        }
        let p = BivariatePolynomial { coeffs };
        if p.resultant_poly().is_none() {
            return Err(AlgebraicError::NotSquarefree);
        }
        Ok(p)
    }

    /// Builds z * Q(y) - 1 for a univariate Q, the fiber equation Q(y) = 1/z.
    pub fn from_fiber_equation(q: &Poly) -> Result<Self, AlgebraicError> {
        let z = Poly::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        let mut coeffs: Vec<Poly> = q.coeffs().iter().map(|&c| z.scale(c)).collect();
        if coeffs.is_empty() {
            coeffs.push(Poly::zero());
        }
        coeffs[0] = coeffs[0].add(&Poly::constant(Complex64::new(-1.0, 0.0)));
        Self::new(coeffs)
    }

    pub fn degree_y(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, j: usize) -> &Poly {
        &self.coeffs[j]
    }

    pub fn coeffs(&self) -> &[Poly] {
        &self.coeffs
    }

    pub fn leading(&self) -> &Poly {
        self.coeffs.last().unwrap()
    }

    pub fn eval(&self, z: Complex64, y: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in self.coeffs.iter().rev() {
            acc = acc * y + p.eval(z);
        }
        acc
    }

    /// d/dy as a bivariate polynomial (no squarefree re-check).
    pub fn y_derivative(&self) -> BivariatePolynomial {
        let coeffs: Vec<Poly> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, p)| p.scale(Complex64::new(j as f64, 0.0)))
            .collect();
        BivariatePolynomial { coeffs }
    }

    /// Coefficients of the univariate fiber polynomial y -> P(z, y).
    pub fn fiber_coeffs(&self, z: Complex64) -> Vec<Complex64> {
        self.coeffs.iter().map(|p| p.eval(z)).collect()
    }

    /// Max coefficient magnitude of the fiber at z.
    pub fn fiber_scale(&self, z: Complex64) -> f64 {
        self.coeffs
            .iter()
            .map(|p| p.eval(z).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_z_degree(&self) -> usize {
        self.coeffs.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Normalized fiber residual of a candidate root.
    pub fn fiber_residual(&self, z: Complex64, y: Complex64) -> f64 {
        let k = self.degree_y();
        let lead = self.leading().eval(z).norm();
        self.eval(z, y).norm() / (lead * y.norm().max(1.0).powi(k as i32)).max(1e-300)
    }

    /// dP/dz evaluated at (z, y).
    pub fn eval_z_derivative(&self, z: Complex64, y: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in self.coeffs.iter().rev() {
            acc = acc * y + p.derivative().eval(z);
        }
        acc
    }

    /// Sylvester determinant of (P, dP/dy) in y, evaluated at a point z.
    /// Formal degrees (k, k-1) are used so the value agrees with the
    /// interpolated resultant polynomial even where p_k(z) = 0.
    pub fn resultant_at(&self, z: Complex64) -> Complex64 {
        let k = self.degree_y();
        let a = self.fiber_coeffs(z);
        let b = self.y_derivative().fiber_coeffs(z);
        sylvester_det(&a, &b, k, k - 1)
    }

    /// Res_y(P, dP/dy) as a polynomial in z, recovered by evaluation on
    /// roots of unity and inverse DFT. Returns None when it vanishes
    /// identically (a repeated factor in y).
    pub fn resultant_poly(&self) -> Option<Poly> {
        let k = self.degree_y();
        let d = self.max_z_degree();
        let bound = (2 * k - 1) * d;
        let n = bound + 1;
        let mut values = Vec::with_capacity(n);
        let mut entry_scale = 0.0_f64;
        for m in 0..n {
            let theta = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
            let z = Complex64::from_polar(1.0, theta);
            entry_scale = entry_scale.max(self.fiber_scale(z));
            values.push(self.resultant_at(z));
        }
        let det_scale = entry_scale.max(1e-300).powi((2 * k - 1) as i32);
        if values.iter().all(|v| v.norm() <= 1e-10 * det_scale) {
            return None;
        }
        // inverse DFT
        let mut coeffs = Vec::with_capacity(n);
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, v) in values.iter().enumerate() {
                let theta = -2.0 * std::f64::consts::PI * (j * m) as f64 / n as f64;
                acc += v * Complex64::from_polar(1.0, theta);
            }
            coeffs.push(acc / n as f64);
        }
        // drop interpolation noise above the true degree
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut trimmed = coeffs;
        while trimmed.len() > 1 && trimmed.last().unwrap().norm() <= 1e-10 * scale {
            trimmed.pop();
        }
        Some(Poly::new(trimmed))
    }
}

fn sylvester_det(a: &[Complex64], b: &[Complex64], m: usize, n: usize) -> Complex64 {
    let size = m + n;
    if size == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut mat = vec![Complex64::new(0.0, 0.0); size * size];
    // n rows of a (descending), m rows of b
    for row in 0..n {
        for (j, &c) in a.iter().rev().enumerate() {
            mat[row * size + row + j] = c;
        }
    }
    for row in 0..m {
        for (j, &c) in b.iter().rev().enumerate() {
            mat[(n + row) * size + row + j] = c;
        }
    }
    // LU determinant with partial pivoting
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..size {
        let mut pivot = col;
        let mut best = mat[col * size + col].norm();
        for row in col + 1..size {
            let v = mat[row * size + col].norm();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            for j in 0..size {
                mat.swap(col * size + j, pivot * size + j);
            }
            det = -det;
        }
        let diag = mat[col * size + col];
        det *= diag;
        for row in col + 1..size {
            let factor = mat[row * size + col] / diag;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in col..size {
                let sub = factor * mat[col * size + j];
                mat[row * size + j] -= sub;
            }
        }
    }
    det
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularKind {
    LeadingCoeffZero,
    DiscriminantZero,
}

/// The singular fibers of a bivariate polynomial: zeros of the leading
/// coefficient and of the y-discriminant.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSet {
    pub points: Vec<(Complex64, SingularKind)>,
    pub safety_radius: f64,
}

impl SingularSet {
    pub fn distance(&self, z: Complex64) -> f64 {
        self.points
            .iter()
            .map(|(p, _)| (z - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn locations(&self) -> Vec<Complex64> {
        self.points.iter().map(|(p, _)| *p).collect()
    }
}

/// Single-linkage clustering; each cluster is replaced by its centroid
/// (symmetric root debris around a multiple root then cancels to first
/// order).
fn cluster_points(mut points: Vec<Complex64>, tolerance: f64) -> Vec<Complex64> {
    points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut cluster_of: Vec<usize> = (0..points.len()).collect();
    fn find(cluster_of: &mut [usize], i: usize) -> usize {
        let mut root = i;
        while cluster_of[root] != root {
            root = cluster_of[root];
        }
        let mut walk = i;
        while cluster_of[walk] != root {
            let next = cluster_of[walk];
            cluster_of[walk] = root;
            walk = next;
        }
        root
    }
    for (i, &pi) in points.iter().enumerate() {
        for (j, &pj) in points.iter().enumerate().skip(i + 1) {
            if (pi - pj).norm() > tolerance {
                continue;
            }
            let (a, b) = (find(&mut cluster_of, i), find(&mut cluster_of, j));
            if a != b {
                cluster_of[a] = b;
            }
        }
    }
    let mut sums: std::collections::BTreeMap<usize, (Complex64, usize)> =
        std::collections::BTreeMap::new();
    for (i, &p) in points.iter().enumerate() {
        let root = find(&mut cluster_of, i);
        let entry = sums.entry(root).or_insert((Complex64::new(0.0, 0.0), 0));
        entry.0 += p;
        entry.1 += 1;
    }
    sums.values().map(|(s, n)| s / *n as f64).collect()
}

/// Newton iteration on the system P = dP/dy = 0, seeded at the midpoint of
/// the closest root pair of the fiber at z0. Returns the refined location
/// when the residuals certify a genuine branch-collision point.
fn polish_discriminant_point(
    p: &BivariatePolynomial,
    py: &BivariatePolynomial,
    z0: Complex64,
) -> Option<Complex64> {
    let roots = solve_fiber(p, z0).ok()?;
    if roots.len() < 2 {
        return None;
    }
    let mut seed = (f64::INFINITY, Complex64::new(0.0, 0.0));
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let d = (roots[i] - roots[j]).norm();
            if d < seed.0 {
                seed = (d, (roots[i] + roots[j]) / 2.0);
            }
        }
    }
    let (mut z, mut y) = (z0, seed.1);
    for _ in 0..60 {
        let f1 = p.eval(z, y);
        let f2 = py.eval(z, y);
        let j11 = p.eval_z_derivative(z, y);
        let j12 = py.eval(z, y);
        let j21 = py.eval_z_derivative(z, y);
        let j22 = py.y_derivative().eval(z, y);
        let det = j11 * j22 - j12 * j21;
        if det.norm() < 1e-300 {
            return None;
        }
        let dz = (j22 * f1 - j12 * f2) / det;
        let dy = (j11 * f2 - j21 * f1) / det;
        z -= dz;
        y -= dy;
        if dz.norm() + dy.norm() <= 1e-15 * (1.0 + z.norm() + y.norm()) {
            break;
        }
    }
    let scale_p = p.fiber_scale(z).max(1e-300) * y.norm().max(1.0).powi(p.degree_y() as i32);
    let scale_py =
        py.fiber_scale(z).max(1e-300) * y.norm().max(1.0).powi(py.degree_y() as i32);
    if p.eval(z, y).norm() <= 1e-9 * scale_p && py.eval(z, y).norm() <= 1e-9 * scale_py {
        Some(z)
    } else {
        None
    }
}

/// Zeros of p_k plus zeros of Res_y(P, dP/dy) away from p_k^{-1}(0),
/// deduplicated. The safety radius is a quarter of the minimal pairwise
/// distance (scale-proportional fallback for fewer than two points).
///
/// Multiple roots of the numerical resultant scatter into clusters of
/// radius eps^(1/m); candidates are therefore polished against the exact
/// collision system P = dP/dy = 0 and debris near leading-coefficient
/// zeros is discarded when the polish fails to certify a collision.
pub fn discriminant_nodes(p: &BivariatePolynomial) -> Result<SingularSet, AlgebraicError> {
    let lead_roots_raw = if p.leading().degree() >= 1 {
        let lead = p.leading();
        lead.roots()?
            .into_iter()
            .map(|z| crate::poly::newton_refine(lead, z, 12))
            .collect()
    } else {
        Vec::new()
    };
    let res = p
        .resultant_poly()
        .ok_or(AlgebraicError::DegenerateDiscriminant)?;
    let disc_roots_raw = if res.degree() >= 1 { res.roots()? } else { Vec::new() };

    let scale = lead_roots_raw
        .iter()
        .chain(disc_roots_raw.iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let ctol = tol::cluster_tol(scale);
    let debris_radius = 1e-3 * (1.0 + scale);

    let lead_roots = cluster_points(lead_roots_raw, 10.0 * ctol);
    let py = p.y_derivative();
    let mut disc_keep: Vec<Complex64> = Vec::new();
    for cand in disc_roots_raw {
        let near_lead = lead_roots
            .iter()
            .any(|q| (cand - q).norm() <= debris_radius);
        match polish_discriminant_point(p, &py, cand) {
            Some(z) => {
                if lead_roots.iter().all(|q| (z - q).norm() > 10.0 * ctol) {
                    disc_keep.push(z);
                }
            }
            None => {
                if !near_lead {
                    disc_keep.push(cand);
                }
            }
        }
    }
    let disc_roots = cluster_points(disc_keep, 10.0 * ctol);

    let mut points: Vec<(Complex64, SingularKind)> = lead_roots
        .into_iter()
        .map(|z| (z, SingularKind::LeadingCoeffZero))
        .collect();
    for z in disc_roots {
        if points.iter().all(|(q, _)| (z - q).norm() > ctol) {
            points.push((z, SingularKind::DiscriminantZero));
        }
    }
    points.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));

    let safety_radius = if points.len() >= 2 {
        let mut min_dist = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                min_dist = min_dist.min((points[i].0 - points[j].0).norm());
            }
        }
        min_dist / 4.0
    } else {
        0.25 * (1.0 + scale)
    };

    Ok(SingularSet {
        points,
        safety_radius,
    })
}

/// All k roots of the fiber y -> P(z, y), sorted lexicographically by
/// (Re, Im).
pub fn solve_fiber(
    p: &BivariatePolynomial,
    z: Complex64,
) -> Result<Vec<Complex64>, AlgebraicError> {
    solve_fiber_seeded(p, z, None)
}

/// Fiber solve with explicit initial guesses (labeling follows the guesses
/// when provided; otherwise roots come back sorted).
pub fn solve_fiber_seeded(
    p: &BivariatePolynomial,
    z: Complex64,
    guesses: Option<&[Complex64]>,
) -> Result<Vec<Complex64>, AlgebraicError> {
    let coeffs = p.fiber_coeffs(z);
    let lead = coeffs.last().unwrap();
    if lead.norm() <= tol::DEGENERATE_TOL {
        return Err(AlgebraicError::LeadingCoefficientVanishes { z });
    }
    let mut roots = aberth_roots(&coeffs, guesses)?;
    let scale = p.fiber_scale(z);
    let tolerance = tol::RESIDUAL_TOL_FACTOR * scale;
    for &y in &roots {
        let residual = p.fiber_residual(z, y);
        if residual >= tolerance {
            return Err(AlgebraicError::ResidualTooLarge {
                z,
                residual,
                tolerance,
            });
        }
    }
    if guesses.is_none() {
        crate::poly::sort_lex(&mut roots);
    }
    Ok(roots)
}

/// A permutation of branch labels {0..k-1}; `map[i]` is the image of i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(k: usize) -> Self {
        Permutation((0..k).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Nontrivial cycles, each rotated to start at its smallest label.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.0.len()];
        let mut cycles = Vec::new();
        for start in 0..self.0.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut next = self.0[start];
            while next != start {
                seen[next] = true;
                cycle.push(next);
                next = self.0[next];
            }
            if cycle.len() > 1 {
                cycles.push(cycle);
            }
        }
        cycles
    }

    pub fn is_transposition(&self) -> bool {
        let cycles = self.cycles();
        cycles.len() == 1 && cycles[0].len() == 2
    }
}

impl std::fmt::Display for Permutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "id");
        }
        for cycle in cycles {
            write!(f, "(")?;
            for (i, label) in cycle.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", label + 1)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// One accepted continuation point: path parameter, location, and the
/// consistently labeled fiber roots.
#[derive(Debug, Clone)]
pub struct BranchSample {
    pub t: f64,
    pub z: Complex64,
    pub roots: Vec<Complex64>,
}

/// Root functions continued along a path with stable labels.
#[derive(Debug, Clone)]
pub struct BranchTrack {
    pub samples: Vec<BranchSample>,
    pub end_permutation: Permutation,
    pub closed: bool,
}

impl BranchTrack {
    pub fn start_roots(&self) -> &[Complex64] {
        &self.samples.first().unwrap().roots
    }

    pub fn end_roots(&self) -> &[Complex64] {
        &self.samples.last().unwrap().roots
    }
}

fn min_gap(roots: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            gap = gap.min((roots[i] - roots[j]).norm());
        }
    }
    gap
}

/// Greedy nearest-neighbor assignment of new roots to old labels; returns
/// the new roots in old-label order together with the largest movement.
fn match_roots(old: &[Complex64], new: &[Complex64]) -> (Vec<Complex64>, f64) {
    let k = old.len();
    let mut assigned = vec![usize::MAX; k];
    let mut used = vec![false; k];
    for _ in 0..k {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..k {
            if assigned[i] != usize::MAX {
                continue;
            }
            for j in 0..k {
                if used[j] {
                    continue;
                }
                let d = (old[i] - new[j]).norm();
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        assigned[best.0] = best.1;
        used[best.1] = true;
    }
    let matched: Vec<Complex64> = assigned.iter().map(|&j| new[j]).collect();
    let max_move = old
        .iter()
        .zip(&matched)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    (matched, max_move)
}

/// Closed polyline approximating a circle; first vertex repeated at the end.
pub fn circle_path(center: Complex64, radius: f64, vertices: usize) -> Vec<Complex64> {
    let mut path: Vec<Complex64> = (0..vertices)
        .map(|m| {
            let theta = 2.0 * std::f64::consts::PI * m as f64 / vertices as f64;
            center + Complex64::from_polar(radius, theta)
        })
        .collect();
    path.push(path[0]);
    path
}

pub fn segment_path(a: Complex64, b: Complex64) -> Vec<Complex64> {
    vec![a, b]
}

/// Continues all branch labels along the polyline path, adaptively
/// subdividing until every root moves less than half the minimal root gap
/// per step. Path vertices must keep clear of the singular set.
pub fn continue_branches(
    p: &BivariatePolynomial,
    path: &[Complex64],
    start_labels: Option<&[Complex64]>,
) -> Result<BranchTrack, AlgebraicError> {
    let singular = discriminant_nodes(p)?;
    for &z in path {
        if singular.distance(z) <= singular.safety_radius / 2.0 {
            return Err(AlgebraicError::PathHitsSingularSet { z });
        }
    }
    let start = *path.first().ok_or(AlgebraicError::EmptyPath)?;
    let start_roots = match start_labels {
        Some(labels) => {
            if labels.len() != p.degree_y() {
                return Err(AlgebraicError::InvalidStartLabels);
            }
            let scale = p.fiber_scale(start);
            for &y in labels {
                if p.fiber_residual(start, y) >= tol::RESIDUAL_TOL_FACTOR * scale {
                    return Err(AlgebraicError::InvalidStartLabels);
                }
            }
            labels.to_vec()
        }
        None => solve_fiber(p, start)?,
    };
    continue_branches_unchecked(p, path, start_roots)
}

/// Continuation engine without the singular-set vertex precheck. Interior
/// machinery (quadrature, the tree router) supplies its own clearance
/// guarantees and may legitimately pass far inside the safety radius.
pub(crate) fn continue_branches_unchecked(
    p: &BivariatePolynomial,
    path: &[Complex64],
    start_roots: Vec<Complex64>,
) -> Result<BranchTrack, AlgebraicError> {
    if path.is_empty() {
        return Err(AlgebraicError::EmptyPath);
    }
    let k = p.degree_y();
    let total_len: f64 = path.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    let mut samples = vec![BranchSample {
        t: 0.0,
        z: path[0],
        roots: start_roots,
    }];

    let mut acc_len = 0.0;
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let seg_len = (b - a).norm();
        if seg_len == 0.0 {
            continue;
        }
        // pending step targets within the current segment, as fractions
        let mut pending = vec![1.0_f64];
        let mut cur_frac = 0.0_f64;
        while let Some(&target) = pending.last() {
            let cur = samples.last().unwrap();
            // land exactly on the vertex so callers can key samples by it
            let z_target = if target == 1.0 {
                b
            } else {
                a + (b - a) * Complex64::new(target, 0.0)
            };
            let step = (target - cur_frac) * seg_len;
            let can_subdivide = step / 2.0 >= tol::MIN_STEP;
            let roots = match solve_fiber_seeded(p, z_target, Some(&cur.roots)) {
                Ok(r) => r,
                // a stale seed can derail the iteration; a fresh solve is the
                // cheap second chance before subdividing
                Err(_) => match solve_fiber(p, z_target) {
                    Ok(r) => r,
                    Err(e) => {
                        if can_subdivide {
                            pending.push(cur_frac + (target - cur_frac) / 2.0);
                            continue;
                        }
                        return Err(e);
                    }
                },
            };
            let (matched, max_move) = match_roots(&cur.roots, &roots);
            let gap = min_gap(&cur.roots);
            if k == 1 || max_move < gap / 2.0 {
                let t = if total_len > 0.0 {
                    (acc_len + target * seg_len) / total_len
                } else {
                    1.0
                };
                samples.push(BranchSample {
                    t,
                    z: z_target,
                    roots: matched,
                });
                cur_frac = target;
                pending.pop();
            } else {
                if !can_subdivide {
                    return Err(AlgebraicError::StepUnderflow { z: z_target });
                }
                pending.push(cur_frac + (target - cur_frac) / 2.0);
            }
        }
        acc_len += seg_len;
    }

    let first = samples.first().unwrap();
    let last = samples.last().unwrap();
    let closed = (last.z - first.z).norm() <= 1e-9 * (1.0 + first.z.norm());
    let reference = if closed {
        first.roots.clone()
    } else {
        let mut sorted = last.roots.clone();
        crate::poly::sort_lex(&mut sorted);
        sorted
    };
    // label i ended at the position of reference label sigma(i)
    let mut map = vec![usize::MAX; k];
    let mut used = vec![false; k];
    for (i, &y) in last.roots.iter().enumerate() {
        let mut best = (usize::MAX, f64::INFINITY);
        for (j, &r) in reference.iter().enumerate() {
            if !used[j] {
                let d = (y - r).norm();
                if d < best.1 {
                    best = (j, d);
                }
            }
        }
        map[i] = best.0;
        used[best.0] = true;
    }
    Ok(BranchTrack {
        samples,
        end_permutation: Permutation(map),
        closed,
    })
}

/// Monodromy permutation of the branch labels around a closed loop.
pub fn monodromy(
    p: &BivariatePolynomial,
    base: Complex64,
    loop_path: &[Complex64],
) -> Result<Permutation, AlgebraicError> {
    let mut path = loop_path.to_vec();
    if path.is_empty() {
        return Err(AlgebraicError::EmptyPath);
    }
    if (path[0] - base).norm() > 1e-12 * (1.0 + base.norm()) {
        path.insert(0, base);
    }
    if (path.last().unwrap() - path[0]).norm() > 0.0 {
        path.push(path[0]);
    }
    let track = continue_branches(p, &path, None)?;
    Ok(track.end_permutation)
}

/// Max reconstruction defect |p_k(z) prod(y - alpha_nu) - P(z, y)| over
/// probe values of y on the unit circle.
pub fn reconstruction_residual(
    p: &BivariatePolynomial,
    z: Complex64,
    roots: &[Complex64],
    probes: usize,
) -> f64 {
    let lead = p.leading().eval(z);
    let mut worst = 0.0_f64;
    for m in 0..probes {
        let theta = 2.0 * std::f64::consts::PI * (m as f64 + 0.37) / probes as f64;
        let y = Complex64::from_polar(1.0, theta);
        let mut prod = lead;
        for &r in roots {
            prod *= y - r;
        }
        worst = worst.max((prod - p.eval(z, y)).norm());
    }
    worst
}
