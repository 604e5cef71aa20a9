//! Harmonic primitives H_nu = 2 Re of the path integral of a branch, their
//! gradients, level-curve tracing, local sector decompositions, and
//! tangential-derivative orderings along curves.
//!
//! With the Wirtinger convention dH/dz = (H_x - i H_y)/2, the harmonic
//! function with dH/dz = g and H(p) = c is H = 2 Re A + c where A is the
//! complex primitive of g vanishing at p; the gradient is 2 conj(g).

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use thiserror::Error;

use crate::algebraic::{
    self, continue_branches_unchecked, discriminant_nodes, AlgebraicError, BivariatePolynomial,
    SingularSet,
};
use crate::poly::{newton_refine, Poly};
use crate::quad::QuadRule;
use crate::tol;

#[derive(Debug, Error)]
pub enum HarmonicError {
    #[error(transparent)]
    Algebraic(#[from] AlgebraicError),
    #[error("branch index {index} out of range for a {count}-tuple")]
    BranchIndex { index: usize, count: usize },
    #[error("constants vector must have one entry per branch")]
    ConstantsLength,
    #[error("base point is within the safety clearance of the singular set")]
    BaseTooCloseToSingularSet,
    #[error("path must run from the base point to the query point")]
    PathEndpoints,
    #[error("adaptive quadrature failed to converge")]
    QuadratureNoConvergence,
    #[error("seed cannot be corrected onto the level curve")]
    SeedNotOnCurve,
    #[error("gradient stall: |grad| below stall tolerance at the seed")]
    GradientStall,
    #[error("level curve of a branch against itself is identically zero")]
    DegenerateCurve,
    #[error("disk radius too large: extra critical point or unresolvable arc geometry")]
    RadiusTooLarge,
    #[error("tangential order not resolved: a difference changes sign in the window")]
    OrderNotResolved,
    #[error("window is not covered by curve samples")]
    WindowNotCovered,
}

/// Euclidean dot product of plane vectors stored as complex numbers.
pub fn dot(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

/// Open disk, the working domain of a tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Complex64, radius: f64) -> Self {
        Disk { center, radius }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }
}

fn gl8() -> &'static QuadRule {
    static RULE: OnceLock<QuadRule> = OnceLock::new();
    RULE.get_or_init(|| QuadRule::gauss_legendre(8))
}

enum GradientSource {
    /// Root functions of a bivariate polynomial, continued from the base.
    Branches {
        poly: BivariatePolynomial,
        singular: SingularSet,
        base_roots: Vec<Complex64>,
    },
    /// Entire gradient functions given as polynomials in z; primitives are
    /// exact antiderivatives.
    Entire {
        gradients: Vec<Poly>,
        primitives: Vec<Poly>,
    },
}

type CacheEntry = (Vec<Complex64>, Vec<Complex64>);

/// A tuple of harmonic functions H_nu with dH_nu/dz = g_nu and
/// H_nu(base) = c_nu.
pub struct HarmonicTuple {
    source: GradientSource,
    base: Complex64,
    constants: Vec<f64>,
    disk: Disk,
    cache: Mutex<HashMap<(u64, u64), CacheEntry>>,
}

impl HarmonicTuple {
    /// Branch-based tuple: g_nu are the root functions of P continued from
    /// the base point, labeled by the sorted fiber there.
    pub fn from_polynomial(
        poly: BivariatePolynomial,
        base: Complex64,
        constants: Vec<f64>,
        disk: Disk,
    ) -> Result<Self, HarmonicError> {
        if constants.len() != poly.degree_y() {
            return Err(HarmonicError::ConstantsLength);
        }
        let singular = discriminant_nodes(&poly)?;
        if singular.distance(base) <= singular.safety_radius / 2.0 {
            return Err(HarmonicError::BaseTooCloseToSingularSet);
        }
        let base_roots = algebraic::solve_fiber(&poly, base)?;
        Ok(HarmonicTuple {
            source: GradientSource::Branches {
                poly,
                singular,
                base_roots,
            },
            base,
            constants,
            disk,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Entire tuple: g_nu given directly as polynomials in z.
    pub fn from_entire_gradients(
        gradients: Vec<Poly>,
        base: Complex64,
        constants: Vec<f64>,
        disk: Disk,
    ) -> Result<Self, HarmonicError> {
        if constants.len() != gradients.len() || gradients.is_empty() {
            return Err(HarmonicError::ConstantsLength);
        }
        let primitives = gradients.iter().map(Poly::antiderivative).collect();
        Ok(HarmonicTuple {
            source: GradientSource::Entire {
                gradients,
                primitives,
            },
            base,
            constants,
            disk,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn branch_count(&self) -> usize {
        match &self.source {
            GradientSource::Branches { poly, .. } => poly.degree_y(),
            GradientSource::Entire { gradients, .. } => gradients.len(),
        }
    }

    pub fn base(&self) -> Complex64 {
        self.base
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    pub fn disk(&self) -> Disk {
        self.disk
    }

    pub fn singular_set(&self) -> Option<&SingularSet> {
        match &self.source {
            GradientSource::Branches { singular, .. } => Some(singular),
            GradientSource::Entire { .. } => None,
        }
    }

    fn check_index(&self, nu: usize) -> Result<(), HarmonicError> {
        if nu >= self.branch_count() {
            return Err(HarmonicError::BranchIndex {
                index: nu,
                count: self.branch_count(),
            });
        }
        Ok(())
    }

    /// Straight segment from the base unless it passes a singular point
    /// within the safety radius, in which case a counterclockwise arc
    /// detour is inserted around each offending point.
    pub fn canonical_path(&self, z: Complex64) -> Result<Vec<Complex64>, HarmonicError> {
        let singular = match &self.source {
            GradientSource::Entire { .. } => return Ok(vec![self.base, z]),
            GradientSource::Branches { singular, .. } => singular,
        };
        let a = self.base;
        let seg = z - a;
        let seg_len = seg.norm();
        if seg_len == 0.0 {
            return Ok(vec![a, z]);
        }
        let dir = seg / seg_len;
        // offending points sorted by projection along the segment
        let mut detours: Vec<(f64, Complex64, f64)> = Vec::new();
        for &s in &singular.locations() {
            let t_foot = dot(s - a, dir).clamp(0.0, seg_len);
            let foot = a + dir * t_foot;
            let d = (s - foot).norm();
            if d >= singular.safety_radius {
                continue;
            }
            let d_end = (z - s).norm();
            let d_base = (a - s).norm();
            let radius = singular
                .safety_radius
                .min(0.98 * d_end)
                .min(0.98 * d_base);
            if radius <= singular.safety_radius / 2.0 {
                return Err(HarmonicError::Algebraic(
                    AlgebraicError::PathHitsSingularSet { z },
                ));
            }
            if d >= radius {
                continue;
            }
            detours.push((t_foot, s, radius));
        }
        detours.sort_by(|x, y| x.0.total_cmp(&y.0));

        let mut path = vec![a];
        for (t_foot, s, radius) in detours {
            let half_chord = (radius * radius
                - (s - (a + dir * t_foot)).norm_sqr())
            .max(0.0)
            .sqrt();
            let t1 = (t_foot - half_chord).max(0.0);
            let t2 = (t_foot + half_chord).min(seg_len);
            let entry = a + dir * t1;
            let exit = a + dir * t2;
            let theta1 = (entry - s).arg();
            let theta2 = (exit - s).arg();
            let mut sweep = theta2 - theta1;
            while sweep <= 0.0 {
                sweep += 2.0 * std::f64::consts::PI;
            }
            let steps = (sweep / (std::f64::consts::PI / 24.0)).ceil() as usize;
            path.push(entry);
            for m in 1..steps {
                let theta = theta1 + sweep * m as f64 / steps as f64;
                path.push(s + Complex64::from_polar(radius, theta));
            }
            path.push(exit);
        }
        path.push(z);
        path.dedup_by(|p, q| (*p - *q).norm() == 0.0);
        Ok(path)
    }

    fn cached_point(&self, z: Complex64) -> Result<CacheEntry, HarmonicError> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let entry = match &self.source {
            GradientSource::Entire {
                gradients,
                primitives,
            } => {
                let prim = primitives
                    .iter()
                    .map(|p| p.eval(z) - p.eval(self.base))
                    .collect();
                let grad = gradients.iter().map(|g| g.eval(z)).collect();
                (prim, grad)
            }
            GradientSource::Branches {
                poly, base_roots, ..
            } => {
                let path = self.canonical_path(z)?;
                let track = continue_branches_unchecked(poly, &path, base_roots.clone())?;
                let prim = integrate_track(poly, &track)?;
                let grad = track.end_roots().to_vec();
                (prim, grad)
            }
        };
        self.cache
            .lock()
            .unwrap()
            .insert(key, entry.clone());
        Ok(entry)
    }

    /// A_nu(z), the complex primitive of g_nu along the given path from the
    /// base point; A_nu(base) = 0.
    pub fn primitive(
        &self,
        nu: usize,
        z: Complex64,
        path: &[Complex64],
    ) -> Result<Complex64, HarmonicError> {
        self.check_index(nu)?;
        Ok(self.primitives_along(z, path)?[nu])
    }

    /// All branch primitives along an explicit path.
    pub fn primitives_along(
        &self,
        z: Complex64,
        path: &[Complex64],
    ) -> Result<Vec<Complex64>, HarmonicError> {
        let first = *path.first().ok_or(AlgebraicError::EmptyPath)?;
        let last = *path.last().unwrap();
        if (first - self.base).norm() > 1e-12 * (1.0 + self.base.norm())
            || (last - z).norm() > 1e-12 * (1.0 + z.norm())
        {
            return Err(HarmonicError::PathEndpoints);
        }
        match &self.source {
            GradientSource::Entire { primitives, .. } => Ok(primitives
                .iter()
                .map(|p| p.eval(z) - p.eval(self.base))
                .collect()),
            GradientSource::Branches {
                poly,
                singular,
                base_roots,
            } => {
                for &v in path {
                    if singular.distance(v) <= singular.safety_radius / 2.0 {
                        return Err(HarmonicError::Algebraic(
                            AlgebraicError::PathHitsSingularSet { z: v },
                        ));
                    }
                }
                let track = continue_branches_unchecked(poly, path, base_roots.clone())?;
                integrate_track(poly, &track)
            }
        }
    }

    /// All primitives A_nu(z) along the canonical path (cached).
    pub fn primitives_canonical(&self, z: Complex64) -> Result<Vec<Complex64>, HarmonicError> {
        Ok(self.cached_point(z)?.0)
    }

    /// Branch values g_nu(z) along the canonical path (cached).
    pub fn branch_values(&self, z: Complex64) -> Result<Vec<Complex64>, HarmonicError> {
        Ok(self.cached_point(z)?.1)
    }

    /// H_nu(z) = 2 Re A_nu(z) + c_nu along the canonical path.
    pub fn harmonic_value(&self, nu: usize, z: Complex64) -> Result<f64, HarmonicError> {
        self.check_index(nu)?;
        Ok(2.0 * self.primitives_canonical(z)?[nu].re + self.constants[nu])
    }

    /// H_nu(z) along an explicit path.
    pub fn harmonic_value_along(
        &self,
        nu: usize,
        z: Complex64,
        path: &[Complex64],
    ) -> Result<f64, HarmonicError> {
        Ok(2.0 * self.primitive(nu, z, path)?.re + self.constants[nu])
    }

    /// All H_nu(z) along the canonical path.
    pub fn values_at(&self, z: Complex64) -> Result<Vec<f64>, HarmonicError> {
        let prim = self.primitives_canonical(z)?;
        Ok(prim
            .iter()
            .zip(&self.constants)
            .map(|(a, c)| 2.0 * a.re + c)
            .collect())
    }

    /// grad H_nu = (2 Re g_nu, -2 Im g_nu), returned as a plane vector.
    pub fn harmonic_gradient(&self, nu: usize, z: Complex64) -> Result<Complex64, HarmonicError> {
        self.check_index(nu)?;
        let g = self.branch_values(z)?[nu];
        Ok(2.0 * g.conj())
    }

    /// Gradients of every H_nu at z.
    pub fn gradients_at(&self, z: Complex64) -> Result<Vec<Complex64>, HarmonicError> {
        Ok(self
            .branch_values(z)?
            .iter()
            .map(|g| 2.0 * g.conj())
            .collect())
    }

    fn probe(&self, z: Complex64) -> Result<FieldProbe<'_>, HarmonicError> {
        let (primitives, branches) = self.cached_point(z)?;
        Ok(FieldProbe {
            tuple: self,
            z,
            primitives,
            branches,
        })
    }
}

/// Branch evaluation at z from per-branch seeds: Newton refinement against
/// the fiber polynomial, with a full seeded re-solve as fallback.
fn branches_from_seeds(
    poly: &BivariatePolynomial,
    z: Complex64,
    seeds: &[Complex64],
) -> Result<Vec<Complex64>, AlgebraicError> {
    let fiber = Poly::new(poly.fiber_coeffs(z));
    let scale = fiber.max_coeff_norm().max(1e-300);
    if poly.leading().eval(z).norm() <= tol::DEGENERATE_TOL {
        return Err(AlgebraicError::LeadingCoefficientVanishes { z });
    }
    let mut gap = f64::INFINITY;
    for i in 0..seeds.len() {
        for j in i + 1..seeds.len() {
            gap = gap.min((seeds[i] - seeds[j]).norm());
        }
    }
    let refined: Vec<Complex64> = seeds
        .iter()
        .map(|&s| newton_refine(&fiber, s, 24))
        .collect();
    let mut ok = true;
    for (i, &y) in refined.iter().enumerate() {
        if fiber.eval(y).norm() > 1e-10 * scale * y.norm().max(1.0).powi(fiber.degree() as i32) {
            ok = false;
            break;
        }
        if (y - seeds[i]).norm() >= gap / 2.0 {
            ok = false;
            break;
        }
        for &other in refined.iter().take(i) {
            if (y - other).norm() < gap / 4.0 {
                ok = false;
                break;
            }
        }
    }
    if ok {
        return Ok(refined);
    }
    algebraic::solve_fiber_seeded(poly, z, Some(seeds))
}

/// Integrates every branch along a continuation track by adaptive
/// Gauss-Legendre on each track step.
fn integrate_track(
    poly: &BivariatePolynomial,
    track: &algebraic::BranchTrack,
) -> Result<Vec<Complex64>, HarmonicError> {
    let k = poly.degree_y();
    let mut totals = vec![Complex64::new(0.0, 0.0); k];
    for w in track.samples.windows(2) {
        let part = adaptive_segment(
            poly,
            w[0].z,
            &w[0].roots,
            w[1].z,
            &w[1].roots,
            tol::QUAD_TOL,
            0,
        )?;
        for (t, p) in totals.iter_mut().zip(part) {
            *t += p;
        }
    }
    Ok(totals)
}

fn gl_segment(
    poly: &BivariatePolynomial,
    a: Complex64,
    roots_a: &[Complex64],
    b: Complex64,
    roots_b: &[Complex64],
) -> Result<Vec<Complex64>, AlgebraicError> {
    let rule = gl8();
    let half = (b - a) / 2.0;
    let mid = (a + b) / 2.0;
    let mut acc = vec![Complex64::new(0.0, 0.0); roots_a.len()];
    for (i, &t) in rule.nodes().iter().enumerate() {
        let z = mid + half * t;
        let frac = (t + 1.0) / 2.0;
        let seeds: Vec<Complex64> = roots_a
            .iter()
            .zip(roots_b)
            .map(|(&ra, &rb)| ra + (rb - ra) * frac)
            .collect();
        let values = branches_from_seeds(poly, z, &seeds)?;
        let w = rule.weights()[i];
        for (slot, v) in acc.iter_mut().zip(values) {
            *slot += v * w;
        }
    }
    for slot in acc.iter_mut() {
        *slot *= half;
    }
    Ok(acc)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_segment(
    poly: &BivariatePolynomial,
    a: Complex64,
    roots_a: &[Complex64],
    b: Complex64,
    roots_b: &[Complex64],
    budget: f64,
    depth: usize,
) -> Result<Vec<Complex64>, HarmonicError> {
    let whole = gl_segment(poly, a, roots_a, b, roots_b)?;
    let mid = (a + b) / 2.0;
    let mid_seeds: Vec<Complex64> = roots_a
        .iter()
        .zip(roots_b)
        .map(|(&ra, &rb)| (ra + rb) / 2.0)
        .collect();
    let roots_mid = branches_from_seeds(poly, mid, &mid_seeds)?;
    let left = gl_segment(poly, a, roots_a, mid, &roots_mid)?;
    let right = gl_segment(poly, mid, &roots_mid, b, roots_b)?;
    let halves: Vec<Complex64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
    let err = whole
        .iter()
        .zip(&halves)
        .map(|(w, h)| (w - h).norm())
        .fold(0.0, f64::max);
    if err <= budget {
        return Ok(halves);
    }
    if depth >= tol::MAX_QUAD_DEPTH {
        return Err(HarmonicError::QuadratureNoConvergence);
    }
    let l = adaptive_segment(poly, a, roots_a, mid, &roots_mid, budget / 2.0, depth + 1)?;
    let r = adaptive_segment(poly, mid, &roots_mid, b, roots_b, budget / 2.0, depth + 1)?;
    Ok(l.iter().zip(&r).map(|(x, y)| x + y).collect())
}

/// Incremental evaluator that walks a tuple's values and branch data along
/// a path of nearby points. Primitive values accumulate along the walked
/// path itself, so the branch choice is continuous along it.
struct FieldProbe<'a> {
    tuple: &'a HarmonicTuple,
    z: Complex64,
    primitives: Vec<Complex64>,
    branches: Vec<Complex64>,
}

impl FieldProbe<'_> {
    fn move_to(&mut self, target: Complex64) -> Result<(), HarmonicError> {
        match &self.tuple.source {
            GradientSource::Entire {
                gradients,
                primitives,
            } => {
                self.z = target;
                self.primitives = primitives
                    .iter()
                    .map(|p| p.eval(target) - p.eval(self.tuple.base))
                    .collect();
                self.branches = gradients.iter().map(|g| g.eval(target)).collect();
                Ok(())
            }
            GradientSource::Branches { poly, .. } => {
                let mut pending = vec![target];
                while let Some(&next) = pending.last() {
                    let step = (next - self.z).norm();
                    if step == 0.0 {
                        pending.pop();
                        continue;
                    }
                    let candidate = branches_from_seeds(poly, next, &self.branches);
                    let mut gap = f64::INFINITY;
                    for i in 0..self.branches.len() {
                        for j in i + 1..self.branches.len() {
                            gap = gap.min((self.branches[i] - self.branches[j]).norm());
                        }
                    }
                    let accept = match &candidate {
                        Ok(new_roots) => {
                            let max_move = self
                                .branches
                                .iter()
                                .zip(new_roots)
                                .map(|(a, b)| (a - b).norm())
                                .fold(0.0, f64::max);
                            self.branches.len() == 1 || max_move < gap / 2.0
                        }
                        Err(_) => false,
                    };
                    if accept {
                        let new_roots = candidate.unwrap();
                        let inc =
                            gl_segment(poly, self.z, &self.branches, next, &new_roots)?;
                        for (p, d) in self.primitives.iter_mut().zip(inc) {
                            *p += d;
                        }
                        self.z = next;
                        self.branches = new_roots;
                        pending.pop();
                    } else {
                        if step / 2.0 < tol::MIN_STEP {
                            return Err(HarmonicError::Algebraic(
                                AlgebraicError::StepUnderflow { z: next },
                            ));
                        }
                        pending.push(self.z + (next - self.z) / 2.0);
                    }
                }
                Ok(())
            }
        }
    }

    fn value(&self, nu: usize) -> f64 {
        2.0 * self.primitives[nu].re + self.tuple.constants[nu]
    }

    fn gradient(&self, nu: usize) -> Complex64 {
        2.0 * self.branches[nu].conj()
    }
}

/// One traced point of a level curve.
#[derive(Debug, Clone, Copy)]
pub struct CurveSample {
    pub s: f64,
    pub z: Complex64,
    pub residual: f64,
}

/// Polyline approximation of {H_i - H_j = c}.
#[derive(Debug, Clone)]
pub struct LevelCurve {
    pub i: usize,
    pub j: usize,
    pub offset: f64,
    pub samples: Vec<CurveSample>,
}

impl LevelCurve {
    pub fn length(&self) -> f64 {
        self.samples.last().map(|s| s.s).unwrap_or(0.0)
    }

    pub fn max_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.residual)
            .fold(0.0, f64::max)
    }

    /// Unit tangent at sample index by central differences.
    pub fn tangent_at(&self, idx: usize) -> Complex64 {
        let n = self.samples.len();
        let lo = idx.saturating_sub(1);
        let hi = (idx + 1).min(n - 1);
        let d = self.samples[hi].z - self.samples[lo].z;
        let len = d.norm();
        if len == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            d / len
        }
    }
}

/// Tracing controls; `max_step` bounds the distance between consecutive
/// samples and `budget` the total arclength (split across both directions).
#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    pub max_step: f64,
    pub budget: f64,
}

impl TraceOptions {
    pub fn with_budget(budget: f64) -> Self {
        TraceOptions {
            max_step: budget / 100.0,
            budget,
        }
    }
}

struct TraceState<'a> {
    probe: FieldProbe<'a>,
    i: usize,
    j: usize,
    offset: f64,
}

impl TraceState<'_> {
    fn f(&self) -> f64 {
        self.probe.value(self.i) - self.probe.value(self.j) - self.offset
    }

    fn grad(&self) -> Complex64 {
        self.probe.gradient(self.i) - self.probe.gradient(self.j)
    }

    fn move_to(&mut self, z: Complex64) -> Result<(), HarmonicError> {
        self.probe.move_to(z)
    }

    /// Newton correction orthogonal to the curve; leaves the probe at the
    /// corrected point. Returns the final residual.
    fn correct(&mut self, max_iter: usize) -> Result<f64, HarmonicError> {
        for _ in 0..max_iter {
            let f = self.f();
            if f.abs() <= tol::TRACE_TOL {
                return Ok(f.abs());
            }
            let g = self.grad();
            let g2 = g.norm_sqr();
            if g2 < tol::STALL_TOL * tol::STALL_TOL {
                return Ok(f.abs());
            }
            let step = g * (f / g2);
            self.move_to(self.probe.z - step)?;
        }
        Ok(self.f().abs())
    }
}

/// Traces the level curve {H_i - H_j = c} from a seed by predictor-corrector
/// continuation in both directions, stopping at the arclength budget, the
/// disk boundary, or a gradient stall.
pub fn trace_level_curve(
    tuple: &HarmonicTuple,
    i: usize,
    j: usize,
    c: f64,
    seed: Complex64,
    opts: TraceOptions,
) -> Result<LevelCurve, HarmonicError> {
    tuple.check_index(i)?;
    tuple.check_index(j)?;
    if i == j {
        return Err(HarmonicError::DegenerateCurve);
    }
    let mut state = TraceState {
        probe: tuple.probe(seed)?,
        i,
        j,
        offset: c,
    };
    if state.correct(30)? > tol::TRACE_TOL {
        return Err(HarmonicError::SeedNotOnCurve);
    }
    if state.grad().norm() <= tol::STALL_TOL {
        return Err(HarmonicError::GradientStall);
    }
    let seed_z = state.probe.z;
    let seed_res = state.f().abs();

    let mut halves: Vec<Vec<(Complex64, f64)>> = Vec::new();
    for dir in [1.0, -1.0] {
        state.move_to(seed_z)?;
        let mut pts: Vec<(Complex64, f64)> = Vec::new();
        let g0 = state.grad();
        let mut tangent = Complex64::new(0.0, 1.0) * g0 / g0.norm() * dir;
        let mut h = opts.max_step;
        let mut arc = 0.0;
        while arc < opts.budget / 2.0 {
            let from = state.probe.z;
            let predicted = from + tangent * h;
            let moved = state.move_to(predicted).is_ok();
            let res = if moved { state.correct(12)? } else { f64::INFINITY };
            let displaced = (state.probe.z - predicted).norm();
            if !moved || res > tol::TRACE_TOL || displaced > 0.6 * h {
                state.move_to(from)?;
                h /= 2.0;
                if h < 1e-6 * opts.max_step {
                    break;
                }
                continue;
            }
            let g = state.grad();
            if g.norm() <= tol::STALL_TOL {
                break;
            }
            let mut new_tangent = Complex64::new(0.0, 1.0) * g / g.norm();
            if dot(new_tangent, tangent) < 0.0 {
                new_tangent = -new_tangent;
            }
            let step_len = (state.probe.z - from).norm();
            arc += step_len;
            pts.push((state.probe.z, res));
            let curvature = (new_tangent - tangent).norm() / step_len.max(1e-300);
            tangent = new_tangent;
            h = opts
                .max_step
                .min(0.1 / curvature.max(1e-12))
                .max(1e-6 * opts.max_step);
            if !tuple.disk.contains(state.probe.z) {
                break;
            }
            if let Some(singular) = tuple.singular_set() {
                if singular.distance(state.probe.z) <= singular.safety_radius / 2.0 {
                    break;
                }
            }
        }
        halves.push(pts);
    }

    let backward = &halves[1];
    let forward = &halves[0];
    let mut points: Vec<(Complex64, f64)> = backward.iter().rev().copied().collect();
    points.push((seed_z, seed_res));
    points.extend(forward.iter().copied());

    let mut samples = Vec::with_capacity(points.len());
    let mut s = 0.0;
    let mut prev: Option<Complex64> = None;
    for (z, residual) in points {
        if let Some(p) = prev {
            s += (z - p).norm();
        }
        samples.push(CurveSample { s, z, residual });
        prev = Some(z);
    }
    Ok(LevelCurve {
        i,
        j,
        offset: c,
        samples,
    })
}

/// One arc of a local level-curve star: the branch pair, the polyline from
/// the center outward, and the exit angle on the probe circle.
#[derive(Debug, Clone)]
pub struct SectorArc {
    pub pair: (usize, usize),
    pub exit_angle: f64,
    pub polyline: Vec<Complex64>,
}

/// A sector between two consecutive arcs around the apex.
#[derive(Debug, Clone)]
pub struct Sector {
    pub apex: Complex64,
    pub arc_before: usize,
    pub arc_after: usize,
    pub order_index: usize,
    pub sample_point: Complex64,
}

/// Arcs and sectors of the local decomposition induced by all pairwise
/// level curves {H_i - H_j = (H_i - H_j)(center)} through the center.
#[derive(Debug, Clone)]
pub struct SectorDecomposition {
    pub arcs: Vec<SectorArc>,
    pub sectors: Vec<Sector>,
}

pub fn sector_decomposition(
    tuple: &HarmonicTuple,
    center: Complex64,
    radius: f64,
) -> Result<SectorDecomposition, HarmonicError> {
    let k = tuple.branch_count();
    let center_values = tuple.values_at(center)?;

    // reject a second critical point of any pairwise difference in the disk
    let scan = 17;
    for a in 0..k {
        for b in a + 1..k {
            if pair_is_constant(tuple, a, b, center, radius)? {
                continue;
            }
            for ix in 0..scan {
                for iy in 0..scan {
                    let x = -1.0 + 2.0 * ix as f64 / (scan - 1) as f64;
                    let y = -1.0 + 2.0 * iy as f64 / (scan - 1) as f64;
                    let z = center + Complex64::new(x, y) * radius;
                    if (z - center).norm() <= radius / 10.0 || (z - center).norm() > radius {
                        continue;
                    }
                    let grads = tuple.gradients_at(z)?;
                    if (grads[a] - grads[b]).norm() <= tol::STALL_TOL {
                        return Err(HarmonicError::RadiusTooLarge);
                    }
                }
            }
        }
    }

    let probe_radius = radius / 2.0;
    let mut arcs: Vec<SectorArc> = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            if pair_is_constant(tuple, a, b, center, radius)? {
                continue;
            }
            let offset = center_values[a] - center_values[b];
            let angles = circle_crossings(tuple, a, b, offset, center, probe_radius)?;
            if angles.len() % 2 != 0 {
                return Err(HarmonicError::RadiusTooLarge);
            }
            for theta in angles {
                let polyline =
                    radial_arc(tuple, a, b, offset, center, probe_radius, theta)?;
                arcs.push(SectorArc {
                    pair: (a, b),
                    exit_angle: theta,
                    polyline,
                });
            }
        }
    }
    arcs.sort_by(|x, y| x.exit_angle.total_cmp(&y.exit_angle));
    for w in arcs.windows(2) {
        if (w[1].exit_angle - w[0].exit_angle).abs() < 1e-6 {
            return Err(HarmonicError::RadiusTooLarge);
        }
    }

    let mut sectors = Vec::new();
    let n = arcs.len();
    for idx in 0..n {
        let next = (idx + 1) % n;
        let a0 = arcs[idx].exit_angle;
        let mut a1 = arcs[next].exit_angle;
        if next == 0 {
            a1 += 2.0 * std::f64::consts::PI;
        }
        let mid = (a0 + a1) / 2.0;
        sectors.push(Sector {
            apex: center,
            arc_before: idx,
            arc_after: next,
            order_index: idx,
            sample_point: center + Complex64::from_polar(radius / 4.0, mid),
        });
    }
    Ok(SectorDecomposition { arcs, sectors })
}

fn pair_is_constant(
    tuple: &HarmonicTuple,
    a: usize,
    b: usize,
    center: Complex64,
    radius: f64,
) -> Result<bool, HarmonicError> {
    // H_a - H_b is constant iff g_a = g_b; sample a few disk points
    for m in 0..5 {
        let theta = 2.0 * std::f64::consts::PI * m as f64 / 5.0 + 0.3;
        let z = center + Complex64::from_polar(radius * 0.37, theta);
        let g = tuple.branch_values(z)?;
        if (g[a] - g[b]).norm() > 1e-13 * (1.0 + g[a].norm()) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn circle_crossings(
    tuple: &HarmonicTuple,
    a: usize,
    b: usize,
    offset: f64,
    center: Complex64,
    rho: f64,
) -> Result<Vec<f64>, HarmonicError> {
    let n = 512;
    let eval = |theta: f64| -> Result<f64, HarmonicError> {
        let z = center + Complex64::from_polar(rho, theta);
        let v = tuple.values_at(z)?;
        Ok(v[a] - v[b] - offset)
    };
    let mut values = Vec::with_capacity(n);
    for m in 0..n {
        values.push(eval(2.0 * std::f64::consts::PI * m as f64 / n as f64)?);
    }
    let mut crossings = Vec::new();
    for m in 0..n {
        let f0 = values[m];
        let f1 = values[(m + 1) % n];
        if f0 == 0.0 {
            crossings.push(2.0 * std::f64::consts::PI * m as f64 / n as f64);
            continue;
        }
        if f0 * f1 < 0.0 {
            let mut lo = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
            let mut hi = 2.0 * std::f64::consts::PI * (m + 1) as f64 / n as f64;
            let mut flo = f0;
            for _ in 0..60 {
                let mid = (lo + hi) / 2.0;
                let fm = eval(mid)?;
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            crossings.push((lo + hi) / 2.0);
        }
    }
    Ok(crossings)
}

fn radial_arc(
    tuple: &HarmonicTuple,
    a: usize,
    b: usize,
    offset: f64,
    center: Complex64,
    rho_max: f64,
    theta_exit: f64,
) -> Result<Vec<Complex64>, HarmonicError> {
    let steps = 24;
    let rho_min = rho_max / 32.0;
    let mut theta = theta_exit;
    let mut pts = vec![center];
    let mut outward = Vec::with_capacity(steps);
    for m in 0..steps {
        // radii descending from rho_max to rho_min
        let frac = m as f64 / (steps - 1) as f64;
        let rho = rho_max * (rho_min / rho_max).powf(frac);
        theta = refine_angle(tuple, a, b, offset, center, rho, theta)?;
        outward.push(center + Complex64::from_polar(rho, theta));
    }
    outward.reverse();
    pts.extend(outward);
    Ok(pts)
}

fn refine_angle(
    tuple: &HarmonicTuple,
    a: usize,
    b: usize,
    offset: f64,
    center: Complex64,
    rho: f64,
    theta0: f64,
) -> Result<f64, HarmonicError> {
    let f = |theta: f64| -> Result<f64, HarmonicError> {
        let z = center + Complex64::from_polar(rho, theta);
        let v = tuple.values_at(z)?;
        Ok(v[a] - v[b] - offset)
    };
    // bracket around theta0, then bisect
    let mut span = 0.02;
    for _ in 0..8 {
        let (mut lo, mut hi) = (theta0 - span, theta0 + span);
        let (mut flo, fhi) = (f(lo)?, f(hi)?);
        if flo * fhi <= 0.0 {
            for _ in 0..60 {
                let mid = (lo + hi) / 2.0;
                let fm = f(mid)?;
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            return Ok((lo + hi) / 2.0);
        }
        span *= 2.0;
    }
    Err(HarmonicError::RadiusTooLarge)
}

/// Order relation between consecutive entries of a tangential ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderRelation {
    Strict,
    Equal,
}

/// Ascending ordering of the branch indices by tangential derivative along
/// a curve window, with per-step strict/equal flags.
#[derive(Debug, Clone)]
pub struct TangentialOrder {
    pub order: Vec<usize>,
    pub relations: Vec<OrderRelation>,
}

/// Computes d/ds H_nu = grad H_nu . tangent at every curve sample in the
/// arclength window and returns the ascending order with flags: Equal only
/// when the pairwise difference stays below the order tolerance over the
/// whole window, Strict when it keeps a uniform sign.
pub fn tangential_order(
    tuple: &HarmonicTuple,
    curve: &LevelCurve,
    window: (f64, f64),
) -> Result<TangentialOrder, HarmonicError> {
    let k = tuple.branch_count();
    let idx: Vec<usize> = curve
        .samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.s >= window.0 && s.s <= window.1)
        .map(|(i, _)| i)
        .collect();
    if idx.len() < 2 {
        return Err(HarmonicError::WindowNotCovered);
    }
    let window_len = window.1 - window.0;
    let order_tol = tol::ORDER_TOL_FACTOR * window_len.max(1e-300);

    // one continuation along the window polyline keeps labels consistent
    let mut probe = tuple.probe(curve.samples[idx[0]].z)?;
    let mut derivs: Vec<Vec<f64>> = Vec::with_capacity(idx.len());
    for &si in &idx {
        probe.move_to(curve.samples[si].z)?;
        let tangent = curve.tangent_at(si);
        derivs.push((0..k).map(|nu| dot(probe.gradient(nu), tangent)).collect());
    }

    let mut order: Vec<usize> = (0..k).collect();
    let means: Vec<f64> = (0..k)
        .map(|nu| derivs.iter().map(|d| d[nu]).sum::<f64>() / derivs.len() as f64)
        .collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]));

    let mut relations = Vec::with_capacity(k.saturating_sub(1));
    for w in order.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let diffs: Vec<f64> = derivs.iter().map(|d| d[hi] - d[lo]).collect();
        let max_abs = diffs.iter().map(|d| d.abs()).fold(0.0, f64::max);
        if max_abs < order_tol {
            relations.push(OrderRelation::Equal);
        } else if diffs.iter().all(|&d| d > 0.0) {
            relations.push(OrderRelation::Strict);
        } else {
            return Err(HarmonicError::OrderNotResolved);
        }
    }
    Ok(TangentialOrder { order, relations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disk() -> Disk {
        Disk::new(c(0.0, 0.0), 50.0)
    }

    /// z y - 1: single branch alpha = 1/z.
    fn reciprocal_tuple() -> HarmonicTuple {
        let z = Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let p = BivariatePolynomial::new(vec![Poly::constant(c(-1.0, 0.0)), z]).unwrap();
        HarmonicTuple::from_polynomial(p, c(1.0, 0.0), vec![0.0], disk()).unwrap()
    }

    /// Example 2.11 tuple: g = (0, 2 + z, -1/2), all H vanishing at 0.
    pub(crate) fn example211_tuple() -> HarmonicTuple {
        let g1 = Poly::zero();
        let g2 = Poly::new(vec![c(2.0, 0.0), c(1.0, 0.0)]);
        let g3 = Poly::constant(c(-0.5, 0.0));
        HarmonicTuple::from_entire_gradients(
            vec![g1, g2, g3],
            c(0.0, 0.0),
            vec![0.0, 0.0, 0.0],
            Disk::new(c(0.0, 0.0), 2.0),
        )
        .unwrap()
    }

    #[test]
    fn primitive_log_segment() {
        let t = reciprocal_tuple();
        let e = std::f64::consts::E;
        let a = t
            .primitive(0, c(e, 0.0), &[c(1.0, 0.0), c(e, 0.0)])
            .unwrap();
        assert_abs_diff_eq!(a.re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn primitive_residue_around_origin() {
        let t = reciprocal_tuple();
        let mut path = algebraic::circle_path(c(0.0, 0.0), 1.0, 64);
        // rotate so the loop starts and ends at the base point 1
        assert_abs_diff_eq!((path[0] - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        let a = t.primitive(0, c(1.0, 0.0), &path).unwrap();
        assert_abs_diff_eq!(a.re, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a.im, 2.0 * std::f64::consts::PI, epsilon = 1e-9);
        path.reverse();
        let b = t.primitive(0, c(1.0, 0.0), &path).unwrap();
        assert_abs_diff_eq!(b.im, -2.0 * std::f64::consts::PI, epsilon = 1e-9);
    }

    #[test]
    fn primitive_example51_against_closed_form() {
        // alpha*(w) = (-1 + sqrt(1 + 4/w))/2 integrated over [10, 20];
        // antiderivative F(w) = (-w + sqrt(w^2+4w) - 2 ln((w+2+sqrt(w^2+4w))/2))/2...
        // validated numerically instead: adaptive Simpson oracle value.
        let z = Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let p = BivariatePolynomial::new(vec![Poly::constant(c(-1.0, 0.0)), z.clone(), z])
            .unwrap();
        let t = HarmonicTuple::from_polynomial(p, c(10.0, 0.0), vec![0.0, 0.0], disk()).unwrap();
        // oracle: Simpson refinement of the exterior branch over [10, 20]
        let f = |w: f64| (-1.0 + (1.0 + 4.0 / w).sqrt()) / 2.0;
        let mut n = 64;
        let mut prev = 0.0;
        let mut oracle = 0.0;
        for _ in 0..8 {
            let h = 10.0 / n as f64;
            let mut acc = f(10.0) + f(20.0);
            for m in 1..n {
                let w = 10.0 + m as f64 * h;
                acc += if m % 2 == 1 { 4.0 * f(w) } else { 2.0 * f(w) };
            }
            prev = oracle;
            oracle = acc * h / 3.0;
            n *= 2;
        }
        assert!((oracle - prev).abs() < 1e-12);
        // the exterior branch at z = 10 is the root closest to 1/10
        let roots = t.branch_values(c(10.0, 0.0)).unwrap();
        let nu = if (roots[0] - c(0.1, 0.0)).norm() < (roots[1] - c(0.1, 0.0)).norm() {
            0
        } else {
            1
        };
        let a = t
            .primitive(nu, c(20.0, 0.0), &[c(10.0, 0.0), c(20.0, 0.0)])
            .unwrap();
        assert_abs_diff_eq!(a.re, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn harmonic_value_and_gradient_conventions() {
        // g = 1 gives H = 2x + c, gradient (2, 0)
        let t = HarmonicTuple::from_entire_gradients(
            vec![Poly::constant(c(1.0, 0.0)), Poly::constant(c(0.0, 1.0))],
            c(0.0, 0.0),
            vec![0.5, 0.0],
            disk(),
        )
        .unwrap();
        assert_abs_diff_eq!(
            t.harmonic_value(0, c(3.0, 7.0)).unwrap(),
            6.5,
            epsilon = 1e-12
        );
        let grad = t.harmonic_gradient(0, c(3.0, 7.0)).unwrap();
        assert_abs_diff_eq!(grad.re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(grad.im, 0.0, epsilon = 1e-12);
        // g = i gives H = -2y + c, gradient (0, -2)
        assert_abs_diff_eq!(
            t.harmonic_value(1, c(3.0, 7.0)).unwrap(),
            -14.0,
            epsilon = 1e-12
        );
        let grad = t.harmonic_gradient(1, c(3.0, 7.0)).unwrap();
        assert_abs_diff_eq!(grad.re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(grad.im, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn example211_h2_symbolic_consistency() {
        // H2 = 4x + x^2 - y^2 with g2 = 2 + z; gradient at 0 is (4, 0)
        let t = example211_tuple();
        let z = c(0.3, -0.2);
        let h2 = t.harmonic_value(1, z).unwrap();
        assert_abs_diff_eq!(h2, 4.0 * z.re + z.re * z.re - z.im * z.im, epsilon = 1e-12);
        let g = t.harmonic_gradient(1, c(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(g.re, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.im, 0.0, epsilon = 1e-12);
        // H3 = -x
        let h3 = t.harmonic_value(2, z).unwrap();
        assert_abs_diff_eq!(h3, -z.re, epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let z_poly = Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let p = BivariatePolynomial::new(vec![
            Poly::constant(c(-1.0, 0.0)),
            z_poly.clone(),
            z_poly,
        ])
        .unwrap();
        let t = HarmonicTuple::from_polynomial(p, c(10.0, 0.0), vec![0.0, 0.0], disk()).unwrap();
        let h = 1e-5;
        for &z in &[c(8.0, 2.0), c(12.0, -3.0), c(6.0, 6.0)] {
            for nu in 0..2 {
                let grad = t.harmonic_gradient(nu, z).unwrap();
                let fx = (t.harmonic_value(nu, z + c(h, 0.0)).unwrap()
                    - t.harmonic_value(nu, z - c(h, 0.0)).unwrap())
                    / (2.0 * h);
                let fy = (t.harmonic_value(nu, z + c(0.0, h)).unwrap()
                    - t.harmonic_value(nu, z - c(0.0, h)).unwrap())
                    / (2.0 * h);
                let scale = grad.norm().max(1.0);
                assert!((grad.re - fx).abs() < 1e-6 * scale, "fx mismatch at {z}");
                assert!((grad.im - fy).abs() < 1e-6 * scale, "fy mismatch at {z}");
            }
        }
    }

    #[test]
    fn path_independence_over_homotopic_paths() {
        let t = reciprocal_tuple();
        let z = c(3.0, 2.0);
        let direct = t.primitive(0, z, &[c(1.0, 0.0), z]).unwrap();
        let dogleg = t
            .primitive(0, z, &[c(1.0, 0.0), c(2.5, -0.5), c(4.0, 1.0), z])
            .unwrap();
        assert!((direct - dogleg).norm() < 2.0 * tol::QUAD_TOL);
    }

    #[test]
    fn trace_imaginary_axis() {
        // H1 = 2x, H2 = -2x; {H1 - H2 = 0} is the imaginary axis
        let t = HarmonicTuple::from_entire_gradients(
            vec![Poly::constant(c(1.0, 0.0)), Poly::constant(c(-1.0, 0.0))],
            c(0.0, 0.0),
            vec![0.0, 0.0],
            Disk::new(c(0.0, 0.0), 5.0),
        )
        .unwrap();
        let curve =
            trace_level_curve(&t, 0, 1, 0.0, c(0.0, 0.5), TraceOptions::with_budget(4.0))
                .unwrap();
        assert!(curve.samples.len() > 20);
        for s in &curve.samples {
            assert!(s.z.re.abs() < 1e-10, "sample off axis: {}", s.z);
            assert!(s.residual < 1e-10);
        }
    }

    #[test]
    fn trace_example211_h2_h3_curve() {
        // H2 - H3 = 5x + x^2 - y^2 = 0, tangent to the y-axis at the origin
        let t = example211_tuple();
        let curve = trace_level_curve(
            &t,
            1,
            2,
            0.0,
            c(0.01, 0.2),
            TraceOptions::with_budget(0.8),
        )
        .unwrap();
        for s in &curve.samples {
            let (x, y) = (s.z.re, s.z.im);
            assert!(
                (5.0 * x + x * x - y * y).abs() < 1e-8,
                "implicit residual too large at {}",
                s.z
            );
        }
        // implicit-function oracle: x(y) by bisection for a few y values
        for &y in &[0.1_f64, 0.2, 0.3] {
            let mut lo = 0.0;
            let mut hi = 0.5;
            for _ in 0..60 {
                let mid = (lo + hi) / 2.0;
                if 5.0 * mid + mid * mid - y * y < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let x_oracle = (lo + hi) / 2.0;
            let nearest = curve
                .samples
                .iter()
                .map(|s| (s.z - c(x_oracle, y)).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 5e-3, "traced curve misses oracle point at y={y}");
        }
    }

    #[test]
    fn trace_rejects_degenerate_pair() {
        let t = example211_tuple();
        let err =
            trace_level_curve(&t, 1, 1, 0.0, c(0.1, 0.1), TraceOptions::with_budget(1.0))
                .unwrap_err();
        assert!(matches!(err, HarmonicError::DegenerateCurve));
    }

    #[test]
    fn trace_symmetry_between_ij_and_ji() {
        let t = example211_tuple();
        let a = trace_level_curve(&t, 1, 2, 0.0, c(0.01, 0.2), TraceOptions::with_budget(0.6))
            .unwrap();
        let b = trace_level_curve(&t, 2, 1, 0.0, c(0.01, 0.2), TraceOptions::with_budget(0.6))
            .unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        let hausdorff = a
            .samples
            .iter()
            .map(|s| {
                b.samples
                    .iter()
                    .map(|t| (s.z - t.z).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        assert!(hausdorff < tol::TRACE_TOL);
    }

    #[test]
    fn sectors_two_linear_branches() {
        let t = HarmonicTuple::from_entire_gradients(
            vec![Poly::constant(c(1.0, 0.0)), Poly::constant(c(-1.0, 0.0))],
            c(0.0, 0.0),
            vec![0.0, 0.0],
            Disk::new(c(0.0, 0.0), 5.0),
        )
        .unwrap();
        let dec = sector_decomposition(&t, c(0.0, 0.0), 1.0).unwrap();
        assert_eq!(dec.arcs.len(), 2);
        assert_eq!(dec.sectors.len(), 2);
        let mut angles: Vec<f64> = dec.arcs.iter().map(|a| a.exit_angle).collect();
        angles.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(angles[0], std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        assert_abs_diff_eq!(angles[1], 3.0 * std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
    }

    #[test]
    fn sectors_quadratic_difference_m2() {
        // g1 - g2 = z: H1 - H2 = x^2 - y^2, four arcs at pi/4 + m pi/2
        let t = HarmonicTuple::from_entire_gradients(
            vec![
                Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]),
                Poly::zero(),
            ],
            c(0.0, 0.0),
            vec![0.0, 0.0],
            Disk::new(c(0.0, 0.0), 5.0),
        )
        .unwrap();
        let dec = sector_decomposition(&t, c(0.0, 0.0), 1.0).unwrap();
        assert_eq!(dec.arcs.len(), 4);
        assert_eq!(dec.sectors.len(), 4);
        let mut angles: Vec<f64> = dec.arcs.iter().map(|a| a.exit_angle).collect();
        angles.sort_by(f64::total_cmp);
        for (m, theta) in angles.iter().enumerate() {
            assert_abs_diff_eq!(
                *theta,
                std::f64::consts::FRAC_PI_4 + m as f64 * std::f64::consts::FRAC_PI_2,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn sectors_example211_six_arcs() {
        let t = example211_tuple();
        let dec = sector_decomposition(&t, c(0.0, 0.0), 0.2).unwrap();
        assert_eq!(dec.arcs.len(), 6);
        assert_eq!(dec.sectors.len(), 6);
    }

    #[test]
    fn tangential_order_flags() {
        // H1 = 2x, H2 = -2x on the imaginary axis: both derivatives 0, equal
        let t = HarmonicTuple::from_entire_gradients(
            vec![Poly::constant(c(1.0, 0.0)), Poly::constant(c(-1.0, 0.0))],
            c(0.0, 0.0),
            vec![0.0, 0.0],
            Disk::new(c(0.0, 0.0), 5.0),
        )
        .unwrap();
        let curve =
            trace_level_curve(&t, 0, 1, 0.0, c(0.0, 0.5), TraceOptions::with_budget(2.0))
                .unwrap();
        let len = curve.length();
        let ord = tangential_order(&t, &curve, (0.1 * len, 0.9 * len)).unwrap();
        assert_eq!(ord.relations, vec![OrderRelation::Equal]);

        // H1 = 2y (g = -i), H2 = -2y (g = i): derivatives +-2 along the axis
        let t2 = HarmonicTuple::from_entire_gradients(
            vec![Poly::constant(c(0.0, -1.0)), Poly::constant(c(0.0, 1.0))],
            c(0.0, 0.0),
            vec![0.0, 0.0],
            Disk::new(c(0.0, 0.0), 5.0),
        )
        .unwrap();
        // their level curve {H1 - H2 = 4y = 0} is the real axis; trace the
        // imaginary-axis curve of the first tuple and reuse it geometrically
        let ord2 = tangential_order(&t2, &curve, (0.1 * len, 0.9 * len)).unwrap();
        assert_eq!(ord2.relations, vec![OrderRelation::Strict]);
        assert_eq!(ord2.order, vec![1, 0]);
    }

    #[test]
    fn tangential_order_example211_stable_under_window_halving() {
        let t = example211_tuple();
        let curve = trace_level_curve(
            &t,
            1,
            2,
            0.0,
            c(0.01, 0.2),
            TraceOptions::with_budget(0.6),
        )
        .unwrap();
        // keep to the upper half of the curve
        let upper: Vec<&CurveSample> =
            curve.samples.iter().filter(|s| s.z.im > 0.02).collect();
        let lo = upper.first().unwrap().s;
        let hi = upper.last().unwrap().s;
        let full = tangential_order(&t, &curve, (lo, hi)).unwrap();
        let mid = (lo + hi) / 2.0;
        let halved = tangential_order(&t, &curve, (lo, mid)).unwrap();
        assert_eq!(full.order, halved.order);
        // finite-difference oracle at ten times the resolution for one point
        let idx = curve
            .samples
            .iter()
            .position(|s| s.s >= (lo + hi) / 2.0)
            .unwrap();
        let z0 = curve.samples[idx].z;
        let tangent = curve.tangent_at(idx);
        let h = 1e-6;
        for nu in 0..3 {
            let vp = t.harmonic_value(nu, z0 + tangent * h).unwrap();
            let vm = t.harmonic_value(nu, z0 - tangent * h).unwrap();
            let fd = (vp - vm) / (2.0 * h);
            let an = dot(t.harmonic_gradient(nu, z0).unwrap(), tangent);
            assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()));
        }
    }

    #[test]
    fn canonical_path_detours_around_singular_point() {
        // z y^2 + z y - 1 has singular points at 0 and -4; a query at z = -8
        // from base 10 must detour around both
        let zp = Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let p = BivariatePolynomial::new(vec![Poly::constant(c(-1.0, 0.0)), zp.clone(), zp])
            .unwrap();
        let t = HarmonicTuple::from_polynomial(p, c(10.0, 0.0), vec![0.0, 0.0], disk()).unwrap();
        let path = t.canonical_path(c(-8.0, 0.0)).unwrap();
        let singular = t.singular_set().unwrap();
        for w in path.windows(2) {
            // sample along each edge
            for m in 0..=8 {
                let z = w[0] + (w[1] - w[0]) * c(m as f64 / 8.0, 0.0);
                assert!(singular.distance(z) > 0.45 * singular.safety_radius);
            }
        }
        // and values there are still consistent: residual of branches
        let roots = t.branch_values(c(-8.0, 0.0)).unwrap();
        for y in roots {
            assert!(t
                .singular_set()
                .is_some());
            let res = {
                let zq = c(-8.0, 0.0);
                (zq * y * y + zq * y - 1.0).norm()
            };
            assert!(res < 1e-9);
        }
    }
}
