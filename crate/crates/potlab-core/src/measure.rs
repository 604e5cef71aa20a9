//! Nonnegative measures on the plane (atoms plus arc densities), their
//! Cauchy transforms and logarithmic potentials, interface jump densities
//! of configuration fields, Stokes mass balance, and verification of the
//! algebraic relation satisfied by a transform.

use num_complex::Complex64;
use thiserror::Error;

use crate::algebraic::BivariatePolynomial;
use crate::grid::ConfigurationField;
use crate::harmonic::{dot, HarmonicError, HarmonicTuple, LevelCurve};
use crate::quad::{QuadError, QuadRule};
use crate::tol;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("weights and density samples must be nonnegative")]
    NegativeWeight,
    #[error("arc geometry needs at least two polyline points")]
    ArcTooShort,
    #[error("trapezoid arcs need one density sample per polyline point")]
    ArcSampleMismatch,
    #[error("measure has empty support")]
    EmptySupport,
    #[error("evaluation point {z} is too close to the support")]
    TooCloseToSupport { z: Complex64 },
    #[error("circle (plus the finite-difference stencil) leaves the field domain")]
    CircleExitsGrid,
    #[error("interface sides are not constant along the curve")]
    AmbiguousInterface,
    #[error("interface curve has too few samples")]
    CurveTooShort,
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
}

/// Quadrature tag of an arc: plain trapezoid against the vertex samples, or
/// Gauss-Jacobi with endpoint exponents. `alpha` is the density exponent at
/// the arc start and `beta` at the arc end: the density behaves like
/// (s)^alpha (L-s)^beta in the arclength s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadTag {
    Trapezoid,
    GaussJacobi { alpha: f64, beta: f64 },
}

/// Polyline arc carrying nonnegative density samples.
///
/// Trapezoid arcs sample the density at the polyline vertices. Gauss-Jacobi
/// arcs sample it at the mapped Jacobi nodes of a rule with `density.len()`
/// points; the singular endpoint factors are divided out at integration
/// time, so the stored samples are the full density values.
#[derive(Debug, Clone)]
pub struct MeasureArc {
    pub points: Vec<Complex64>,
    pub density: Vec<f64>,
    pub rule: QuadTag,
}

impl MeasureArc {
    /// Cumulative arclength at every polyline vertex.
    fn cumlen(&self) -> Vec<f64> {
        let mut acc = Vec::with_capacity(self.points.len());
        let mut s = 0.0;
        acc.push(0.0);
        for w in self.points.windows(2) {
            s += (w[1] - w[0]).norm();
            acc.push(s);
        }
        acc
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Point at arclength s along the polyline.
    fn point_at(&self, cum: &[f64], s: f64) -> Complex64 {
        let total = *cum.last().unwrap();
        let s = s.clamp(0.0, total);
        match cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(idx) => self.points[idx],
            Err(idx) => {
                let i = idx - 1;
                let seg = cum[idx] - cum[i];
                let t = if seg > 0.0 { (s - cum[i]) / seg } else { 0.0 };
                self.points[i] + (self.points[i + 1] - self.points[i]) * t
            }
        }
    }

    /// Builds a Gauss-Jacobi arc by sampling a density function at the
    /// mapped Jacobi nodes. The closure receives the point and arclength.
    pub fn with_jacobi_density<F: Fn(Complex64, f64) -> f64>(
        points: Vec<Complex64>,
        alpha: f64,
        beta: f64,
        n: usize,
        density_fn: F,
    ) -> Result<MeasureArc, MeasureError> {
        let mut arc = MeasureArc {
            points,
            density: Vec::new(),
            rule: QuadTag::GaussJacobi { alpha, beta },
        };
        if arc.points.len() < 2 {
            return Err(MeasureError::ArcTooShort);
        }
        let rule = QuadRule::gauss_jacobi(n, beta, alpha)?;
        let cum = arc.cumlen();
        let total = *cum.last().unwrap();
        arc.density = rule
            .nodes()
            .iter()
            .map(|&t| {
                let s = total * (t + 1.0) / 2.0;
                density_fn(arc.point_at(&cum, s), s)
            })
            .collect();
        Ok(arc)
    }

    /// Integrates f against the arc's density measure.
    fn integrate<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Result<Complex64, MeasureError> {
        let cum = self.cumlen();
        let total = *cum.last().unwrap();
        match self.rule {
            QuadTag::Trapezoid => {
                if self.density.len() != self.points.len() {
                    return Err(MeasureError::ArcSampleMismatch);
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..self.points.len() - 1 {
                    let ds = cum[i + 1] - cum[i];
                    let fa = f(self.points[i]) * self.density[i];
                    let fb = f(self.points[i + 1]) * self.density[i + 1];
                    acc += (fa + fb) * (ds / 2.0);
                }
                Ok(acc)
            }
            QuadTag::GaussJacobi { alpha, beta } => {
                // classical Jacobi convention: the (1-t) exponent belongs to
                // the arc end, the (1+t) exponent to the arc start
                let rule = QuadRule::gauss_jacobi(self.density.len(), beta, alpha)?;
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, &t) in rule.nodes().iter().enumerate() {
                    let s = total * (t + 1.0) / 2.0;
                    let z = self.point_at(&cum, s);
                    let smooth = self.density[i] / rule.weight_fn_at(i);
                    acc += f(z) * (rule.weights()[i] * smooth);
                }
                Ok(acc * (total / 2.0))
            }
        }
    }
}

/// Nonnegative measure: point masses plus arc densities.
#[derive(Debug, Clone)]
pub struct Measure {
    pub atoms: Vec<(Complex64, f64)>,
    pub arcs: Vec<MeasureArc>,
}

impl Measure {
    pub fn new(atoms: Vec<(Complex64, f64)>, arcs: Vec<MeasureArc>) -> Result<Self, MeasureError> {
        if atoms.iter().any(|&(_, w)| w < 0.0 || !w.is_finite()) {
            return Err(MeasureError::NegativeWeight);
        }
        for arc in &arcs {
            if arc.points.len() < 2 {
                return Err(MeasureError::ArcTooShort);
            }
            if arc.density.iter().any(|&d| d < 0.0 || !d.is_finite()) {
                return Err(MeasureError::NegativeWeight);
            }
            if matches!(arc.rule, QuadTag::Trapezoid) && arc.density.len() != arc.points.len() {
                return Err(MeasureError::ArcSampleMismatch);
            }
        }
        if atoms.is_empty() && arcs.is_empty() {
            return Err(MeasureError::EmptySupport);
        }
        Ok(Measure { atoms, arcs })
    }

    pub fn dirac(location: Complex64, weight: f64) -> Result<Self, MeasureError> {
        Measure::new(vec![(location, weight)], vec![])
    }

    /// Uniform density on a straight segment, sampled for trapezoid
    /// integration.
    pub fn uniform_segment(
        a: Complex64,
        b: Complex64,
        density: f64,
        samples: usize,
    ) -> Result<Self, MeasureError> {
        let n = samples.max(2);
        let points: Vec<Complex64> = (0..n)
            .map(|i| a + (b - a) * (i as f64 / (n - 1) as f64))
            .collect();
        Measure::new(
            vec![],
            vec![MeasureArc {
                points,
                density: vec![density; n],
                rule: QuadTag::Trapezoid,
            }],
        )
    }

    pub fn support_points(&self) -> Vec<Complex64> {
        let mut pts: Vec<Complex64> = self.atoms.iter().map(|&(z, _)| z).collect();
        for arc in &self.arcs {
            pts.extend_from_slice(&arc.points);
        }
        pts
    }

    pub fn support_diameter(&self) -> f64 {
        let pts = self.support_points();
        let mut diam = 0.0_f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                diam = diam.max((pts[i] - pts[j]).norm());
            }
        }
        diam
    }

    /// Distance from z to the support (atoms and arc segments).
    pub fn support_distance(&self, z: Complex64) -> f64 {
        let mut dist = f64::INFINITY;
        for &(p, _) in &self.atoms {
            dist = dist.min((z - p).norm());
        }
        for arc in &self.arcs {
            for w in arc.points.windows(2) {
                dist = dist.min(dist_point_segment(z, w[0], w[1]));
            }
        }
        dist
    }

    fn check_clearance(&self, z: Complex64) -> Result<(), MeasureError> {
        let clearance = tol::EVAL_CLEARANCE_FACTOR * self.support_diameter();
        if self.support_distance(z) <= clearance {
            return Err(MeasureError::TooCloseToSupport { z });
        }
        Ok(())
    }

    /// Integrates a complex-valued kernel against the measure.
    pub fn integrate<F: Fn(Complex64) -> Complex64>(
        &self,
        f: F,
    ) -> Result<Complex64, MeasureError> {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(p, w) in &self.atoms {
            acc += f(p) * w;
        }
        for arc in &self.arcs {
            acc += arc.integrate(&f)?;
        }
        Ok(acc)
    }

    pub fn total_mass(&self) -> Result<f64, MeasureError> {
        Ok(self.integrate(|_| Complex64::new(1.0, 0.0))?.re)
    }

    /// Cauchy transform: integral of 1/(z - zeta) d mu(zeta).
    pub fn cauchy_transform(&self, z: Complex64) -> Result<Complex64, MeasureError> {
        self.check_clearance(z)?;
        self.integrate(|zeta| Complex64::new(1.0, 0.0) / (z - zeta))
    }

    /// Logarithmic potential: integral of log|z - zeta| d mu(zeta).
    pub fn log_potential(&self, z: Complex64) -> Result<f64, MeasureError> {
        self.check_clearance(z)?;
        Ok(self.integrate(|zeta| Complex64::new((z - zeta).norm().ln(), 0.0))?.re)
    }
}

fn dist_point_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (dot(p - a, ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// The worked density of the two-branch fiber equation: support [-4, 0]
/// with density sqrt(4+x)/(2 pi sqrt(-x)), Gauss-Jacobi (1/2, -1/2).
pub fn example51_measure(n: usize) -> Result<Measure, MeasureError> {
    let arc = MeasureArc::with_jacobi_density(
        vec![Complex64::new(-4.0, 0.0), Complex64::new(0.0, 0.0)],
        0.5,
        -0.5,
        n,
        |z, _s| {
            let x = z.re;
            (4.0 + x).max(0.0).sqrt() / (2.0 * std::f64::consts::PI * (-x).max(1e-300).sqrt())
        },
    )?;
    Measure::new(vec![], vec![arc])
}

/// Jump density along one interface: the curve, the two active indices
/// (H_a active on the normal side), and the per-sample values of
/// grad(H_a - H_b) . n.
#[derive(Debug, Clone)]
pub struct InterfaceDensity {
    pub curve: LevelCurve,
    pub side_a: usize,
    pub side_b: usize,
    /// Unit normals pointing into the a-side, one per curve sample.
    pub normals: Vec<Complex64>,
    pub lambda: Vec<f64>,
}

impl InterfaceDensity {
    /// Trapezoid integral of the density over the whole curve.
    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.curve.samples.len() - 1 {
            let ds = self.curve.samples[i + 1].s - self.curve.samples[i].s;
            acc += 0.5 * (self.lambda[i] + self.lambda[i + 1]) * ds;
        }
        acc
    }

    /// Trapezoid integral restricted to a disk, with linear interpolation
    /// at the boundary crossings.
    pub fn integral_inside(&self, center: Complex64, radius: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.curve.samples.len() - 1 {
            let (z0, z1) = (self.curve.samples[i].z, self.curve.samples[i + 1].z);
            let (l0, l1) = (self.lambda[i], self.lambda[i + 1]);
            let ds = self.curve.samples[i + 1].s - self.curve.samples[i].s;
            let in0 = (z0 - center).norm() <= radius;
            let in1 = (z1 - center).norm() <= radius;
            match (in0, in1) {
                (true, true) => acc += 0.5 * (l0 + l1) * ds,
                (true, false) | (false, true) => {
                    // crossing fraction along the segment
                    let t = circle_crossing_fraction(z0, z1, center, radius);
                    let lt = l0 + (l1 - l0) * t;
                    if in0 {
                        acc += 0.5 * (l0 + lt) * ds * t;
                    } else {
                        acc += 0.5 * (lt + l1) * ds * (1.0 - t);
                    }
                }
                (false, false) => {}
            }
        }
        acc
    }

    pub fn min_lambda(&self) -> f64 {
        self.lambda.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn circle_crossing_fraction(z0: Complex64, z1: Complex64, c: Complex64, r: f64) -> f64 {
    // |z0 + t (z1 - z0) - c| = r, t in [0, 1]
    let d = z1 - z0;
    let m = z0 - c;
    let a = d.norm_sqr();
    let b = 2.0 * dot(m, d);
    let q = m.norm_sqr() - r * r;
    let disc = (b * b - 4.0 * a * q).max(0.0).sqrt();
    let t1 = (-b - disc) / (2.0 * a);
    let t2 = (-b + disc) / (2.0 * a);
    if (0.0..=1.0).contains(&t1) {
        t1
    } else {
        t2.clamp(0.0, 1.0)
    }
}

/// Interface jump densities extracted from a configuration field.
#[derive(Debug, Clone)]
pub struct RieszDensity {
    pub interfaces: Vec<InterfaceDensity>,
}

impl RieszDensity {
    /// 1/(2 pi) times the total jump integral (probability normalization).
    pub fn normalized_mass(&self) -> f64 {
        self.interfaces.iter().map(|i| i.integral()).sum::<f64>() / (2.0 * std::f64::consts::PI)
    }

    pub fn normalized_mass_inside(&self, center: Complex64, radius: f64) -> f64 {
        self.interfaces
            .iter()
            .map(|i| i.integral_inside(center, radius))
            .sum::<f64>()
            / (2.0 * std::f64::consts::PI)
    }
}

/// Extracts the jump density lambda = grad(H_a - H_b) . n along each
/// interface curve, with n the unit normal into the side where H_a is
/// active. The active indices on the two sides must be constant along the
/// curve.
pub fn jump_density(
    field: &ConfigurationField,
    tuple: &HarmonicTuple,
    interfaces: &[LevelCurve],
) -> Result<RieszDensity, MeasureError> {
    let mut out = Vec::with_capacity(interfaces.len());
    for curve in interfaces {
        if curve.samples.len() < 2 {
            return Err(MeasureError::CurveTooShort);
        }
        let probe_offset = 2.0 * field.grid.h;
        let mut side_plus: Option<usize> = None;
        let mut side_minus: Option<usize> = None;
        let stride = (curve.samples.len() / 16).max(1);
        for (idx, sample) in curve.samples.iter().enumerate().step_by(stride) {
            let n = Complex64::new(0.0, 1.0) * curve.tangent_at(idx);
            let plus = active_near(field, sample.z + n * probe_offset);
            let minus = active_near(field, sample.z - n * probe_offset);
            if let (Some(p), Some(m)) = (plus, minus) {
                match (side_plus, side_minus) {
                    (None, None) => {
                        side_plus = Some(p);
                        side_minus = Some(m);
                    }
                    (Some(sp), Some(sm)) => {
                        if sp != p || sm != m {
                            return Err(MeasureError::AmbiguousInterface);
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
        let (plus_active, minus_active) = match (side_plus, side_minus) {
            (Some(p), Some(m)) if p != m => (p, m),
            _ => return Err(MeasureError::AmbiguousInterface),
        };

        // a is the active index on the +n side by construction; keep the
        // convention that the stored normal points into the a-side.
        let (side_a, side_b) = (plus_active, minus_active);
        let mut normals = Vec::with_capacity(curve.samples.len());
        let mut lambda = Vec::with_capacity(curve.samples.len());
        for (idx, sample) in curve.samples.iter().enumerate() {
            let n = Complex64::new(0.0, 1.0) * curve.tangent_at(idx);
            let grads = tuple.gradients_at(sample.z)?;
            normals.push(n);
            lambda.push(dot(grads[side_a] - grads[side_b], n));
        }
        out.push(InterfaceDensity {
            curve: curve.clone(),
            side_a,
            side_b,
            normals,
            lambda,
        });
    }
    Ok(RieszDensity { interfaces: out })
}

fn active_near(field: &ConfigurationField, z: Complex64) -> Option<usize> {
    let (fx, fy) = field.grid.cell_coords(z)?;
    let i = (fx.round() as usize).min(field.grid.nx - 1);
    let j = (fy.round() as usize).min(field.grid.ny - 1);
    Some(field.node_active(i, j))
}

/// Field evaluation abstraction for the Stokes flux: grid-backed fields
/// interpolate bilinearly, analytic prototypes evaluate exactly.
pub trait FieldEval {
    fn eval(&self, z: Complex64) -> Option<f64>;
    /// Preferred radial finite-difference step at the given circle radius.
    fn fd_step(&self, radius: f64) -> f64 {
        1e-5 * radius
    }
}

impl FieldEval for ConfigurationField {
    fn eval(&self, z: Complex64) -> Option<f64> {
        self.value_at(z)
    }

    fn fd_step(&self, _radius: f64) -> f64 {
        self.grid.h
    }
}

/// Wrapper turning a closure into a total field evaluator.
pub struct FnField<F: Fn(Complex64) -> f64>(pub F);

impl<F: Fn(Complex64) -> f64> FieldEval for FnField<F> {
    fn eval(&self, z: Complex64) -> Option<f64> {
        Some((self.0)(z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

/// Normalized boundary flux (1/2pi) of the normal derivative around a
/// circle: the total Riesz mass enclosed, with the fundamental solution
/// log|z| carrying mass one.
///
/// The derivative is sampled by central differences at 256 points. Sample
/// placement is kink-aware: the circle restriction of V is scanned for
/// derivative breaks (interface crossings), and the 256 nodes are laid out
/// as composite Gauss-Legendre panels between the detected breaks, so that
/// each panel integrates a smooth piece.
pub fn stokes_mass<E: FieldEval>(field: &E, circle: Circle) -> Result<f64, MeasureError> {
    let total_samples = 256;
    let scan_n = 1024;
    let delta = field.fd_step(circle.radius);
    let at = |theta: f64, dr: f64| -> Result<f64, MeasureError> {
        let z = circle.center + Complex64::from_polar(circle.radius + dr, theta);
        field.eval(z).ok_or(MeasureError::CircleExitsGrid)
    };

    // locate derivative breaks of theta -> V on the circle
    let mut w = Vec::with_capacity(scan_n);
    for m in 0..scan_n {
        w.push(at(2.0 * std::f64::consts::PI * m as f64 / scan_n as f64, 0.0)?);
    }
    let mut second: Vec<f64> = (0..scan_n)
        .map(|m| {
            let prev = w[(m + scan_n - 1) % scan_n];
            let next = w[(m + 1) % scan_n];
            (next - 2.0 * w[m] + prev).abs()
        })
        .collect();
    let mut sorted = second.clone();
    sorted.sort_by(f64::total_cmp);
    let med = sorted[scan_n / 2];
    let w_scale = w.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let threshold = 12.0 * med + 1e-12 * w_scale;
    let spacing = 2.0 * std::f64::consts::PI / scan_n as f64;
    let mut kinks: Vec<f64> = Vec::new();
    let mut m = 0;
    while m < scan_n {
        if second[m] > threshold {
            // take the cluster peak, then refine
            let mut peak = m;
            let mut end = m;
            while end + 1 < scan_n && second[end + 1] > threshold {
                end += 1;
                if second[end] > second[peak] {
                    peak = end;
                }
            }
            let theta0 = peak as f64 * spacing;
            let refined = refine_kink(&|theta| at(theta, 0.0), theta0 - spacing, theta0 + spacing)?;
            kinks.push(refined.rem_euclid(2.0 * std::f64::consts::PI));
            for slot in second.iter_mut().take(end + 1).skip(m) {
                *slot = 0.0;
            }
            m = end + 1;
        } else {
            m += 1;
        }
    }
    kinks.sort_by(f64::total_cmp);
    kinks.dedup_by(|a, b| (*a - *b).abs() < 4.0 * spacing);
    if kinks.len() > 32 {
        kinks.truncate(32);
    }

    // panels between consecutive breaks (whole circle if none)
    let panels: Vec<(f64, f64)> = if kinks.is_empty() {
        let n = 32;
        (0..n)
            .map(|p| {
                let a = 2.0 * std::f64::consts::PI * p as f64 / n as f64;
                let b = 2.0 * std::f64::consts::PI * (p + 1) as f64 / n as f64;
                (a, b)
            })
            .collect()
    } else {
        let mut panels = Vec::with_capacity(kinks.len());
        for (idx, &a) in kinks.iter().enumerate() {
            let b = if idx + 1 < kinks.len() {
                kinks[idx + 1]
            } else {
                kinks[0] + 2.0 * std::f64::consts::PI
            };
            panels.push((a, b));
        }
        panels
    };

    // distribute the finite-difference samples over panels by length
    let total_len: f64 = panels.iter().map(|(a, b)| b - a).sum();
    let mut counts: Vec<usize> = panels
        .iter()
        .map(|(a, b)| (((b - a) / total_len) * total_samples as f64).floor() as usize)
        .map(|n| n.max(4))
        .collect();
    while counts.iter().sum::<usize>() > total_samples {
        let i = counts
            .iter()
            .enumerate()
            .max_by_key(|(_, &n)| n)
            .map(|(i, _)| i)
            .unwrap();
        counts[i] -= 1;
    }
    while counts.iter().sum::<usize>() < total_samples {
        let i = counts
            .iter()
            .enumerate()
            .min_by_key(|(_, &n)| n)
            .map(|(i, _)| i)
            .unwrap();
        counts[i] += 1;
    }

    let mut flux = 0.0;
    for ((a, b), n) in panels.into_iter().zip(counts) {
        let rule = QuadRule::gauss_legendre(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (i, &t) in rule.nodes().iter().enumerate() {
            let theta = mid + half * t;
            let dn = (at(theta, delta)? - at(theta, -delta)?) / (2.0 * delta);
            flux += rule.weights()[i] * dn * half;
        }
    }
    Ok(flux * circle.radius / (2.0 * std::f64::consts::PI))
}

/// Ternary search for the maximizer of the tent-shaped second difference
/// |V(t+d) + V(t-d) - 2 V(t)| with d tied to the bracket width.
fn refine_kink<F: Fn(f64) -> Result<f64, MeasureError>>(
    eval: &F,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64, MeasureError> {
    let phi = |theta: f64, d: f64| -> Result<f64, MeasureError> {
        Ok((eval(theta + d)? + eval(theta - d)? - 2.0 * eval(theta)?).abs())
    };
    for _ in 0..80 {
        if hi - lo < 1e-9 {
            break;
        }
        let d = hi - lo;
        let m1 = lo + d / 3.0;
        let m2 = hi - d / 3.0;
        if phi(m1, d)? < phi(m2, d)? {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    Ok((lo + hi) / 2.0)
}

/// Max normalized residual |P(z, mu_hat(z))| / scale over the sample
/// points, where scale is the fiber coefficient scale times
/// max(1, |mu_hat|)^k.
pub fn verify_algebraic_relation(
    p: &BivariatePolynomial,
    mu: &Measure,
    samples: &[Complex64],
) -> Result<f64, MeasureError> {
    let k = p.degree_y() as i32;
    let mut worst = 0.0_f64;
    for &z in samples {
        let transform = mu.cauchy_transform(z)?;
        let scale = p.fiber_scale(z).max(1e-300) * transform.norm().max(1.0).powi(k);
        worst = worst.max(p.eval(z, transform).norm() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{trace_level_curve, Disk, TraceOptions};
    use crate::poly::Poly;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Adaptive Simpson oracle for integrals of the worked density
    /// against a smooth kernel, using the substitution x = -4 sin^2(phi)
    /// which removes both endpoint singularities.
    fn example51_oracle<F: Fn(f64) -> f64>(kernel: F) -> f64 {
        let g = |phi: f64| {
            let x = -4.0 * phi.sin().powi(2);
            8.0 * phi.cos().powi(2) / (2.0 * std::f64::consts::PI) * kernel(x)
        };
        let mut n = 64;
        let mut prev = f64::NAN;
        loop {
            let h = std::f64::consts::FRAC_PI_2 / n as f64;
            let mut acc = g(0.0) + g(std::f64::consts::FRAC_PI_2);
            for m in 1..n {
                acc += if m % 2 == 1 { 4.0 } else { 2.0 } * g(m as f64 * h);
            }
            let val = acc * h / 3.0;
            if (val - prev).abs() < 1e-12 {
                return val;
            }
            prev = val;
            n *= 2;
        }
    }

    #[test]
    fn dirac_transform_and_potential() {
        let mu = Measure::dirac(c(0.0, 0.0), 1.0).unwrap();
        let z = c(2.0, 1.0);
        assert!((mu.cauchy_transform(z).unwrap() - 1.0 / z).norm() < 1e-14);
        assert_abs_diff_eq!(mu.log_potential(z).unwrap(), z.norm().ln(), epsilon = 1e-14);
    }

    #[test]
    fn uniform_interval_transform_closed_form() {
        // density 1/2 on [-1, 1]: transform at 2 is (1/2) ln 3
        let mu = Measure::uniform_segment(c(-1.0, 0.0), c(1.0, 0.0), 0.5, 20001).unwrap();
        let got = mu.cauchy_transform(c(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(got.re, 0.5 * 3.0_f64.ln(), epsilon = 1e-8);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn example51_mass_and_transform() {
        let mu = example51_measure(64).unwrap();
        assert_abs_diff_eq!(mu.total_mass().unwrap(), 1.0, epsilon = 1e-12);
        // exterior branch value at z = 10
        let expect = (-1.0 + (1.0_f64 + 0.4).sqrt()) / 2.0;
        let got = mu.cauchy_transform(c(10.0, 0.0)).unwrap();
        assert_abs_diff_eq!(got.re, expect, epsilon = 1e-10);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn example51_potential_against_simpson_oracle() {
        let mu = example51_measure(64).unwrap();
        let oracle = example51_oracle(|x| (10.0 - x).abs().ln());
        assert_abs_diff_eq!(
            mu.log_potential(c(10.0, 0.0)).unwrap(),
            oracle,
            epsilon = 1e-8
        );
    }

    #[test]
    fn potential_wirtinger_half_convention() {
        // 2 dV/dz = mu_hat: finite-difference Wirtinger derivative
        let mu = Measure::dirac(c(0.0, 0.0), 1.0).unwrap();
        let z = c(2.0, 1.0);
        let h = 1e-6;
        let vx = (mu.log_potential(z + c(h, 0.0)).unwrap()
            - mu.log_potential(z - c(h, 0.0)).unwrap())
            / (2.0 * h);
        let vy = (mu.log_potential(z + c(0.0, h)).unwrap()
            - mu.log_potential(z - c(0.0, h)).unwrap())
            / (2.0 * h);
        let two_dz = Complex64::new(vx, -vy);
        assert!((two_dz - 1.0 / z).norm() < 1e-8);
    }

    #[test]
    fn clearance_rejects_near_support() {
        let mu = example51_measure(32).unwrap();
        assert!(matches!(
            mu.cauchy_transform(c(-2.0, 1e-9)),
            Err(MeasureError::TooCloseToSupport { .. })
        ));
    }

    #[test]
    fn transform_tail_mass() {
        let mu = example51_measure(64).unwrap();
        let diam = mu.support_diameter();
        for &z in &[c(60.0, 0.0), c(0.0, 80.0), c(-70.0, 40.0)] {
            let t = mu.cauchy_transform(z).unwrap();
            assert!(
                (z * t - 1.0).norm() < 10.0 * diam / z.norm(),
                "tail bound fails at {z}"
            );
        }
    }

    #[test]
    fn conjugate_symmetry_for_real_measures() {
        let mu = example51_measure(48).unwrap();
        for &z in &[c(3.0, 2.0), c(-6.0, 1.5), c(1.0, -4.0)] {
            let a = mu.cauchy_transform(z).unwrap();
            let b = mu.cauchy_transform(z.conj()).unwrap();
            assert!((b - a.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn stokes_fundamental_solution() {
        let field = FnField(|z: Complex64| z.norm().max(1e-300).ln());
        let mass = stokes_mass(
            &field,
            Circle {
                center: c(0.0, 0.0),
                radius: 1.0,
            },
        )
        .unwrap();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn stokes_ramp_flux() {
        let field = FnField(|z: Complex64| (2.0 * z.re).max(0.0));
        let mass = stokes_mass(
            &field,
            Circle {
                center: c(0.0, 0.0),
                radius: 1.0,
            },
        )
        .unwrap();
        assert_abs_diff_eq!(mass, 2.0 / std::f64::consts::PI, epsilon = 1e-8);
    }

    #[test]
    fn stokes_grid_backed_field() {
        use crate::grid::Grid;
        let grid = Grid::centered(c(0.0, 0.0), 1.5, 301);
        let field = ConfigurationField::from_fn(grid, |z| ((2.0 * z.re).max(0.0), 0));
        let mass = stokes_mass(
            &field,
            Circle {
                center: c(0.0, 0.0),
                radius: 1.0,
            },
        )
        .unwrap();
        assert_abs_diff_eq!(mass, 2.0 / std::f64::consts::PI, epsilon = 2e-3);
        assert!(matches!(
            stokes_mass(
                &field,
                Circle {
                    center: c(0.0, 0.0),
                    radius: 1.6,
                }
            ),
            Err(MeasureError::CircleExitsGrid)
        ));
    }

    #[test]
    fn jump_density_ramp_interface() {
        use crate::grid::Grid;
        let tuple = HarmonicTuple::from_entire_gradients(
            vec![Poly::zero(), Poly::constant(c(1.0, 0.0))],
            c(0.0, 0.0),
            vec![0.0, 0.0],
            Disk::new(c(0.0, 0.0), 10.0),
        )
        .unwrap();
        let grid = Grid::centered(c(0.0, 0.0), 0.8, 161);
        let field = crate::configurations::max_configuration(&tuple, &[0, 1], grid).unwrap();
        let curve = trace_level_curve(
            &tuple,
            1,
            0,
            0.0,
            c(0.0, 0.1),
            TraceOptions::with_budget(1.2),
        )
        .unwrap();
        let density = jump_density(&field, &tuple, &[curve]).unwrap();
        let iface = &density.interfaces[0];
        // sides depend on the trace orientation; the pair must be {0, 1}
        let mut sides = [iface.side_a, iface.side_b];
        sides.sort_unstable();
        assert_eq!(sides, [0, 1]);
        for &l in &iface.lambda {
            assert_abs_diff_eq!(l, 2.0, epsilon = 1e-9);
        }
        assert!(iface.min_lambda() >= -1e-8);
    }

    #[test]
    fn verify_relation_examples() {
        // z y - 1 with the unit Dirac: residual zero
        let zp = Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let p1 = BivariatePolynomial::new(vec![Poly::constant(c(-1.0, 0.0)), zp.clone()])
            .unwrap();
        let dirac = Measure::dirac(c(0.0, 0.0), 1.0).unwrap();
        let pts: Vec<Complex64> = (0..12)
            .map(|m| Complex64::from_polar(3.0, 0.5 + m as f64))
            .collect();
        assert!(verify_algebraic_relation(&p1, &dirac, &pts).unwrap() < 1e-14);

        // the worked fiber equation against its measure on |z| = 8
        let p2 =
            BivariatePolynomial::new(vec![Poly::constant(c(-1.0, 0.0)), zp.clone(), zp])
                .unwrap();
        let mu = example51_measure(64).unwrap();
        let ring: Vec<Complex64> = (0..50)
            .map(|m| Complex64::from_polar(8.0, 2.0 * std::f64::consts::PI * m as f64 / 50.0))
            .collect();
        assert!(verify_algebraic_relation(&p2, &mu, &ring).unwrap() < 1e-8);

        // negative control: z y - 1 against the uniform interval fails
        let uniform = Measure::uniform_segment(c(-1.0, 0.0), c(1.0, 0.0), 0.5, 2001).unwrap();
        assert!(verify_algebraic_relation(&p1, &uniform, &pts).unwrap() > 1e-2);
    }

    #[test]
    fn potential_transform_consistency_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let measures = vec![
            Measure::dirac(c(0.3, -0.2), 1.0).unwrap(),
            Measure::uniform_segment(c(-1.0, 0.0), c(1.0, 0.0), 0.5, 4001).unwrap(),
            example51_measure(64).unwrap(),
        ];
        let h = 1e-5;
        for mu in &measures {
            for _ in 0..50 {
                let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 3.0
                    + c(0.0, 6.0);
                let vx = (mu.log_potential(z + c(h, 0.0)).unwrap()
                    - mu.log_potential(z - c(h, 0.0)).unwrap())
                    / (2.0 * h);
                let vy = (mu.log_potential(z + c(0.0, h)).unwrap()
                    - mu.log_potential(z - c(0.0, h)).unwrap())
                    / (2.0 * h);
                let two_dz = Complex64::new(vx, -vy);
                let transform = mu.cauchy_transform(z).unwrap();
                assert!(
                    (two_dz - transform).norm() <= 1e-6 * transform.norm().max(1e-3),
                    "consistency fails at {z}"
                );
            }
        }
    }
}
