//! Analytic-tree laboratory: critical values of a normalized fiber
//! polynomial, the exterior branch with unit Laurent coefficient, branch-cut
//! measures on embedded trees via two-sided continuation, tree scoring, and
//! a simulated-annealing search for a positive-measure tree.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebraic::{
    continue_branches_unchecked, solve_fiber, AlgebraicError, BivariatePolynomial,
};
use crate::harmonic::dot;
use crate::poly::Poly;
use crate::quad::{QuadError, QuadRule};
use crate::tol;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("polynomial must have the normal form y + c2 y^2 + ... + ck y^k")]
    NotNormalForm,
    #[error("critical points of the fiber polynomial are not simple")]
    DegenerateCritical,
    #[error("critical value undefined: the polynomial vanishes at a critical point")]
    CriticalValueAtPole,
    #[error("exterior branch is ambiguous at the requested radius")]
    AmbiguousExteriorBranch,
    #[error("base radius must exceed twice the critical-value radius")]
    BaseRadiusTooSmall,
    #[error("exterior branch fails the Laurent dominance check")]
    LaurentCheckFailed,
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("arcs intersect away from shared endpoints")]
    ArcsIntersect,
    #[error("tree is missing the required node near {z}")]
    MissingRequiredNode { z: Complex64 },
    #[error("tube walk cannot reach an arc side inside the complement")]
    ContinuationBlocked,
    #[error("side offset collides with a node or the opposite side")]
    SideCollision,
    #[error(transparent)]
    Algebraic(#[from] AlgebraicError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Validates the normal form y + c2 y^2 + ... and returns the y-degree.
fn normal_form_degree(p_y: &Poly) -> Result<usize, TreeError> {
    let c = p_y.coeffs();
    if c.len() < 2
        || c[0] != Complex64::new(0.0, 0.0)
        || c[1] != Complex64::new(1.0, 0.0)
        || c.last().unwrap().norm() == 0.0
    {
        return Err(TreeError::NotNormalForm);
    }
    Ok(c.len() - 1)
}

/// Critical values sigma = { 1/P(alpha) : P'(alpha) = 0 } of the fiber
/// equation P(y) = 1/z; k-1 points away from the origin.
pub fn critical_values(p_y: &Poly) -> Result<Vec<Complex64>, TreeError> {
    let k = normal_form_degree(p_y)?;
    if k == 1 {
        return Ok(Vec::new());
    }
    let dp = p_y.derivative();
    let mut alphas = dp.roots().map_err(|_| TreeError::DegenerateCritical)?;
    if alphas.len() != k - 1 {
        return Err(TreeError::DegenerateCritical);
    }
    let scale = alphas.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let ctol = tol::cluster_tol(scale);
    for i in 0..alphas.len() {
        for j in i + 1..alphas.len() {
            if (alphas[i] - alphas[j]).norm() <= ctol {
                return Err(TreeError::DegenerateCritical);
            }
        }
    }
    crate::poly::sort_lex(&mut alphas);
    let mut sigma = Vec::with_capacity(alphas.len());
    for alpha in alphas {
        let value = p_y.eval(alpha);
        if value.norm() <= 1e-12 * p_y.eval_norm(alpha.norm()).max(1.0) {
            return Err(TreeError::CriticalValueAtPole);
        }
        sigma.push(Complex64::new(1.0, 0.0) / value);
    }
    Ok(sigma)
}

/// The exterior branch alpha*(z) = 1/z + a2/z^2 + ... selected at |z| = R.
#[derive(Debug, Clone)]
pub struct ExteriorBranch {
    pub base: Complex64,
    pub value: Complex64,
    /// Index of the branch in the sorted fiber at the base.
    pub label: usize,
    /// Leading correction estimate from (alpha* - 1/z) z^2 at the base.
    pub a2_estimate: Complex64,
}

/// Solves the fiber at z = R, picks the root closest to 1/R, and verifies
/// Laurent dominance |z alpha*(z) - 1| < 1/2 at eight points around the
/// circle (by continuation, so the same branch is followed).
pub fn exterior_branch(p_y: &Poly, r: f64) -> Result<ExteriorBranch, TreeError> {
    normal_form_degree(p_y)?;
    let sigma = critical_values(p_y)?;
    let sigma_radius = sigma.iter().map(|s| s.norm()).fold(0.0, f64::max);
    if r <= 2.0 * sigma_radius {
        return Err(TreeError::BaseRadiusTooSmall);
    }
    let q = BivariatePolynomial::from_fiber_equation(p_y)?;
    let base = Complex64::new(r, 0.0);
    let target = Complex64::new(1.0 / r, 0.0);
    let roots = solve_fiber(&q, base)?;
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&i, &j| {
        (roots[i] - target)
            .norm()
            .total_cmp(&(roots[j] - target).norm())
    });
    let label = order[0];
    if roots.len() >= 2 && (roots[order[1]] - target).norm() < 0.1 / r {
        return Err(TreeError::AmbiguousExteriorBranch);
    }
    let path = crate::algebraic::circle_path(Complex64::new(0.0, 0.0), r, 8);
    let track = continue_branches_unchecked(&q, &path, roots.clone())?;
    for sample in &track.samples {
        let alpha = sample.roots[label];
        if (sample.z * alpha - 1.0).norm() >= 0.5 {
            return Err(TreeError::LaurentCheckFailed);
        }
    }
    let value = roots[label];
    Ok(ExteriorBranch {
        base,
        value,
        label,
        a2_estimate: (value - target) * base * base,
    })
}

/// One edge of an embedded tree: node indices plus interior control points
/// shaping the arc as a Catmull-Rom cubic through them.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    pub ctrl: Vec<Complex64>,
}

/// Embedded tree of simple arcs: connected, acyclic, arcs disjoint except
/// at shared endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticTree {
    pub nodes: Vec<Complex64>,
    pub edges: Vec<TreeEdge>,
}

impl AnalyticTree {
    /// Straight segment between two points.
    pub fn segment(a: Complex64, b: Complex64) -> Self {
        AnalyticTree {
            nodes: vec![a, b],
            edges: vec![TreeEdge {
                a: 0,
                b: 1,
                ctrl: straight_ctrl(a, b),
            }],
        }
    }

    /// Star joining the center to every leaf by a straight arc.
    pub fn star(center: Complex64, leaves: &[Complex64]) -> Self {
        let mut nodes = vec![center];
        nodes.extend_from_slice(leaves);
        let edges = (0..leaves.len())
            .map(|i| TreeEdge {
                a: 0,
                b: i + 1,
                ctrl: straight_ctrl(center, leaves[i]),
            })
            .collect();
        AnalyticTree { nodes, edges }
    }

    pub fn scale(&self) -> f64 {
        self.nodes.iter().map(|n| n.norm()).fold(1.0, f64::max)
    }

    /// Dense polyline of an edge through its control points.
    pub fn edge_polyline(&self, e: usize, samples_per_span: usize) -> Vec<Complex64> {
        let edge = &self.edges[e];
        let mut through = vec![self.nodes[edge.a]];
        through.extend_from_slice(&edge.ctrl);
        through.push(self.nodes[edge.b]);
        catmull_rom(&through, samples_per_span)
    }

    pub fn total_arclength(&self) -> f64 {
        (0..self.edges.len())
            .map(|e| polyline_length(&self.edge_polyline(e, 16)))
            .sum()
    }

    /// Structural and embedding validation: tree shape, required nodes
    /// present, arcs simple and pairwise disjoint away from shared nodes.
    pub fn validate(&self, required: &[Complex64]) -> Result<(), TreeError> {
        let n = self.nodes.len();
        if n < 2 || self.edges.is_empty() {
            return Err(TreeError::NotATree("need at least one arc".into()));
        }
        if self.edges.len() != n - 1 {
            return Err(TreeError::NotATree(format!(
                "{} nodes need {} arcs, got {}",
                n,
                n - 1,
                self.edges.len()
            )));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            let mut root = i;
            while parent[root] != root {
                root = parent[root];
            }
            let mut walk = i;
            while parent[walk] != root {
                let next = parent[walk];
                parent[walk] = root;
                walk = next;
            }
            root
        }
        for edge in &self.edges {
            if edge.a >= n || edge.b >= n || edge.a == edge.b {
                return Err(TreeError::NotATree("bad edge endpoints".into()));
            }
            let (ra, rb) = (find(&mut parent, edge.a), find(&mut parent, edge.b));
            if ra == rb {
                return Err(TreeError::NotATree("cycle detected".into()));
            }
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        if (0..n).any(|i| find(&mut parent, i) != root) {
            return Err(TreeError::NotATree("not connected".into()));
        }

        let scale = self.scale();
        let ctol = tol::cluster_tol(scale);
        for &req in required {
            if !self.nodes.iter().any(|&p| (p - req).norm() <= ctol) {
                return Err(TreeError::MissingRequiredNode { z: req });
            }
        }

        // embedding: sampled arcs must stay apart except near shared nodes
        let polylines: Vec<Vec<Complex64>> =
            (0..self.edges.len()).map(|e| self.edge_polyline(e, 12)).collect();
        let exclusion = 0.02 * scale;
        let touch_tol = tol::EMBED_TOL * (1.0 + scale);
        for e1 in 0..polylines.len() {
            for e2 in e1..polylines.len() {
                let shared: Vec<Complex64> = if e1 == e2 {
                    vec![]
                } else {
                    let (ea, eb) = (&self.edges[e1], &self.edges[e2]);
                    [ea.a, ea.b]
                        .iter()
                        .filter(|i| **i == eb.a || **i == eb.b)
                        .map(|&i| self.nodes[i])
                        .collect()
                };
                let p1 = &polylines[e1];
                let p2 = &polylines[e2];
                for i in 0..p1.len() - 1 {
                    let j_start = if e1 == e2 { i + 2 } else { 0 };
                    for j in j_start..p2.len().saturating_sub(1) {
                        let (a1, b1) = (p1[i], p1[i + 1]);
                        let (a2, b2) = (p2[j], p2[j + 1]);
                        if e1 == e2 && i == 0 && j + 2 == p2.len() {
                            // a closed arc would share its endpoints; arcs here
                            // are open, so distinct ends may not meet either
                        }
                        let near_shared = shared.iter().any(|&s| {
                            dist_point_segment(s, a1, b1) < exclusion
                                && dist_point_segment(s, a2, b2) < exclusion
                        });
                        if near_shared {
                            continue;
                        }
                        if segment_distance(a1, b1, a2, b2) <= touch_tol {
                            return Err(TreeError::ArcsIntersect);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn straight_ctrl(a: Complex64, b: Complex64) -> Vec<Complex64> {
    vec![a + (b - a) / 3.0, a + (b - a) * (2.0 / 3.0)]
}

fn polyline_length(pts: &[Complex64]) -> f64 {
    pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Uniform Catmull-Rom polyline through the given points.
fn catmull_rom(through: &[Complex64], samples_per_span: usize) -> Vec<Complex64> {
    let m = through.len();
    if m == 2 {
        let n = samples_per_span.max(2);
        return (0..=n)
            .map(|i| through[0] + (through[1] - through[0]) * (i as f64 / n as f64))
            .collect();
    }
    let point = |idx: isize| -> Complex64 {
        if idx < 0 {
            2.0 * through[0] - through[1]
        } else if idx as usize >= m {
            2.0 * through[m - 1] - through[m - 2]
        } else {
            through[idx as usize]
        }
    };
    let mut out = Vec::with_capacity((m - 1) * samples_per_span + 1);
    out.push(through[0]);
    for span in 0..m - 1 {
        let p0 = point(span as isize - 1);
        let p1 = point(span as isize);
        let p2 = point(span as isize + 1);
        let p3 = point(span as isize + 2);
        let m1 = (p2 - p0) / 2.0;
        let m2 = (p3 - p1) / 2.0;
        for i in 1..=samples_per_span {
            let t = i as f64 / samples_per_span as f64;
            let t2 = t * t;
            let t3 = t2 * t;
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + t;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            out.push(p1 * h00 + m1 * h10 + p2 * h01 + m2 * h11);
        }
    }
    out
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

fn segment_distance(a1: Complex64, b1: Complex64, a2: Complex64, b2: Complex64) -> f64 {
    // crossing test first
    let d1 = b1 - a1;
    let d2 = b2 - a2;
    let denom = d1.re * d2.im - d1.im * d2.re;
    if denom.abs() > 1e-300 {
        let r = a2 - a1;
        let t = (r.re * d2.im - r.im * d2.re) / denom;
        let u = (r.re * d1.im - r.im * d1.re) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return 0.0;
        }
    }
    dist_point_segment(a1, a2, b2)
        .min(dist_point_segment(b1, a2, b2))
        .min(dist_point_segment(a2, a1, b1))
        .min(dist_point_segment(b2, a1, b1))
}

/// Arclength-parametrized edge geometry.
struct EdgeGeometry {
    pts: Vec<Complex64>,
    cum: Vec<f64>,
    length: f64,
}

impl EdgeGeometry {
    fn new(pts: Vec<Complex64>) -> Self {
        let mut cum = Vec::with_capacity(pts.len());
        let mut s = 0.0;
        cum.push(0.0);
        for w in pts.windows(2) {
            s += (w[1] - w[0]).norm();
            cum.push(s);
        }
        EdgeGeometry {
            pts,
            cum,
            length: s,
        }
    }

    fn seg_index(&self, s: f64) -> usize {
        let s = s.clamp(0.0, self.length);
        match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.pts.len() - 2),
            Err(i) => i - 1,
        }
    }

    fn point_at(&self, s: f64) -> Complex64 {
        let i = self.seg_index(s);
        let seg = self.cum[i + 1] - self.cum[i];
        let t = if seg > 0.0 {
            (s.clamp(0.0, self.length) - self.cum[i]) / seg
        } else {
            0.0
        };
        self.pts[i] + (self.pts[i + 1] - self.pts[i]) * t
    }

    fn tangent_at(&self, s: f64) -> Complex64 {
        let i = self.seg_index(s);
        let d = self.pts[i + 1] - self.pts[i];
        d / d.norm().max(1e-300)
    }
}

/// One density sample on an arc.
#[derive(Debug, Clone, Copy)]
pub struct TreeDensitySample {
    pub s: f64,
    pub z: Complex64,
    pub tangent: Complex64,
    /// Complex density per arclength.
    pub rho: Complex64,
}

/// Signed/complex branch-jump density of one arc, sampled at Gauss-Jacobi
/// nodes matching the arc's endpoint exponents.
#[derive(Debug, Clone)]
pub struct TreeDensityArc {
    pub edge: usize,
    pub length: f64,
    /// Density exponent at the start node (1/2 at a critical value, -1/2
    /// at the origin, 0 at a movable node).
    pub start_exponent: f64,
    pub end_exponent: f64,
    pub samples: Vec<TreeDensitySample>,
}

/// Branch-cut measure of an analytic tree; densities are complex until the
/// tree is the conjectured positive one.
#[derive(Debug, Clone)]
pub struct TreeMeasure {
    pub arcs: Vec<TreeDensityArc>,
    pub base_radius: f64,
}

impl TreeMeasure {
    fn arc_rule(arc: &TreeDensityArc) -> Result<QuadRule, TreeError> {
        Ok(QuadRule::gauss_jacobi(
            arc.samples.len(),
            arc.end_exponent,
            arc.start_exponent,
        )?)
    }

    /// Integrates a complex kernel against the tree measure.
    pub fn integrate<F: Fn(Complex64, Complex64) -> Complex64>(
        &self,
        f: F,
    ) -> Result<Complex64, TreeError> {
        let mut acc = Complex64::new(0.0, 0.0);
        for arc in &self.arcs {
            let rule = Self::arc_rule(arc)?;
            for (i, sample) in arc.samples.iter().enumerate() {
                let smooth = f(sample.z, sample.rho) / rule.weight_fn_at(i);
                acc += smooth * rule.weights()[i];
            }
        }
        Ok(acc)
    }

    pub fn cauchy_transform(&self, z: Complex64) -> Result<Complex64, TreeError> {
        let mut acc = Complex64::new(0.0, 0.0);
        for arc in &self.arcs {
            let rule = Self::arc_rule(arc)?;
            let mut arc_acc = Complex64::new(0.0, 0.0);
            for (i, sample) in arc.samples.iter().enumerate() {
                arc_acc += sample.rho / (z - sample.z) / rule.weight_fn_at(i)
                    * rule.weights()[i];
            }
            acc += arc_acc * (arc.length / 2.0);
        }
        Ok(acc)
    }
}

/// Mass, total variation, and positivity defect of a tree measure.
#[derive(Debug, Clone, Copy)]
pub struct TreeScore {
    pub mass: Complex64,
    pub total_variation: f64,
    pub positivity_defect: f64,
}

impl TreeScore {
    pub fn objective(&self) -> f64 {
        self.positivity_defect + (self.mass - Complex64::new(1.0, 0.0)).norm()
    }
}

/// Composite Gauss-Jacobi quadrature of the density data: mass (complex),
/// total variation, and the positivity defect (negative real part plus
/// imaginary magnitude).
pub fn score_tree(measure: &TreeMeasure) -> Result<TreeScore, TreeError> {
    let mut mass = Complex64::new(0.0, 0.0);
    let mut tv = 0.0;
    let mut defect = 0.0;
    for arc in &measure.arcs {
        let rule = TreeMeasure::arc_rule(arc)?;
        let mut arc_mass = Complex64::new(0.0, 0.0);
        let mut arc_tv = 0.0;
        let mut arc_defect = 0.0;
        for (i, sample) in arc.samples.iter().enumerate() {
            let w = rule.weights()[i] / rule.weight_fn_at(i);
            arc_mass += sample.rho * w;
            arc_tv += sample.rho.norm() * w;
            arc_defect += ((-sample.rho.re).max(0.0) + sample.rho.im.abs()) * w;
        }
        let half = arc.length / 2.0;
        mass += arc_mass * half;
        tv += arc_tv * half;
        defect += arc_defect * half;
    }
    Ok(TreeScore {
        mass,
        total_variation: tv,
        positivity_defect: defect,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct MeasureOptions {
    pub samples_per_arc: usize,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            samples_per_arc: 32,
        }
    }
}

struct SideTag {
    edge: usize,
    sample: usize,
    plus_side: bool,
}

struct WalkVertex {
    z: Complex64,
    tag: Option<SideTag>,
}

/// Node classification for quadrature exponents.
fn node_exponent(node: Complex64, sigma: &[Complex64], ctol: f64) -> f64 {
    if node.norm() <= ctol {
        return -0.5;
    }
    if sigma.iter().any(|&s| (node - s).norm() <= ctol) {
        return 0.5;
    }
    0.0
}

/// The branch-cut density of the exterior branch along every arc of the
/// tree. For each sample the two one-sided limits are identified by
/// continuing the exterior branch around the tree along a tube walk at
/// offset side_eps and matching the on-arc fiber roots to the continued
/// side values; the density is (i / 2 pi) (alpha_plus - alpha_minus) z'(s).
pub fn tree_measure(
    tree: &AnalyticTree,
    p_y: &Poly,
    opts: MeasureOptions,
) -> Result<TreeMeasure, TreeError> {
    let sigma = critical_values(p_y)?;
    let mut required = vec![Complex64::new(0.0, 0.0)];
    required.extend_from_slice(&sigma);
    tree.validate(&required)?;
    let q = BivariatePolynomial::from_fiber_equation(p_y)?;

    let geoms: Vec<EdgeGeometry> = (0..tree.edges.len())
        .map(|e| EdgeGeometry::new(tree.edge_polyline(e, 16)))
        .collect();
    let total_len: f64 = geoms.iter().map(|g| g.length).sum();
    let side_eps = tol::SIDE_EPS_FACTOR * total_len;

    let ctol = tol::cluster_tol(tree.scale());
    let exponents: Vec<(f64, f64)> = tree
        .edges
        .iter()
        .map(|e| {
            (
                node_exponent(tree.nodes[e.a], &sigma, ctol),
                node_exponent(tree.nodes[e.b], &sigma, ctol),
            )
        })
        .collect();

    // per-edge sample arclengths at the Jacobi nodes of the scoring rule
    let mut sample_s: Vec<Vec<f64>> = Vec::with_capacity(tree.edges.len());
    for (e, geom) in geoms.iter().enumerate() {
        let (alpha_start, beta_end) = exponents[e];
        let rule = QuadRule::gauss_jacobi(opts.samples_per_arc, beta_end, alpha_start)?;
        let wall_margin = 3f64.sqrt() * side_eps;
        let ss: Vec<f64> = rule
            .nodes()
            .iter()
            .map(|&t| geom.length * (t + 1.0) / 2.0)
            .collect();
        if ss
            .iter()
            .any(|&s| s <= wall_margin || s >= geom.length - wall_margin)
        {
            return Err(TreeError::SideCollision);
        }
        sample_s.push(ss);
    }

    let walk = build_walk(tree, &geoms, &sample_s, side_eps)?;

    // clearance of the walk from the tree itself
    for v in &walk {
        let mut dist = f64::INFINITY;
        for geom in &geoms {
            for w in geom.pts.windows(2) {
                dist = dist.min(dist_point_segment(v.z, w[0], w[1]));
            }
        }
        if dist < 0.45 * side_eps {
            return Err(TreeError::ContinuationBlocked);
        }
    }

    // exterior entry: the rightmost walk vertex is strictly right of the
    // tree, so the straight segment from the real base cannot cross it
    let start = walk
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.z.re.total_cmp(&b.1.z.re))
        .map(|(i, _)| i)
        .unwrap();
    let sigma_radius = sigma.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let r = 2.0 * sigma_radius.max(tree.scale()) + 1.0;
    let exterior = exterior_branch(p_y, r)?;

    let mut path: Vec<Complex64> = Vec::with_capacity(walk.len() + 3);
    path.push(exterior.base);
    for idx in 0..walk.len() {
        path.push(walk[(start + idx) % walk.len()].z);
    }
    path.push(walk[start].z);

    let start_roots = solve_fiber(&q, exterior.base)?;
    let track = continue_branches_unchecked(&q, &path, start_roots)?;
    if !track.end_permutation.is_identity() {
        // the loop encloses every branch point, so a non-identity
        // permutation means the walk crossed the tree
        return Err(TreeError::ContinuationBlocked);
    }

    // collect the continued exterior value at every tagged walk vertex
    let mut side_values: Vec<Vec<(Option<Complex64>, Option<Complex64>)>> = tree
        .edges
        .iter()
        .enumerate()
        .map(|(e, _)| vec![(None, None); sample_s[e].len()])
        .collect();
    let mut vptr = 0usize;
    for sample in &track.samples {
        while vptr < path.len() && path[vptr] == sample.z {
            if vptr >= 1 && vptr <= walk.len() {
                let vertex = &walk[(start + (vptr - 1)) % walk.len()];
                if let Some(tag) = &vertex.tag {
                    let slot = &mut side_values[tag.edge][tag.sample];
                    let value = sample.roots[exterior.label];
                    if tag.plus_side {
                        slot.0 = Some(value);
                    } else {
                        slot.1 = Some(value);
                    }
                }
            }
            vptr += 1;
        }
    }
    if vptr != path.len() {
        return Err(TreeError::ContinuationBlocked);
    }

    // exact one-sided limits: the fiber on the arc contains both limits;
    // the continued side values only select which root is which
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut arcs = Vec::with_capacity(tree.edges.len());
    for (e, geom) in geoms.iter().enumerate() {
        let (alpha_start, beta_end) = exponents[e];
        let mut samples = Vec::with_capacity(sample_s[e].len());
        for (si, &s) in sample_s[e].iter().enumerate() {
            let (plus, minus) = side_values[e][si];
            let (plus, minus) = match (plus, minus) {
                (Some(p), Some(m)) => (p, m),
                _ => return Err(TreeError::ContinuationBlocked),
            };
            let z = geom.point_at(s);
            let tangent = geom.tangent_at(s);
            let fiber = solve_fiber(&q, z)?;
            let alpha_plus = nearest_root(&fiber, plus)?;
            let alpha_minus = nearest_root(&fiber, minus)?;
            let rho = Complex64::new(0.0, 1.0) / two_pi * (alpha_plus - alpha_minus) * tangent;
            samples.push(TreeDensitySample {
                s,
                z,
                tangent,
                rho,
            });
        }
        arcs.push(TreeDensityArc {
            edge: e,
            length: geom.length,
            start_exponent: alpha_start,
            end_exponent: beta_end,
            samples,
        });
    }
    Ok(TreeMeasure {
        arcs,
        base_radius: r,
    })
}

fn nearest_root(fiber: &[Complex64], value: Complex64) -> Result<Complex64, TreeError> {
    let mut order: Vec<usize> = (0..fiber.len()).collect();
    order.sort_by(|&i, &j| {
        (fiber[i] - value)
            .norm()
            .total_cmp(&(fiber[j] - value).norm())
    });
    let best = (fiber[order[0]] - value).norm();
    if fiber.len() >= 2 {
        let second = (fiber[order[1]] - value).norm();
        if best >= 0.4 * second {
            return Err(TreeError::SideCollision);
        }
    }
    Ok(fiber[order[0]])
}

/// Euler-tour tube walk: each directed edge contributes its left-offset
/// wall at distance d, node corners join on a radius-2d circle following
/// the clockwise-next-dart face rule.
fn build_walk(
    tree: &AnalyticTree,
    geoms: &[EdgeGeometry],
    sample_s: &[Vec<f64>],
    d: f64,
) -> Result<Vec<WalkVertex>, TreeError> {
    let n_edges = tree.edges.len();
    let dart_tail = |dart: (usize, bool)| -> usize {
        let e = &tree.edges[dart.0];
        if dart.1 {
            e.a
        } else {
            e.b
        }
    };
    let dart_head = |dart: (usize, bool)| -> usize {
        let e = &tree.edges[dart.0];
        if dart.1 {
            e.b
        } else {
            e.a
        }
    };
    let initial_dir = |dart: (usize, bool)| -> Complex64 {
        let g = &geoms[dart.0];
        if dart.1 {
            g.tangent_at(0.0)
        } else {
            -g.tangent_at(g.length)
        }
    };
    let final_dir = |dart: (usize, bool)| -> Complex64 {
        let g = &geoms[dart.0];
        if dart.1 {
            g.tangent_at(g.length)
        } else {
            -g.tangent_at(0.0)
        }
    };

    let next_dart = |incoming: (usize, bool)| -> (usize, bool) {
        let v = dart_head(incoming);
        let delta = (-final_dir(incoming)).arg();
        let mut best: Option<((usize, bool), f64)> = None;
        for e in 0..n_edges {
            for &fwd in &[true, false] {
                let cand = (e, fwd);
                if dart_tail(cand) != v {
                    continue;
                }
                let omega = initial_dir(cand).arg();
                let sweep =
                    (delta - omega - std::f64::consts::FRAC_PI_3).rem_euclid(2.0 * std::f64::consts::PI);
                if best.is_none_or(|(_, s)| sweep < s) {
                    best = Some((cand, sweep));
                }
            }
        }
        best.unwrap().0
    };

    // wall polyline of one dart: left offsets at distance d over the
    // truncated span, with the side-sample positions tagged
    let wall_margin = 3f64.sqrt() * d;
    let wall = |dart: (usize, bool)| -> Vec<WalkVertex> {
        let (e, fwd) = dart;
        let g = &geoms[e];
        let mut positions: Vec<(f64, Option<SideTag>)> = vec![(wall_margin, None)];
        for &c in &g.cum {
            if c > wall_margin && c < g.length - wall_margin {
                positions.push((c, None));
            }
        }
        for (si, &s) in sample_s[e].iter().enumerate() {
            positions.push((
                s,
                Some(SideTag {
                    edge: e,
                    sample: si,
                    plus_side: fwd,
                }),
            ));
        }
        positions.push((g.length - wall_margin, None));
        positions.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = Vec::with_capacity(positions.len());
        for (s, tag) in positions {
            // dart-local arclength: forward darts run with the edge
            let (z, tangent) = (g.point_at(s), g.tangent_at(s));
            let left = if fwd {
                Complex64::new(0.0, 1.0) * tangent
            } else {
                -Complex64::new(0.0, 1.0) * tangent
            };
            out.push(WalkVertex {
                z: z + left * d,
                tag,
            });
        }
        if !fwd {
            out.reverse();
        }
        out
    };

    let start_dart = (0usize, true);
    let mut vertices: Vec<WalkVertex> = Vec::new();
    let mut dart = start_dart;
    for _ in 0..2 * n_edges {
        vertices.extend(wall(dart));
        let next = next_dart(dart);
        // corner join at the head node from the arrival wall to the
        // departure wall, clockwise on the radius-2d circle
        let v = tree.nodes[dart_head(dart)];
        let theta1 = (-final_dir(dart)).arg() - std::f64::consts::FRAC_PI_6;
        let theta2 = initial_dir(next).arg() + std::f64::consts::FRAC_PI_6;
        let sweep = (theta1 - theta2).rem_euclid(2.0 * std::f64::consts::PI);
        let steps = (sweep / (std::f64::consts::PI / 16.0)).ceil().max(1.0) as usize;
        for m in 0..=steps {
            let theta = theta1 - sweep * m as f64 / steps as f64;
            vertices.push(WalkVertex {
                z: v + Complex64::from_polar(2.0 * d, theta),
                tag: None,
            });
        }
        dart = next;
    }
    if dart != start_dart {
        return Err(TreeError::ContinuationBlocked);
    }
    // drop consecutive duplicates
    let mut walk: Vec<WalkVertex> = Vec::with_capacity(vertices.len());
    for v in vertices {
        if walk
            .last()
            .is_none_or(|last: &WalkVertex| (last.z - v.z).norm() > 1e-14)
        {
            walk.push(v);
        }
    }
    Ok(walk)
}

/// One row of the annealing trace. The `objective` column reports the
/// optimizer's best-so-far objective; mass/tv/defect describe the
/// iteration's candidate.
#[derive(Debug, Clone, Copy)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub mass: Complex64,
    pub tv: f64,
    pub defect: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub seed: u64,
    pub iterations: usize,
    pub proposal_scale: f64,
    pub samples_per_arc: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            seed: 7,
            iterations: 2000,
            proposal_scale: 0.1,
            samples_per_arc: 32,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_tree: AnalyticTree,
    pub best_score: TreeScore,
    pub best_objective: f64,
    pub initial_objective: f64,
    pub trace: Vec<TraceRecord>,
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_spanning_tree<R: Rng>(
    rng: &mut R,
    nodes: &[Complex64],
) -> Vec<TreeEdge> {
    let n = nodes.len();
    if n == 2 {
        return vec![TreeEdge {
            a: 0,
            b: 1,
            ctrl: straight_ctrl(nodes[0], nodes[1]),
        }];
    }
    // decode a random Pruefer sequence
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut used = vec![false; n];
    for &s in &seq {
        let leaf = (0..n).find(|&i| degree[i] == 1 && !used[i]).unwrap();
        edges.push(TreeEdge {
            a: leaf,
            b: s,
            ctrl: straight_ctrl(nodes[leaf], nodes[s]),
        });
        used[leaf] = true;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !used[i] && degree[i] == 1).collect();
    edges.push(TreeEdge {
        a: rest[0],
        b: rest[1],
        ctrl: straight_ctrl(nodes[rest[0]], nodes[rest[1]]),
    });
    edges
}

/// Simulated-annealing search over embedded trees containing sigma and the
/// origin, optionally with movable extra nodes, minimizing
/// positivity_defect + |mass - 1|. Deterministic for a fixed seed.
pub fn search_tree(p_y: &Poly, config: SearchConfig) -> Result<SearchResult, TreeError> {
    let k = normal_form_degree(p_y)?;
    let sigma = critical_values(p_y)?;
    let origin = Complex64::new(0.0, 0.0);
    let initial = AnalyticTree::star(origin, &sigma);
    let opts = MeasureOptions {
        samples_per_arc: config.samples_per_arc,
    };
    let score_of = |tree: &AnalyticTree| -> Option<TreeScore> {
        tree_measure(tree, p_y, opts)
            .and_then(|m| score_tree(&m))
            .ok()
    };
    let initial_score = score_of(&initial).ok_or(TreeError::ContinuationBlocked)?;
    let initial_objective = initial_score.objective();

    let fixed_count = 1 + sigma.len();
    let max_steiner = k.saturating_sub(2);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut current = initial.clone();
    let mut current_score = initial_score;
    let mut best = initial.clone();
    let mut best_score = initial_score;
    let mut trace = Vec::with_capacity(config.iterations);

    for iteration in 0..config.iterations {
        let temperature = tol::ANNEAL_T0 * tol::ANNEAL_DECAY.powi(iteration as i32);
        let amplitude = config.proposal_scale * current.scale() * (0.05 + temperature);
        let mut candidate = current.clone();
        let steiner_count = candidate.nodes.len() - fixed_count;
        let move_kind = rng.gen_range(0..10u32);
        match move_kind {
            // rewire topology
            8 if candidate.nodes.len() > 2 => {
                candidate.edges = random_spanning_tree(&mut rng, &candidate.nodes);
            }
            // add or remove a movable node
            9 if max_steiner > 0 => {
                if steiner_count < max_steiner && rng.gen_bool(0.5) {
                    let centroid = candidate.nodes.iter().sum::<Complex64>()
                        / candidate.nodes.len() as f64;
                    let jitter =
                        Complex64::new(gaussian(&mut rng), gaussian(&mut rng)) * amplitude;
                    candidate.nodes.push(centroid + jitter);
                    candidate.edges = random_spanning_tree(&mut rng, &candidate.nodes);
                } else if steiner_count > 0 {
                    candidate.nodes.pop();
                    candidate.edges = random_spanning_tree(&mut rng, &candidate.nodes);
                }
            }
            // perturb a movable node
            6 | 7 if steiner_count > 0 => {
                let idx = fixed_count + rng.gen_range(0..steiner_count);
                candidate.nodes[idx] +=
                    Complex64::new(gaussian(&mut rng), gaussian(&mut rng)) * amplitude;
                // refresh the straight control points of incident edges
                for e in candidate.edges.iter_mut() {
                    if e.a == idx || e.b == idx {
                        e.ctrl = straight_ctrl(candidate.nodes[e.a], candidate.nodes[e.b]);
                    }
                }
            }
            // perturb a control point
            _ => {
                let e = rng.gen_range(0..candidate.edges.len());
                if candidate.edges[e].ctrl.is_empty() {
                    let (a, b) = (candidate.edges[e].a, candidate.edges[e].b);
                    candidate.edges[e].ctrl =
                        straight_ctrl(candidate.nodes[a], candidate.nodes[b]);
                }
                let ci = rng.gen_range(0..candidate.edges[e].ctrl.len());
                candidate.edges[e].ctrl[ci] +=
                    Complex64::new(gaussian(&mut rng), gaussian(&mut rng)) * amplitude;
            }
        }

        let cand_score = score_of(&candidate);
        let mut accepted = false;
        let (mass, tv, defect) = match cand_score {
            Some(score) => {
                let delta = score.objective() - current_score.objective();
                if delta <= 0.0
                    || rng.gen::<f64>() < (-delta / temperature.max(1e-12)).exp()
                {
                    accepted = true;
                    current = candidate;
                    current_score = score;
                    if score.objective() < best_score.objective() {
                        best = current.clone();
                        best_score = score;
                    }
                }
                (score.mass, score.total_variation, score.positivity_defect)
            }
            None => (Complex64::new(f64::NAN, f64::NAN), f64::NAN, f64::NAN),
        };
        trace.push(TraceRecord {
            iteration,
            objective: best_score.objective(),
            mass,
            tv,
            defect,
            accepted,
        });
    }

    Ok(SearchResult {
        best_tree: best,
        best_score,
        best_objective: best_score.objective(),
        initial_objective,
        trace,
    })
}

/// Directed Hausdorff-style distance between the sampled tree arcs and a
/// reference polyline, maximized over both directions.
pub fn hausdorff_to_polyline(tree: &AnalyticTree, reference: &[Complex64]) -> f64 {
    let mut tree_pts: Vec<Complex64> = Vec::new();
    for e in 0..tree.edges.len() {
        tree_pts.extend(tree.edge_polyline(e, 32));
    }
    let d_forward = tree_pts
        .iter()
        .map(|&p| {
            reference
                .windows(2)
                .map(|w| dist_point_segment(p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let d_back = reference
        .iter()
        .map(|&p| {
            let mut dist = f64::INFINITY;
            for e in 0..tree.edges.len() {
                let poly = tree.edge_polyline(e, 32);
                for w in poly.windows(2) {
                    dist = dist.min(dist_point_segment(p, w[0], w[1]));
                }
            }
            dist
        })
        .fold(0.0, f64::max);
    d_forward.max(d_back)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quadratic() -> Poly {
        // y^2 + y
        Poly::from_real(&[0.0, 1.0, 1.0])
    }

    fn cubic() -> Poly {
        // y + y^3
        Poly::from_real(&[0.0, 1.0, 0.0, 1.0])
    }

    #[test]
    fn critical_values_quadratic() {
        let sigma = critical_values(&quadratic()).unwrap();
        assert_eq!(sigma.len(), 1);
        assert_abs_diff_eq!(sigma[0].re, -4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sigma[0].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn critical_values_cubic_derived() {
        let sigma = critical_values(&cubic()).unwrap();
        let expect = 3.0 * 3.0_f64.sqrt() / 2.0;
        assert_eq!(sigma.len(), 2);
        let mut ims: Vec<f64> = sigma.iter().map(|s| s.im).collect();
        ims.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ims[0], -expect, epsilon = 1e-10);
        assert_abs_diff_eq!(ims[1], expect, epsilon = 1e-10);
        for s in &sigma {
            assert_abs_diff_eq!(s.re, 0.0, epsilon = 1e-10);
        }
        // membership residual of the defining critical points
        let dp = cubic().derivative();
        for alpha in dp.roots().unwrap() {
            assert!(dp.eval(alpha).norm() < 1e-10);
        }
    }

    #[test]
    fn critical_values_generic_count() {
        let p = Poly::from_real(&[0.0, 1.0, 1.0, 1.0]);
        let sigma = critical_values(&p).unwrap();
        assert_eq!(sigma.len(), 2);
        for s in &sigma {
            assert!(s.norm() > 1e-6);
        }
    }

    #[test]
    fn normal_form_rejected() {
        assert!(matches!(
            critical_values(&Poly::from_real(&[1.0, 1.0, 1.0])),
            Err(TreeError::NotNormalForm)
        ));
        assert!(matches!(
            critical_values(&Poly::from_real(&[0.0, 2.0, 1.0])),
            Err(TreeError::NotNormalForm)
        ));
    }

    #[test]
    fn exterior_branch_quadratic() {
        let ext = exterior_branch(&quadratic(), 100.0).unwrap();
        // alpha*(100) = (-1 + sqrt(1 + 4/100)) / 2
        let expect = (-1.0 + (1.0_f64 + 0.04).sqrt()) / 2.0;
        assert_abs_diff_eq!(ext.value.re, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(ext.value.im, 0.0, epsilon = 1e-12);
        assert!((ext.a2_estimate - c(-1.0, 0.0)).norm() < 0.05);
    }

    #[test]
    fn exterior_branch_linear_edge_case() {
        let p = Poly::from_real(&[0.0, 1.0]);
        let ext = exterior_branch(&p, 50.0).unwrap();
        assert_abs_diff_eq!(ext.value.re, 1.0 / 50.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ext.a2_estimate.norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn exterior_branch_cubic() {
        let ext = exterior_branch(&cubic(), 50.0).unwrap();
        assert!((ext.value - c(0.02, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn tree_validation_rejects_disconnected_and_crossing() {
        let sigma = critical_values(&quadratic()).unwrap();
        let mut required = vec![c(0.0, 0.0)];
        required.extend_from_slice(&sigma);

        // disconnected stub
        let bad = AnalyticTree {
            nodes: vec![c(-4.0, 0.0), c(0.0, 0.0), c(2.0, 2.0), c(3.0, 2.0)],
            edges: vec![
                TreeEdge {
                    a: 0,
                    b: 1,
                    ctrl: vec![],
                },
                TreeEdge {
                    a: 2,
                    b: 3,
                    ctrl: vec![],
                },
            ],
        };
        assert!(matches!(
            bad.validate(&required),
            Err(TreeError::NotATree(_))
        ));

        // missing required node
        let missing = AnalyticTree::segment(c(-3.0, 0.0), c(0.0, 0.0));
        assert!(matches!(
            missing.validate(&required),
            Err(TreeError::MissingRequiredNode { .. })
        ));

        // crossing arcs
        let crossing = AnalyticTree {
            nodes: vec![c(0.0, 0.0), c(-4.0, 0.0), c(-2.0, 1.0), c(-2.0, -1.0)],
            edges: vec![
                TreeEdge {
                    a: 0,
                    b: 1,
                    ctrl: vec![],
                },
                TreeEdge {
                    a: 2,
                    b: 3,
                    ctrl: vec![],
                },
            ],
        };
        // make it structurally a tree first: connect node 2 to node 0
        let crossing = AnalyticTree {
            nodes: crossing.nodes.clone(),
            edges: vec![
                TreeEdge {
                    a: 0,
                    b: 1,
                    ctrl: vec![],
                },
                TreeEdge {
                    a: 0,
                    b: 2,
                    ctrl: vec![],
                },
                TreeEdge {
                    a: 2,
                    b: 3,
                    ctrl: vec![c(-2.0, 0.5), c(-2.0, -0.5)],
                },
            ],
        };
        assert!(matches!(
            crossing.validate(&required),
            Err(TreeError::ArcsIntersect)
        ));
    }

    #[test]
    fn worked_segment_density_matches_closed_form() {
        let tree = AnalyticTree::segment(c(0.0, 0.0), c(-4.0, 0.0));
        let measure = tree_measure(
            &tree,
            &quadratic(),
            MeasureOptions {
                samples_per_arc: 50,
            },
        )
        .unwrap();
        assert_eq!(measure.arcs.len(), 1);
        let arc = &measure.arcs[0];
        for sample in &arc.samples {
            let x = sample.z.re;
            let expect = (4.0 + x).sqrt() / (2.0 * std::f64::consts::PI * (-x).sqrt());
            assert!(
                (sample.rho.re - expect).abs() < 1e-6,
                "density mismatch at x = {x}: {} vs {expect}",
                sample.rho.re
            );
            assert!(sample.rho.im.abs() < 1e-9);
        }
    }

    #[test]
    fn worked_segment_score() {
        let tree = AnalyticTree::segment(c(-4.0, 0.0), c(0.0, 0.0));
        let measure = tree_measure(&tree, &quadratic(), MeasureOptions::default()).unwrap();
        let score = score_tree(&measure).unwrap();
        assert_abs_diff_eq!(score.mass.re, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(score.mass.im, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(score.total_variation, 1.0, epsilon = 1e-9);
        assert!(score.positivity_defect < 1e-9);
    }

    #[test]
    fn bent_tree_has_positive_defect() {
        let mut tree = AnalyticTree::segment(c(-4.0, 0.0), c(0.0, 0.0));
        tree.edges[0].ctrl = vec![c(-2.0, 1.0)];
        let measure = tree_measure(&tree, &quadratic(), MeasureOptions::default()).unwrap();
        let score = score_tree(&measure).unwrap();
        assert!(
            score.positivity_defect > 0.1,
            "defect {} not positive enough",
            score.positivity_defect
        );
        // total variation still at least the enclosed mass
        assert!(score.total_variation >= 1.0 - 1e-6);
        assert!(score.total_variation >= score.mass.norm() - 1e-6);
    }

    #[test]
    fn tree_transform_matches_exterior_branch() {
        let tree = AnalyticTree::segment(c(-4.0, 0.0), c(0.0, 0.0));
        let measure = tree_measure(
            &tree,
            &quadratic(),
            MeasureOptions {
                samples_per_arc: 48,
            },
        )
        .unwrap();
        let r = measure.base_radius;
        for m in 0..8 {
            let theta = 2.0 * std::f64::consts::PI * m as f64 / 8.0;
            let z = Complex64::from_polar(r, theta);
            let w = 1.0 + 4.0 / z;
            let alpha = (-1.0 + w.sqrt()) / 2.0;
            let transform = measure.cauchy_transform(z).unwrap();
            assert!(
                (transform - alpha).norm() < 1e-6,
                "transform mismatch at {z}: {transform} vs {alpha}"
            );
        }
    }

    #[test]
    fn side_convention_flip_changes_sign_not_magnitude() {
        // reversing the arc direction flips both tangent and normal; the
        // density and mass are invariant
        let t1 = AnalyticTree::segment(c(-4.0, 0.0), c(0.0, 0.0));
        let t2 = AnalyticTree::segment(c(0.0, 0.0), c(-4.0, 0.0));
        let m1 = tree_measure(&t1, &quadratic(), MeasureOptions::default()).unwrap();
        let m2 = tree_measure(&t2, &quadratic(), MeasureOptions::default()).unwrap();
        let s1 = score_tree(&m1).unwrap();
        let s2 = score_tree(&m2).unwrap();
        assert_abs_diff_eq!(s1.mass.re, s2.mass.re, epsilon = 1e-9);
        assert_abs_diff_eq!(s1.mass.norm(), s2.mass.norm(), epsilon = 1e-9);
    }

    #[test]
    fn search_zero_iterations_returns_initial_star() {
        let result = search_tree(
            &quadratic(),
            SearchConfig {
                iterations: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(result.best_tree.nodes.len(), 2);
        assert!(result.best_objective < 1e-6);
        assert_eq!(result.trace.len(), 0);
        assert_abs_diff_eq!(
            result.best_objective,
            result.initial_objective,
            epsilon = 1e-15
        );
    }

    #[test]
    fn search_quadratic_stays_near_segment() {
        let result = search_tree(
            &quadratic(),
            SearchConfig {
                seed: 7,
                iterations: 120,
                proposal_scale: 0.1,
                samples_per_arc: 24,
            },
        )
        .unwrap();
        let reference = vec![c(-4.0, 0.0), c(0.0, 0.0)];
        assert!(hausdorff_to_polyline(&result.best_tree, &reference) < 1e-2);
        assert!(result.best_objective < 1e-3);
        // best-so-far column is monotone nonincreasing
        for w in result.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-15);
        }
    }

    #[test]
    fn search_cubic_completes_and_improves() {
        let result = search_tree(
            &cubic(),
            SearchConfig {
                seed: 3,
                iterations: 60,
                proposal_scale: 0.08,
                samples_per_arc: 24,
            },
        )
        .unwrap();
        assert!(result.best_objective <= result.initial_objective + 1e-12);
        for w in result.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-15);
        }
    }
}
