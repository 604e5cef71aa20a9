//! Construction, enumeration, and verification of subharmonic
//! configurations: upper envelopes of harmonic tuples, collinear
//! half-plane assemblies, and numerical verifiers for subharmonicity,
//! forward-star structure, and Lipschitz interfaces.

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{ConfigurationField, Grid, RegionMask};
use crate::harmonic::{dot, HarmonicError, HarmonicTuple};
use crate::tol;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("index set must not be empty")]
    EmptyIndexSet,
    #[error("grid extends outside the tuple's working disk")]
    GridOutsideDisk,
    #[error("gradients at the center are not collinear with distinct projections")]
    NotCollinear,
    #[error("configuration sequences do not match the tuple size")]
    SequenceMismatch,
    #[error("region boundary is not a graph over the grid rows")]
    NotAGraph,
}

/// Convex-position status of one gradient among the k gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Extreme,
    Interior,
    OnEdge,
}

/// Output of [`extreme_point_profile`].
#[derive(Debug, Clone)]
pub struct ExtremeProfile {
    pub statuses: Vec<PointStatus>,
    pub degenerate_hull: bool,
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

fn dist_to_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (dot(p - a, ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Strict convex hull by monotone chain; collinear boundary points are not
/// hull vertices.
fn convex_hull(points: &[Complex64], area_tol: f64) -> Vec<Complex64> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup_by(|a, b| (*a - *b).norm() == 0.0);
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Complex64> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= area_tol
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    // an all-collinear input collapses to the two extreme points
    if hull.len() < 2 {
        let first = pts[0];
        let far = pts
            .iter()
            .copied()
            .max_by(|a, b| (a - first).norm().total_cmp(&(b - first).norm()))
            .unwrap();
        return vec![first, far];
    }
    hull
}

/// Classifies each gradient value as a hull vertex, a point on an open
/// hull edge, or an interior point.
pub fn extreme_point_profile(gradients: &[Complex64]) -> ExtremeProfile {
    let k = gradients.len();
    let mut diam = 0.0_f64;
    for i in 0..k {
        for j in i + 1..k {
            diam = diam.max((gradients[i] - gradients[j]).norm());
        }
    }
    if k == 0 {
        return ExtremeProfile {
            statuses: vec![],
            degenerate_hull: true,
        };
    }
    if diam <= tol::HULL_TOL * (1.0 + gradients[0].norm()) {
        return ExtremeProfile {
            statuses: vec![PointStatus::OnEdge; k],
            degenerate_hull: true,
        };
    }
    let point_tol = tol::HULL_TOL * diam;
    let hull = convex_hull(gradients, point_tol * diam);
    let statuses = gradients
        .iter()
        .map(|&g| {
            if hull.iter().any(|&v| (g - v).norm() <= point_tol) {
                return PointStatus::Extreme;
            }
            let on_edge = (0..hull.len()).any(|idx| {
                let a = hull[idx];
                let b = hull[(idx + 1) % hull.len()];
                dist_to_segment(g, a, b) <= point_tol
            });
            if on_edge {
                PointStatus::OnEdge
            } else {
                PointStatus::Interior
            }
        })
        .collect();
    ExtremeProfile {
        statuses,
        degenerate_hull: false,
    }
}

fn check_grid_in_disk(tuple: &HarmonicTuple, grid: &Grid) -> Result<(), ConfigError> {
    let corners = [
        grid.point(0, 0),
        grid.point(grid.nx - 1, 0),
        grid.point(0, grid.ny - 1),
        grid.point(grid.nx - 1, grid.ny - 1),
    ];
    if corners.iter().all(|&z| tuple.disk().contains(z)) {
        Ok(())
    } else {
        Err(ConfigError::GridOutsideDisk)
    }
}

/// V = max over the index set of H_nu, with the active index recorded per
/// node; ties go to the smallest index.
pub fn max_configuration(
    tuple: &HarmonicTuple,
    index_set: &[usize],
    grid: Grid,
) -> Result<ConfigurationField, ConfigError> {
    if index_set.is_empty() {
        return Err(ConfigError::EmptyIndexSet);
    }
    for &nu in index_set {
        if nu >= tuple.branch_count() {
            return Err(ConfigError::IndexOutOfRange(nu));
        }
    }
    check_grid_in_disk(tuple, &grid)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut active = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let all = tuple.values_at(grid.point(i, j))?;
            let mut best = index_set[0];
            for &nu in index_set {
                if all[nu] > all[best] {
                    best = nu;
                }
            }
            // smallest index wins exact ties
            for &nu in index_set {
                if nu < best && all[nu] == all[best] {
                    best = nu;
                }
            }
            values.push(all[best]);
            active.push(best);
        }
    }
    Ok(ConfigurationField {
        grid,
        values,
        active,
    })
}

/// A pair of strictly increasing index sequences from 1 to k, the upper
/// and lower half-plane selections of a collinear configuration.
/// Entries are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollinearConfiguration {
    pub upper: Vec<usize>,
    pub lower: Vec<usize>,
}

impl CollinearConfiguration {
    pub fn contains_index(&self, m: usize) -> bool {
        self.upper.contains(&m) || self.lower.contains(&m)
    }

    pub fn format_pair(&self) -> String {
        let fmt = |seq: &[usize]| {
            seq.iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        format!("{}|{}", fmt(&self.upper), fmt(&self.lower))
    }
}

fn half_sequences(k: usize) -> Vec<Vec<usize>> {
    let middles: Vec<usize> = (2..k).collect();
    let mut halves = Vec::with_capacity(1 << middles.len());
    for mask in 0..(1_usize << middles.len()) {
        let mut seq = vec![1];
        for (bit, &m) in middles.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                seq.push(m);
            }
        }
        seq.push(k);
        halves.push(seq);
    }
    halves.sort();
    halves
}

/// All 4^(k-2) pairs of strictly increasing sequences 1 = j_1 < ... < j_m = k,
/// in lexicographic order.
pub fn enumerate_collinear_configurations(k: usize) -> Vec<CollinearConfiguration> {
    assert!(k >= 2, "collinear configurations need k >= 2");
    let halves = half_sequences(k);
    let mut out = Vec::with_capacity(halves.len() * halves.len());
    for upper in &halves {
        for lower in &halves {
            out.push(CollinearConfiguration {
                upper: upper.clone(),
                lower: lower.clone(),
            });
        }
    }
    out
}

/// The collinear normal form of a tuple at its base point: the unit
/// direction of the gradient line and the tuple indices sorted by their
/// projection along it.
pub struct CollinearFrame {
    pub direction: Complex64,
    pub sorted_indices: Vec<usize>,
}

pub fn collinear_frame(tuple: &HarmonicTuple) -> Result<CollinearFrame, ConfigError> {
    let center = tuple.base();
    let grads = tuple.gradients_at(center)?;
    let k = grads.len();
    let mut best = (0, 0, 0.0_f64);
    for i in 0..k {
        for j in i + 1..k {
            let d = (grads[i] - grads[j]).norm();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let span = best.2;
    if span <= tol::COLLINEAR_TOL {
        return Err(ConfigError::NotCollinear);
    }
    let mut u = (grads[best.1] - grads[best.0]) / span;
    // canonical orientation: lexicographically positive
    if u.re < -1e-12 || (u.re.abs() <= 1e-12 && u.im < 0.0) {
        u = -u;
    }
    let perp = Complex64::new(0.0, 1.0) * u;
    for &g in &grads {
        if dot(g - grads[best.0], perp).abs() > tol::COLLINEAR_TOL * (1.0 + span) {
            return Err(ConfigError::NotCollinear);
        }
    }
    let proj: Vec<f64> = grads.iter().map(|&g| dot(g, u)).collect();
    let mut sorted_indices: Vec<usize> = (0..k).collect();
    sorted_indices.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]));
    for w in sorted_indices.windows(2) {
        if (proj[w[1]] - proj[w[0]]).abs() <= tol::COLLINEAR_TOL * (1.0 + span) {
            // coinciding projections have no collinear normal form
            return Err(ConfigError::NotCollinear);
        }
    }
    Ok(CollinearFrame {
        direction: u,
        sorted_indices,
    })
}

/// Assembles the piecewise configuration of a collinear tuple: the upper
/// half (positive side of the splitting line through the base, measured
/// along the gradient direction) takes the maximum over `cfg.upper`, the
/// lower half over `cfg.lower`. Sequence entries are 1-based positions in
/// the projection-sorted branch order. Constants are renormalized so all
/// H_nu agree at the center.
pub fn assemble_configuration(
    tuple: &HarmonicTuple,
    cfg: &CollinearConfiguration,
    grid: Grid,
) -> Result<ConfigurationField, ConfigError> {
    let k = tuple.branch_count();
    let valid = |seq: &[usize]| {
        !seq.is_empty()
            && seq.first() == Some(&1)
            && seq.last() == Some(&k)
            && seq.windows(2).all(|w| w[0] < w[1])
            && seq.iter().all(|&i| i >= 1 && i <= k)
    };
    if !valid(&cfg.upper) || !valid(&cfg.lower) {
        return Err(ConfigError::SequenceMismatch);
    }
    check_grid_in_disk(tuple, &grid)?;
    let frame = collinear_frame(tuple)?;
    let center = tuple.base();
    let center_values = tuple.values_at(center)?;
    let to_indices = |seq: &[usize]| -> Vec<usize> {
        seq.iter().map(|&pos| frame.sorted_indices[pos - 1]).collect()
    };
    let upper_set = to_indices(&cfg.upper);
    let lower_set = to_indices(&cfg.lower);

    let mut values = Vec::with_capacity(grid.len());
    let mut active = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let z = grid.point(i, j);
            let all = tuple.values_at(z)?;
            let set = if dot(z - center, frame.direction) >= 0.0 {
                &upper_set
            } else {
                &lower_set
            };
            let mut best = set[0];
            for &nu in set {
                let (v, b) = (all[nu] - center_values[nu], all[best] - center_values[best]);
                if v > b || (v == b && nu < best) {
                    best = nu;
                }
            }
            values.push(all[best] - center_values[best]);
            active.push(best);
        }
    }
    Ok(ConfigurationField {
        grid,
        values,
        active,
    })
}

/// One mean-value violation: node location and the positive deficit
/// V(p) - circle average.
#[derive(Debug, Clone, Copy)]
pub struct Violation {
    pub z: Complex64,
    pub deficit: f64,
}

#[derive(Debug, Clone)]
pub struct SubharmonicReport {
    pub violations: Vec<Violation>,
    pub mv_tol: f64,
}

impl SubharmonicReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mid = xs.len() / 2;
    xs.select_nth_unstable_by(mid, f64::total_cmp);
    xs[mid]
}

/// Discrete mean-value test: every interior node must not exceed the
/// bilinear circle average at radii h, 2h, 4h by more than a tolerance
/// built from the field's own smooth curvature (median second difference)
/// and gradient scale.
pub fn verify_subharmonic(field: &ConfigurationField) -> SubharmonicReport {
    let grid = &field.grid;
    let h = grid.h;
    let mut second_diffs = Vec::with_capacity(grid.len());
    let mut grad_scale = 0.0_f64;
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let v = field.node_value(i, j);
            let d2x = field.node_value(i + 1, j) - 2.0 * v + field.node_value(i - 1, j);
            let d2y = field.node_value(i, j + 1) - 2.0 * v + field.node_value(i, j - 1);
            second_diffs.push(d2x.abs().max(d2y.abs()) / (h * h));
            let gx = (field.node_value(i + 1, j) - field.node_value(i - 1, j)).abs() / (2.0 * h);
            let gy = (field.node_value(i, j + 1) - field.node_value(i, j - 1)).abs() / (2.0 * h);
            grad_scale = grad_scale.max(gx.max(gy));
        }
    }
    let q_smooth = median(second_diffs);
    let mv_tol = 1e-9 + 10.0 * h * h * q_smooth + 0.02 * h * grad_scale;

    let samples = 32;
    let mut violations = Vec::new();
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let p = grid.point(i, j);
            let v = field.node_value(i, j);
            for radius_mult in [1.0, 2.0, 4.0] {
                let r = radius_mult * h;
                // the whole circle must be interpolable
                if (i as f64) * h < r
                    || (j as f64) * h < r
                    || ((grid.nx - 1 - i) as f64) * h < r
                    || ((grid.ny - 1 - j) as f64) * h < r
                {
                    continue;
                }
                let mut avg = 0.0;
                let mut all_inside = true;
                for m in 0..samples {
                    let theta = 2.0 * std::f64::consts::PI * m as f64 / samples as f64;
                    match field.value_at(p + Complex64::from_polar(r, theta)) {
                        Some(val) => avg += val,
                        None => {
                            all_inside = false;
                            break;
                        }
                    }
                }
                if !all_inside {
                    continue;
                }
                avg /= samples as f64;
                let deficit = v - avg;
                if deficit > mv_tol {
                    violations.push(Violation { z: p, deficit });
                }
            }
        }
    }
    SubharmonicReport { violations, mv_tol }
}

/// True iff every true node's forward ray (in the given direction) stays
/// inside the mask, up to a one-node tolerance band.
pub fn verify_forward_star(mask: &RegionMask, direction: Complex64) -> bool {
    let grid = &mask.grid;
    let len = direction.norm();
    if len == 0.0 {
        return false;
    }
    let dir = direction / len;
    let step = grid.h / 2.0;
    let nearby_true = |fx: f64, fy: f64| -> bool {
        let i0 = fx.round() as isize;
        let j0 = fy.round() as isize;
        for dj in -1..=1_isize {
            for di in -1..=1_isize {
                let (i, j) = (i0 + di, j0 + dj);
                if i >= 0
                    && j >= 0
                    && (i as usize) < grid.nx
                    && (j as usize) < grid.ny
                    && mask.get(i as usize, j as usize)
                {
                    return true;
                }
            }
        }
        false
    };
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if !mask.get(i, j) {
                continue;
            }
            let mut m = 1;
            loop {
                let q = grid.point(i, j) + dir * (m as f64 * step);
                let fx = (q.re - grid.origin.re) / grid.h;
                let fy = (q.im - grid.origin.im) / grid.h;
                if fx < 0.0 || fy < 0.0 || fx > (grid.nx - 1) as f64 || fy > (grid.ny - 1) as f64
                {
                    break;
                }
                if !nearby_true(fx, fy) {
                    return false;
                }
                m += 1;
            }
        }
    }
    true
}

/// Lipschitz estimate of a region boundary that is a graph x = rho(y),
/// together with the Prop-1.4-style bound cot(delta) plus grid slack.
#[derive(Debug, Clone, Copy)]
pub struct LipschitzReport {
    pub estimate: f64,
    pub bound: f64,
}

/// Extracts the boundary of {active == nu} by scanline and fits the
/// maximal |d rho / d y|. The region must be a contiguous run anchored to
/// the same grid side on every row.
pub fn interface_lipschitz(
    field: &ConfigurationField,
    nu: usize,
    delta: f64,
) -> Result<LipschitzReport, ConfigError> {
    let grid = &field.grid;
    let mut boundary_cols: Vec<f64> = Vec::with_capacity(grid.ny);
    // orientation: suffix (anchored right) or prefix (anchored left)
    let mut suffix_ok = true;
    let mut prefix_ok = true;
    let mut runs: Vec<(usize, usize)> = Vec::with_capacity(grid.ny);
    for j in 0..grid.ny {
        let row: Vec<bool> = (0..grid.nx).map(|i| field.node_active(i, j) == nu).collect();
        let first = row.iter().position(|&b| b);
        let last = row.iter().rposition(|&b| b);
        match (first, last) {
            (Some(f), Some(l)) => {
                if row[f..=l].iter().any(|&b| !b) {
                    return Err(ConfigError::NotAGraph);
                }
                if l != grid.nx - 1 {
                    suffix_ok = false;
                }
                if f != 0 {
                    prefix_ok = false;
                }
                runs.push((f, l));
            }
            _ => return Err(ConfigError::NotAGraph),
        }
    }
    if !suffix_ok && !prefix_ok {
        return Err(ConfigError::NotAGraph);
    }
    for &(f, l) in &runs {
        boundary_cols.push(if suffix_ok { f as f64 } else { l as f64 });
    }
    let estimate = boundary_cols
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let bound = 1.0 / delta.tan() + 2.0;
    Ok(LipschitzReport { estimate, bound })
}
