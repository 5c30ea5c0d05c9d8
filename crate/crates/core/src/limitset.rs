//! Predicted n-to-infinity limit objects of a family
//! `F_n(z) = sum_r a_r(z) f_r(z)^n`: anti-Stokes arcs where the two largest
//! `|f_r|` tie and dominate the rest, isolated limit points at dominant zeros
//! of the `a_r`, and the zero density along each arc.
//!
//! Arcs are extracted by marching squares on `log|f_r| - log|f_s|` over a
//! bounding box, with bisection refinement on crossing edges, a dominance
//! filter that removes tie points beaten by a third member, and chaining into
//! polylines. The argument of `f_r/f_s` is unwrapped along each polyline;
//! its derivative against arclength over 2*pi is the zero density.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::bignum::BigComplex;
use crate::par;
use crate::pencil::SubsetFamily;
use crate::poly::{poly_roots, AberthConfig, ComplexPoly};
use crate::{Error, Result};

/// One factor `((z - alpha)/beta)^e` of a member's power base.
#[derive(Clone, Debug)]
pub struct PowerFactor {
    pub alpha: BigComplex,
    pub beta: BigComplex,
    pub e: u32,
}

/// `a(z) * f(z)^n` with `f = prod factors`.
#[derive(Clone, Debug)]
pub struct AnalyticMember {
    pub label: String,
    pub coeff: ComplexPoly,
    pub factors: Vec<PowerFactor>,
}

impl AnalyticMember {
    pub fn new(label: &str, coeff: ComplexPoly, factors: Vec<PowerFactor>) -> Self {
        AnalyticMember {
            label: label.to_string(),
            coeff,
            factors,
        }
    }
}

/// Family over a shared factor basis. Member `r` has
/// `f_r = prod_k ((z - alpha_k)/beta_k)^(exps[r][k])`; exponents may be
/// negative after the common-factor normalization that divides every member
/// by the one of smallest total exponent.
#[derive(Clone, Debug)]
pub struct AnalyticFamily {
    pub members: Vec<AnalyticMember>,
    basis: Vec<(Complex64, Complex64)>,
    exps: Vec<Vec<i32>>,
}

impl AnalyticFamily {
    pub fn new(members: Vec<AnalyticMember>) -> Self {
        let mut basis: Vec<(Complex64, Complex64)> = Vec::new();
        let key = |z: Complex64| (z.re.to_bits(), z.im.to_bits());
        let mut index: BTreeMap<((u64, u64), (u64, u64)), usize> = BTreeMap::new();
        let mut exps: Vec<Vec<i32>> = Vec::new();
        for m in &members {
            let mut row = vec![0i32; basis.len()];
            for f in &m.factors {
                let k = (key(f.alpha.to_c64()), key(f.beta.to_c64()));
                let idx = *index.entry(k).or_insert_with(|| {
                    basis.push((f.alpha.to_c64(), f.beta.to_c64()));
                    basis.len() - 1
                });
                if idx >= row.len() {
                    row.resize(basis.len(), 0);
                }
                row[idx] += f.e as i32;
            }
            row.resize(basis.len(), 0);
            exps.push(row);
        }
        for row in exps.iter_mut() {
            row.resize(basis.len(), 0);
        }
        // Common-factor normalization: divide out the member with minimal
        // total exponent so constant-like members become exactly 1.
        if let Some(min_idx) = (0..exps.len())
            .min_by_key(|&r| exps[r].iter().map(|&e| e as i64).sum::<i64>())
        {
            let min_row = exps[min_idx].clone();
            for row in exps.iter_mut() {
                for (e, m) in row.iter_mut().zip(min_row.iter()) {
                    *e -= m;
                }
            }
        }
        AnalyticFamily {
            members,
            basis,
            exps,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn label(&self, r: usize) -> &str {
        &self.members[r].label
    }

    /// log |f_r(z)| (after normalization). Minus infinity at factor zeros.
    pub fn log_mag(&self, r: usize, z: Complex64) -> f64 {
        let mut acc = 0.0f64;
        for (k, &(alpha, beta)) in self.basis.iter().enumerate() {
            let e = self.exps[r][k];
            if e == 0 {
                continue;
            }
            acc += e as f64 * ((z - alpha).norm().ln() - beta.norm().ln());
        }
        acc
    }

    /// Net factor exponents of `f_r/f_s`, grouped by alpha value, plus the
    /// constant `C` with `|f_r/f_s| = C * prod |z - alpha_j|^(p_j)`.
    pub fn pair_net(&self, r: usize, s: usize) -> (Vec<(Complex64, i32)>, f64) {
        let mut by_alpha: BTreeMap<(u64, u64), (Complex64, i32)> = BTreeMap::new();
        let mut log_c = 0.0f64;
        for (k, &(alpha, beta)) in self.basis.iter().enumerate() {
            let d = self.exps[r][k] - self.exps[s][k];
            if d == 0 {
                continue;
            }
            log_c -= d as f64 * beta.norm().ln();
            let key = (alpha.re.to_bits(), alpha.im.to_bits());
            let e = by_alpha.entry(key).or_insert((alpha, 0));
            e.1 += d;
        }
        let mut net: Vec<(Complex64, i32)> = by_alpha
            .values()
            .cloned()
            .filter(|&(_, p)| p != 0)
            .collect();
        // Canonical orientation: leading exponent positive.
        if net.first().map(|&(_, p)| p < 0).unwrap_or(false) {
            for e in net.iter_mut() {
                e.1 = -e.1;
            }
            log_c = -log_c;
        }
        (net, log_c.exp())
    }

    /// f_r/f_s as a complex value (unit modulus on a tie arc).
    pub fn pair_ratio(&self, r: usize, s: usize, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (k, &(alpha, beta)) in self.basis.iter().enumerate() {
            let d = self.exps[r][k] - self.exps[s][k];
            if d == 0 {
                continue;
            }
            let g = (z - alpha) / beta;
            let p = g.powi(d.abs());
            acc *= if d > 0 { p } else { p.inv() };
        }
        acc
    }

    /// Suggested bounding box: factor disks `|z - alpha| <= 2(|beta| + 1)`
    /// together with all coefficient zeros padded by 1.
    pub fn initial_bbox(&self) -> Result<(f64, f64, f64, f64)> {
        let mut x0 = f64::INFINITY;
        let mut x1 = f64::NEG_INFINITY;
        let mut y0 = f64::INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        let mut cover = |z: Complex64, pad: f64| {
            x0 = x0.min(z.re - pad);
            x1 = x1.max(z.re + pad);
            y0 = y0.min(z.im - pad);
            y1 = y1.max(z.im + pad);
        };
        for &(alpha, beta) in &self.basis {
            cover(alpha, 2.0 * (beta.norm() + 1.0));
        }
        for m in &self.members {
            if m.coeff.degree().unwrap_or(0) >= 1 {
                let roots = poly_roots(&m.coeff, &AberthConfig::with_prec(128))?;
                for root in &roots.roots {
                    cover(root.value.to_c64(), 1.0);
                }
            }
        }
        if !x0.is_finite() {
            return Ok((-2.0, -2.0, 2.0, 2.0));
        }
        Ok((x0, y0, x1, y1))
    }

    /// Largest factor scale, used for fallback seeding.
    pub fn outer_radius(&self) -> f64 {
        let mut r = 1.0f64;
        for &(alpha, beta) in &self.basis {
            r = r.max(1.0 + alpha.norm() + beta.norm());
        }
        r
    }
}

/// Build the analytic family of a subset-coefficient expansion: one member
/// per nonzero `a_s`, `f_s = prod_{i in s} ((z - alpha_i)/beta_i)^(e_i)`.
pub fn family_from_subsets(fam: &SubsetFamily) -> Result<AnalyticFamily> {
    if fam.coeffs.is_empty() {
        return Err(Error::numeric(
            "degenerate family: every subset coefficient vanishes",
        ));
    }
    let mut members = Vec::new();
    for (&mask, a) in &fam.coeffs {
        let mut factors = Vec::new();
        let mut label_ids = Vec::new();
        for (r, f) in fam.factors.iter().enumerate() {
            if mask & (1 << r) != 0 {
                factors.push(PowerFactor {
                    alpha: f.alpha.clone(),
                    beta: f.beta.clone(),
                    e: f.e,
                });
                label_ids.push(r.to_string());
            }
        }
        let label = if label_ids.is_empty() {
            "{}".to_string()
        } else {
            format!("{{{}}}", label_ids.join(","))
        };
        members.push(AnalyticMember::new(&label, a.clone(), factors));
    }
    Ok(AnalyticFamily::new(members))
}

#[derive(Clone, Debug)]
pub struct TraceConfig {
    pub resolution: usize,
    pub tie_tol: f64,
    pub dom_margin: f64,
    /// Bisection iterations per crossing edge.
    pub refine_steps: usize,
    pub max_expand: usize,
    pub min_arc_points: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            resolution: 800,
            tie_tol: 1e-9,
            dom_margin: 1e-6,
            refine_steps: 40,
            max_expand: 6,
            min_arc_points: 4,
        }
    }
}

impl TraceConfig {
    pub fn with_resolution(resolution: usize) -> Self {
        TraceConfig {
            resolution,
            ..Default::default()
        }
    }
}

/// One traced anti-Stokes arc for a member pair.
#[derive(Clone, Debug, Serialize)]
pub struct ArcSample {
    pub pair: (usize, usize),
    pub closed: bool,
    pub points: Vec<(f64, f64)>,
    pub arclength: Vec<f64>,
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
}

impl ArcSample {
    pub fn point(&self, j: usize) -> Complex64 {
        Complex64::new(self.points[j].0, self.points[j].1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        *self.arclength.last().unwrap_or(&0.0)
    }

    /// Distance from `z` to the polyline.
    pub fn distance(&self, z: Complex64) -> f64 {
        let mut best = f64::INFINITY;
        for w in self.points.windows(2) {
            let a = Complex64::new(w[0].0, w[0].1);
            let b = Complex64::new(w[1].0, w[1].1);
            best = best.min(segment_distance(z, a, b));
        }
        if self.points.len() == 1 {
            best = (z - self.point(0)).norm();
        }
        best
    }
}

fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let den = ab.norm_sqr();
    if den == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a).re * ab.re + (z - a).im * ab.im) / den;
    let t = t.clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

#[derive(Clone, Debug, Serialize)]
pub struct IsolatedPoint {
    pub re: f64,
    pub im: f64,
    /// Index of the member whose coefficient vanishes here.
    pub member: usize,
    /// Dominance margin 1 - max_{t != r} |f_t/f_r|; strictly positive for
    /// accepted isolated limit points.
    pub margin: f64,
}

impl IsolatedPoint {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitSet {
    pub arcs: Vec<ArcSample>,
    pub isolated: Vec<IsolatedPoint>,
    /// Coefficient zeros whose dominance margin is numerically zero; no
    /// verdict is forced on these.
    pub ambiguous: Vec<IsolatedPoint>,
    pub bbox: (f64, f64, f64, f64),
    pub diagnostics: Vec<String>,
}

impl LimitSet {
    pub fn distance_to_arcs(&self, z: Complex64) -> f64 {
        self.arcs
            .iter()
            .map(|a| a.distance(z))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_arc_length(&self) -> f64 {
        self.arcs.iter().map(|a| a.total_length()).sum()
    }
}

type EdgeKey = (usize, usize, u8);

struct Grid {
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    nx: usize,
    ny: usize,
}

impl Grid {
    fn node(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x0 + self.dx * i as f64, self.y0 + self.dy * j as f64)
    }
}

/// Trace the full limit set of the family.
pub fn trace_limit_set(fam: &AnalyticFamily, cfg: &TraceConfig) -> Result<LimitSet> {
    if cfg.resolution < 8 {
        return Err(Error::numeric("trace resolution must be at least 8"));
    }
    let m = fam.len();
    let mut diagnostics = Vec::new();

    // Degenerate pairs: constant |f_r/f_s|.
    let mut skip_pair = vec![vec![false; m]; m];
    for r in 0..m {
        for s in (r + 1)..m {
            let (net, c) = fam.pair_net(r, s);
            if net.is_empty() {
                if (c - 1.0).abs() < 1e-12 {
                    return Err(Error::numeric(format!(
                        "degenerate family: |f_{}|/|f_{}| is identically 1 \
                         (members {:?} and {:?} share every factor); \
                         the tie set is not a curve",
                        r,
                        s,
                        fam.label(r),
                        fam.label(s)
                    )));
                }
                skip_pair[r][s] = true;
                diagnostics.push(format!(
                    "pair ({r},{s}): constant magnitude ratio {c:.6}, no tie curve"
                ));
            }
        }
    }

    let (mut x0, mut y0, mut x1, mut y1) = fam.initial_bbox()?;
    let mut arcs = Vec::new();
    let mut expansions = 0usize;
    loop {
        let nx = cfg.resolution;
        let ny = cfg.resolution;
        let grid = Grid {
            x0,
            y0,
            dx: (x1 - x0) / nx as f64,
            dy: (y1 - y0) / ny as f64,
            nx,
            ny,
        };
        // Per-member log-magnitude grids, rows in parallel.
        let mags: Vec<Vec<f64>> = (0..m)
            .map(|r| {
                let rows = par::map_range(ny + 1, |j| {
                    (0..=nx)
                        .map(|i| fam.log_mag(r, grid.node(i, j)))
                        .collect::<Vec<f64>>()
                });
                rows.into_iter().flatten().collect()
            })
            .collect();
        let at = |r: usize, i: usize, j: usize| mags[r][j * (nx + 1) + i];

        arcs.clear();
        let mut touches_boundary = false;
        for r in 0..m {
            for s in (r + 1)..m {
                if skip_pair[r][s] {
                    continue;
                }
                let (pair_arcs, touched) = trace_pair(fam, &grid, r, s, &at, cfg);
                touches_boundary |= touched;
                arcs.extend(pair_arcs);
            }
        }
        if touches_boundary && expansions < cfg.max_expand {
            expansions += 1;
            let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
            let (hx, hy) = ((x1 - x0) / 2.0 * 1.5, (y1 - y0) / 2.0 * 1.5);
            x0 = cx - hx;
            x1 = cx + hx;
            y0 = cy - hy;
            y1 = cy + hy;
            continue;
        }
        if touches_boundary {
            diagnostics.push(
                "limit set still touches the bounding box after expansion".to_string(),
            );
        }
        if expansions > 0 {
            diagnostics.push(format!("bounding box expanded {expansions} times"));
        }
        break;
    }

    let (isolated, ambiguous) = isolated_limits(fam)?;

    Ok(LimitSet {
        arcs,
        isolated,
        ambiguous,
        bbox: (x0, y0, x1, y1),
        diagnostics,
    })
}

fn trace_pair(
    fam: &AnalyticFamily,
    grid: &Grid,
    r: usize,
    s: usize,
    at: &dyn Fn(usize, usize, usize) -> f64,
    cfg: &TraceConfig,
) -> (Vec<ArcSample>, bool) {
    let m = fam.len();
    let d_at = |i: usize, j: usize| at(r, i, j) - at(s, i, j);
    let d_cont = |z: Complex64| fam.log_mag(r, z) - fam.log_mag(s, z);

    // A crossing point passes if the tied value beats every third member by
    // the dominance margin.
    let dominance_ok = |z: Complex64| -> bool {
        let lr = fam.log_mag(r, z);
        let ls = fam.log_mag(s, z);
        let tied = lr.max(ls);
        let floor = tied + (1.0 - cfg.dom_margin).ln();
        (0..m).all(|t| t == r || t == s || fam.log_mag(t, z) <= floor)
    };

    // Refine each crossing edge by bisection; collect per unique edge.
    let mut crossings: BTreeMap<EdgeKey, Option<Complex64>> = BTreeMap::new();
    let cross_of = |key: EdgeKey,
                        a: Complex64,
                        b: Complex64,
                        da: f64,
                        crossings: &mut BTreeMap<EdgeKey, Option<Complex64>>|
     -> Option<Complex64> {
        if let Some(v) = crossings.get(&key) {
            return *v;
        }
        let mut lo = a;
        let mut hi = b;
        // Sign convention must match the marching-squares corner test
        // (zero counts as positive), or node-exact zeros walk the wrong way.
        let mut slo = da >= 0.0;
        for _ in 0..cfg.refine_steps {
            let mid = (lo + hi) / 2.0;
            let dm = d_cont(mid);
            if dm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (dm >= 0.0) == slo {
                lo = mid;
                slo = dm >= 0.0;
            } else {
                hi = mid;
            }
        }
        let z = (lo + hi) / 2.0;
        let v = if dominance_ok(z) { Some(z) } else { None };
        crossings.insert(key, v);
        v
    };

    let sign = |v: f64| v >= 0.0;
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    let mut touched = false;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let d00 = d_at(i, j);
            let d10 = d_at(i + 1, j);
            let d11 = d_at(i + 1, j + 1);
            let d01 = d_at(i, j + 1);
            if !(d00.is_finite() && d10.is_finite() && d11.is_finite() && d01.is_finite()) {
                continue;
            }
            let code = (sign(d00) as u8)
                | ((sign(d10) as u8) << 1)
                | ((sign(d11) as u8) << 2)
                | ((sign(d01) as u8) << 3);
            if code == 0 || code == 15 {
                continue;
            }
            let e_s: EdgeKey = (i, j, 0);
            let e_e: EdgeKey = (i + 1, j, 1);
            let e_n: EdgeKey = (i, j + 1, 0);
            let e_w: EdgeKey = (i, j, 1);
            let mut need = |k: EdgeKey| -> Option<Complex64> {
                match k.2 {
                    0 => {
                        let (a, b) = (grid.node(k.0, k.1), grid.node(k.0 + 1, k.1));
                        cross_of(k, a, b, d_at(k.0, k.1), &mut crossings)
                    }
                    _ => {
                        let (a, b) = (grid.node(k.0, k.1), grid.node(k.0, k.1 + 1));
                        cross_of(k, a, b, d_at(k.0, k.1), &mut crossings)
                    }
                }
            };
            let pairs: &[(EdgeKey, EdgeKey)] = match code {
                1 => &[(e_s, e_w)],
                2 => &[(e_s, e_e)],
                3 => &[(e_w, e_e)],
                4 => &[(e_e, e_n)],
                6 => &[(e_s, e_n)],
                7 => &[(e_w, e_n)],
                8 => &[(e_w, e_n)],
                9 => &[(e_s, e_n)],
                11 => &[(e_e, e_n)],
                12 => &[(e_w, e_e)],
                13 => &[(e_s, e_e)],
                14 => &[(e_s, e_w)],
                5 | 10 => {
                    let center = d_cont((grid.node(i, j) + grid.node(i + 1, j + 1)) / 2.0);
                    let center_pos = center >= 0.0;
                    if code == 5 {
                        // + at SW and NE
                        if center_pos {
                            &[(e_s, e_e), (e_w, e_n)]
                        } else {
                            &[(e_s, e_w), (e_e, e_n)]
                        }
                    } else {
                        // + at SE and NW
                        if center_pos {
                            &[(e_s, e_w), (e_e, e_n)]
                        } else {
                            &[(e_s, e_e), (e_w, e_n)]
                        }
                    }
                }
                _ => &[],
            };
            for &(ka, kb) in pairs {
                let (ca, cb) = (need(ka), need(kb));
                if let (Some(_), Some(_)) = (ca, cb) {
                    segments.push((ka, kb));
                    if i == 0 || j == 0 || i + 1 == grid.nx || j + 1 == grid.ny {
                        touched = true;
                    }
                }
            }
        }
    }

    // Chain segments into polylines over the crossing nodes.
    let polylines = chain_segments(&segments, &crossings);
    let mut arcs = Vec::new();
    for (pts, closed) in polylines {
        if pts.len() < cfg.min_arc_points {
            continue;
        }
        for arc in finish_arc(fam, r, s, pts, closed, cfg) {
            arcs.push(arc);
        }
    }
    (arcs, touched)
}

fn chain_segments(
    segments: &[(EdgeKey, EdgeKey)],
    crossings: &BTreeMap<EdgeKey, Option<Complex64>>,
) -> Vec<(Vec<Complex64>, bool)> {
    let mut adjacency: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (idx, &(a, b)) in segments.iter().enumerate() {
        adjacency.entry(a).or_default().push(idx);
        adjacency.entry(b).or_default().push(idx);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let point = |k: &EdgeKey| crossings.get(k).and_then(|v| *v);

    let walk = |start: EdgeKey, used: &mut Vec<bool>| -> (Vec<EdgeKey>, bool) {
        let mut path = vec![start];
        let mut cur = start;
        loop {
            let next_seg = adjacency
                .get(&cur)
                .and_then(|segs| segs.iter().find(|&&i| !used[i]).cloned());
            let Some(i) = next_seg else { break };
            used[i] = true;
            let (a, b) = segments[i];
            cur = if a == cur { b } else { a };
            if cur == start {
                return (path, true);
            }
            path.push(cur);
        }
        (path, false)
    };

    // Open paths first, from endpoints of odd degree.
    let endpoints: Vec<EdgeKey> = adjacency
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(k, _)| *k)
        .collect();
    for start in endpoints {
        if adjacency[&start].iter().all(|&i| used[i]) {
            continue;
        }
        let (path, closed) = walk(start, &mut used);
        let pts: Vec<Complex64> = path.iter().filter_map(point).collect();
        if pts.len() >= 2 {
            out.push((pts, closed));
        }
    }
    // Remaining segments belong to closed loops.
    for idx in 0..segments.len() {
        if used[idx] {
            continue;
        }
        let start = segments[idx].0;
        let (path, closed) = walk(start, &mut used);
        let pts: Vec<Complex64> = path.iter().filter_map(point).collect();
        if pts.len() >= 2 {
            out.push((pts, closed));
        }
    }
    out
}

/// Unwrap theta, split where continuation or monotonicity fails, orient so
/// theta increases, and attach arclength and density samples.
fn finish_arc(
    fam: &AnalyticFamily,
    r: usize,
    s: usize,
    pts: Vec<Complex64>,
    closed: bool,
    cfg: &TraceConfig,
) -> Vec<ArcSample> {
    let raw_theta: Vec<f64> = pts.iter().map(|&z| fam.pair_ratio(r, s, z).arg()).collect();
    // Unwrapped theta with split points where the jump is too large or the
    // direction reverses.
    let mut pieces: Vec<(usize, usize)> = Vec::new(); // [start, end) index ranges
    let mut theta = vec![0.0f64; pts.len()];
    theta[0] = raw_theta[0];
    let mut start = 0usize;
    let mut dir = 0f64;
    for j in 1..pts.len() {
        let mut dphi = raw_theta[j] - raw_theta[j - 1];
        while dphi > std::f64::consts::PI {
            dphi -= 2.0 * std::f64::consts::PI;
        }
        while dphi < -std::f64::consts::PI {
            dphi += 2.0 * std::f64::consts::PI;
        }
        let too_fast = dphi.abs() > 0.9 * std::f64::consts::PI;
        let reversed = dir != 0.0 && dphi != 0.0 && dphi.signum() != dir;
        if too_fast || reversed {
            pieces.push((start, j));
            start = j;
            dir = 0.0;
            theta[j] = raw_theta[j];
            continue;
        }
        if dphi != 0.0 {
            dir = dphi.signum();
        }
        theta[j] = theta[j - 1] + dphi;
    }
    pieces.push((start, pts.len()));
    let split = pieces.len() > 1;

    let mut arcs = Vec::new();
    for (a, b) in pieces {
        if b - a < cfg.min_arc_points {
            continue;
        }
        let mut p: Vec<Complex64> = pts[a..b].to_vec();
        let mut th: Vec<f64> = theta[a..b].to_vec();
        if th.last().unwrap() < th.first().unwrap() {
            p.reverse();
            th.reverse();
        }
        let mut arclength = vec![0.0f64; p.len()];
        for j in 1..p.len() {
            arclength[j] = arclength[j - 1] + (p[j] - p[j - 1]).norm();
        }
        let n = p.len();
        let mut rho = vec![0.0f64; n];
        for j in 0..n {
            let (jm, jp) = (j.saturating_sub(1), (j + 1).min(n - 1));
            let ds = arclength[jp] - arclength[jm];
            if ds > 0.0 {
                rho[j] = (th[jp] - th[jm]) / (2.0 * std::f64::consts::PI * ds);
            }
        }
        // Endpoint values copy their interior neighbour; the density at arc
        // ends is not guaranteed by the theory anyway.
        if n >= 2 {
            rho[0] = rho[1];
            rho[n - 1] = rho[n - 2];
        }
        arcs.push(ArcSample {
            pair: (r, s),
            closed: closed && !split,
            points: p.iter().map(|z| (z.re, z.im)).collect(),
            arclength,
            theta: th,
            rho,
        });
    }
    arcs
}

/// Zeros of the coefficient polynomials that are strictly dominant for their
/// own member, with the dominance margin; near-zero margins are reported
/// separately without a verdict.
pub fn isolated_limits(
    fam: &AnalyticFamily,
) -> Result<(Vec<IsolatedPoint>, Vec<IsolatedPoint>)> {
    let mut isolated = Vec::new();
    let mut ambiguous = Vec::new();
    for r in 0..fam.len() {
        let coeff = &fam.members[r].coeff;
        if coeff.degree().unwrap_or(0) < 1 {
            continue;
        }
        let roots = poly_roots(coeff, &AberthConfig::with_prec(128))?;
        for root in &roots.roots {
            let z = root.value.to_c64();
            let lr = fam.log_mag(r, z);
            let max_other = (0..fam.len())
                .filter(|&t| t != r)
                .map(|t| fam.log_mag(t, z))
                .fold(f64::NEG_INFINITY, f64::max);
            let margin = 1.0 - (max_other - lr).exp();
            let pt = IsolatedPoint {
                re: z.re,
                im: z.im,
                member: r,
                margin,
            };
            if margin > 1e-12 {
                isolated.push(pt);
            } else if margin.abs() <= 1e-12 {
                ambiguous.push(pt);
            }
        }
    }
    Ok((isolated, ambiguous))
}

/// Exact tie-curve descriptor for a member pair, when it is a circle or line.
#[derive(Clone, Debug, Serialize)]
pub enum CurveKind {
    Circle { center: (f64, f64), radius: f64 },
    Line { point: (f64, f64), dir: (f64, f64) },
    Other { description: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct PairCurve {
    pub pair: (usize, usize),
    pub kind: CurveKind,
}

/// Closed-form tie curves for every member pair. Pairs with one net linear
/// factor give circles `|z - alpha| = rho`; two opposite-exponent factors
/// give Apollonius circles or lines; everything else is reported as a
/// higher-order curve.
pub fn analytic_circles(fam: &AnalyticFamily) -> Vec<PairCurve> {
    let mut out = Vec::new();
    for r in 0..fam.len() {
        for s in (r + 1)..fam.len() {
            let (net, c) = fam.pair_net(r, s);
            let kind = match net.len() {
                0 => CurveKind::Other {
                    description: format!("constant ratio {c:.6}"),
                },
                1 => {
                    let (alpha, p) = net[0];
                    // C |z-alpha|^p = 1
                    let radius = c.powf(-1.0 / p as f64);
                    CurveKind::Circle {
                        center: (alpha.re, alpha.im),
                        radius,
                    }
                }
                2 if net[0].1 == -net[1].1 => {
                    let ((a, p), (b, _)) = (net[0], net[1]);
                    // C |z-a|^p |z-b|^-p = 1  =>  |z-a|/|z-b| = C^(-1/p)
                    let ratio = c.powf(-1.0 / p as f64);
                    if (ratio - 1.0).abs() < 1e-12 {
                        let mid = (a + b) / 2.0;
                        let dir = Complex64::new(0.0, 1.0) * (b - a);
                        CurveKind::Line {
                            point: (mid.re, mid.im),
                            dir: (dir.re, dir.im),
                        }
                    } else {
                        let d2 = ratio * ratio;
                        let center = (a - b * d2) / (1.0 - d2);
                        let radius = ratio * (a - b).norm() / (1.0 - d2).abs();
                        CurveKind::Circle {
                            center: (center.re, center.im),
                            radius,
                        }
                    }
                }
                _ => {
                    let desc: Vec<String> = net
                        .iter()
                        .map(|(a, p)| format!("|z-({:.4}{:+.4}i)|^{}", a.re, a.im, p))
                        .collect();
                    CurveKind::Other {
                        description: format!("{} = {:.6}", desc.join(" * "), 1.0 / c),
                    }
                }
            };
            out.push(PairCurve { pair: (r, s), kind });
        }
    }
    out
}

/// Trapezoidal integral of the density over `[from_s, to_s]`; equals the
/// theta increment over 2*pi up to quadrature error.
#[derive(Clone, Debug)]
pub struct DensityIntegral {
    pub value: f64,
    pub endpoint_warning: bool,
}

pub fn density_integral(arc: &ArcSample, from_s: f64, to_s: f64) -> Result<DensityIntegral> {
    if from_s > to_s {
        return Err(Error::numeric("density integral: from_s > to_s"));
    }
    let total = arc.total_length();
    if from_s < 0.0 || to_s > total {
        return Err(Error::numeric(format!(
            "density integral: [{from_s}, {to_s}] outside arc [0, {total}]"
        )));
    }
    let eps = total * 1e-9;
    let endpoint_warning = from_s <= eps || to_s >= total - eps;
    if from_s == to_s {
        return Ok(DensityIntegral {
            value: 0.0,
            endpoint_warning,
        });
    }
    // Sample rho linearly between stored nodes.
    let rho_at = |s: f64| -> f64 {
        match arc.arclength.binary_search_by(|x| x.partial_cmp(&s).unwrap()) {
            Ok(i) => arc.rho[i],
            Err(i) => {
                if i == 0 {
                    arc.rho[0]
                } else if i >= arc.len() {
                    arc.rho[arc.len() - 1]
                } else {
                    let (s0, s1) = (arc.arclength[i - 1], arc.arclength[i]);
                    let t = if s1 > s0 { (s - s0) / (s1 - s0) } else { 0.0 };
                    arc.rho[i - 1] * (1.0 - t) + arc.rho[i] * t
                }
            }
        }
    };
    let mut acc = 0.0f64;
    let mut prev_s = from_s;
    let mut prev_r = rho_at(from_s);
    for (j, &sj) in arc.arclength.iter().enumerate() {
        if sj <= from_s || sj >= to_s {
            continue;
        }
        acc += 0.5 * (prev_r + arc.rho[j]) * (sj - prev_s);
        prev_s = sj;
        prev_r = arc.rho[j];
    }
    acc += 0.5 * (prev_r + rho_at(to_s)) * (to_s - prev_s);
    Ok(DensityIntegral {
        value: acc,
        endpoint_warning,
    })
}

/// Sub-arc theta increment over 2*pi, the exact value the density integral
/// approximates.
pub fn theta_increment(arc: &ArcSample, from_s: f64, to_s: f64) -> f64 {
    let theta_at = |s: f64| -> f64 {
        match arc.arclength.binary_search_by(|x| x.partial_cmp(&s).unwrap()) {
            Ok(i) => arc.theta[i],
            Err(i) => {
                if i == 0 {
                    arc.theta[0]
                } else if i >= arc.len() {
                    arc.theta[arc.len() - 1]
                } else {
                    let (s0, s1) = (arc.arclength[i - 1], arc.arclength[i]);
                    let t = if s1 > s0 { (s - s0) / (s1 - s0) } else { 0.0 };
                    arc.theta[i - 1] * (1.0 - t) + arc.theta[i] * t
                }
            }
        }
    };
    (theta_at(to_s) - theta_at(from_s)) / (2.0 * std::f64::consts::PI)
}

/// JSON export of arcs and isolated points in the documented schema.
pub fn limitset_to_json(ls: &LimitSet, fam: &AnalyticFamily) -> serde_json::Value {
    serde_json::json!({
        "members": (0..fam.len()).map(|r| fam.label(r)).collect::<Vec<_>>(),
        "arcs": ls.arcs.iter().map(|a| serde_json::json!({
            "pair": [a.pair.0, a.pair.1],
            "closed": a.closed,
            "points": a.points.iter().map(|p| [p.0, p.1]).collect::<Vec<_>>(),
            "arclength": a.arclength,
            "theta": a.theta,
            "rho": a.rho,
        })).collect::<Vec<_>>(),
        "isolated": ls.isolated,
        "ambiguous": ls.ambiguous,
        "bbox": [ls.bbox.0, ls.bbox.1, ls.bbox.2, ls.bbox.3],
        "diagnostics": ls.diagnostics,
    })
}

/// CSV mirror of the arc samples: pair_r, pair_s, re, im, s, theta, rho.
pub fn arcs_to_csv(ls: &LimitSet) -> String {
    let mut out = String::from("pair_r,pair_s,re,im,s,theta,rho\n");
    for a in &ls.arcs {
        for j in 0..a.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                a.pair.0,
                a.pair.1,
                a.points[j].0,
                a.points[j].1,
                a.arclength[j],
                a.theta[j],
                a.rho[j]
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn limset_family_arcs_cover_both_circles() {
        let fam = presets::limset_family(128);
        let cfg = TraceConfig::with_resolution(300);
        let ls = trace_limit_set(&fam, &cfg).unwrap();
        assert!(!ls.arcs.is_empty());
        // Every arc point lies on one of the two circles.
        for arc in &ls.arcs {
            for j in 0..arc.len() {
                let z = arc.point(j);
                let d1 = ((z - Complex64::new(1.0, 0.0)).norm() - 1.0).abs();
                let d2 = ((z - Complex64::new(-1.0, 0.0)).norm() - 1.0).abs();
                assert!(d1.min(d2) < 1e-6, "point {z} off both circles");
            }
        }
        // Both circles are covered: check a probe point on each.
        for probe in [Complex64::new(2.0, 0.0), Complex64::new(-2.0, 0.0)] {
            let d = ls.distance_to_arcs(probe);
            assert!(d < 0.05, "circle through {probe} not traced, distance {d}");
        }
        // No isolated points: constant coefficients have no zeros.
        assert!(ls.isolated.is_empty());
    }

    #[test]
    fn limset2_small_a_arc_endpoints() {
        let fam = presets::limset2_family(0.5, 128);
        let cfg = TraceConfig::with_resolution(400);
        let ls = trace_limit_set(&fam, &cfg).unwrap();
        // Three arcs meet at +/- i sqrt(1 - a^2) = +/- 0.8660i.
        let ends = Complex64::new(0.0, (1.0f64 - 0.25).sqrt());
        let cell = (ls.bbox.2 - ls.bbox.0) / 400.0;
        let mut found = 0;
        for arc in &ls.arcs {
            if arc.closed || arc.is_empty() {
                continue;
            }
            for endpoint in [arc.point(0), arc.point(arc.len() - 1)] {
                let d = (endpoint - ends).norm().min((endpoint + ends).norm());
                if d <= 2.0 * cell {
                    found += 1;
                }
            }
        }
        assert!(found >= 6, "only {found} arc ends near the triple points");
    }

    #[test]
    fn limset2_large_a_closed_curves() {
        let fam = presets::limset2_family(1.5, 128);
        let cfg = TraceConfig::with_resolution(400);
        let ls = trace_limit_set(&fam, &cfg).unwrap();
        // One closed circle |z + 1.5| = 1 and one closed quartic in Re z > 0.
        let mut have_circle = false;
        let mut have_quartic = false;
        for arc in &ls.arcs {
            if !arc.closed || arc.len() < 20 {
                continue;
            }
            let on_circle = (0..arc.len()).all(|j| {
                ((arc.point(j) + Complex64::new(1.5, 0.0)).norm() - 1.0).abs() < 1e-6
            });
            let right_half = (0..arc.len()).all(|j| arc.point(j).re > 0.0);
            if on_circle {
                have_circle = true;
            }
            if right_half {
                // |z^2 - a^2| = 1 on the quartic
                let on_quartic = (0..arc.len()).all(|j| {
                    let z = arc.point(j);
                    ((z * z - Complex64::new(2.25, 0.0)).norm() - 1.0).abs() < 1e-6
                });
                assert!(on_quartic);
                have_quartic = true;
            }
        }
        assert!(have_circle, "full circle |z+a|=1 missing");
        assert!(have_quartic, "closed quartic in the right half plane missing");
    }

    #[test]
    fn single_member_family_has_no_arcs() {
        let fam = AnalyticFamily::new(vec![AnalyticMember::new(
            "only",
            ComplexPoly::from_f64_coeffs(&[(1.0, 0.0)], 128),
            vec![PowerFactor {
                alpha: BigComplex::zero(128),
                beta: BigComplex::one(128),
                e: 1,
            }],
        )]);
        let ls = trace_limit_set(&fam, &TraceConfig::with_resolution(64)).unwrap();
        assert!(ls.arcs.is_empty());
    }

    #[test]
    fn duplicate_channel_degeneracy_detected() {
        let mk = |label: &str| {
            AnalyticMember::new(
                label,
                ComplexPoly::from_f64_coeffs(&[(1.0, 0.0)], 128),
                vec![PowerFactor {
                    alpha: BigComplex::from_f64s(0.3, 0.0, 128),
                    beta: BigComplex::one(128),
                    e: 1,
                }],
            )
        };
        let fam = AnalyticFamily::new(vec![mk("a"), mk("b")]);
        let err = trace_limit_set(&fam, &TraceConfig::with_resolution(64)).unwrap_err();
        assert!(format!("{err}").contains("degenerate"));
    }

    #[test]
    fn h2k1_isolated_point_at_gamma() {
        let spec = presets::h2k1_spec();
        let d = crate::graph::decompose(&spec).unwrap();
        let pencil = crate::pencil::reduce(&d, 128).unwrap();
        let sf = crate::pencil::subset_coefficients(&pencil).unwrap();
        let fam = family_from_subsets(&sf).unwrap();
        let (iso, _amb) = isolated_limits(&fam).unwrap();
        assert_eq!(iso.len(), 1);
        let pt = &iso[0];
        assert!((pt.z() - Complex64::new(5.0, 0.0)).norm() < 1e-9);
        // |f_sigma(5)| = 18/6 vs 12/6, 9/6 in the subset normalization:
        // margin = 1 - 12/18 = 1/3.
        assert!((pt.margin - (1.0 - 12.0 / 18.0)).abs() < 1e-9);
    }

    #[test]
    fn h2k1_circles_match_closed_forms() {
        let spec = presets::h2k1_spec();
        let d = crate::graph::decompose(&spec).unwrap();
        let pencil = crate::pencil::reduce(&d, 128).unwrap();
        let sf = crate::pencil::subset_coefficients(&pencil).unwrap();
        let fam = family_from_subsets(&sf).unwrap();
        let curves = analytic_circles(&fam);
        // Expect circles |z-2|=2, |z+1|=3, |z-4.4|=3.6 among the pairs.
        let mut want = vec![
            (Complex64::new(2.0, 0.0), 2.0),
            (Complex64::new(-1.0, 0.0), 3.0),
            (Complex64::new(4.4, 0.0), 3.6),
        ];
        for c in &curves {
            if let CurveKind::Circle { center, radius } = c.kind {
                let ctr = Complex64::new(center.0, center.1);
                want.retain(|(wc, wr)| !((ctr - wc).norm() < 1e-9 && (radius - wr).abs() < 1e-9));
            }
        }
        assert!(want.is_empty(), "missing circles: {want:?}");
    }

    #[test]
    fn equal_beta_pair_gives_line() {
        // Two loop channels with |beta1| = |beta2|: the cross pair curve is a
        // straight line.
        let prec = 128;
        let mk = |alpha: f64, label: &str| {
            AnalyticMember::new(
                label,
                ComplexPoly::from_f64_coeffs(&[(1.0, 0.0)], prec),
                vec![PowerFactor {
                    alpha: BigComplex::from_f64s(alpha, 0.0, prec),
                    beta: BigComplex::from_f64s(2.0, 0.0, prec),
                    e: 1,
                }],
            )
        };
        let fam = AnalyticFamily::new(vec![mk(1.0, "a"), mk(-1.0, "b")]);
        let curves = analytic_circles(&fam);
        assert!(matches!(curves[0].kind, CurveKind::Line { .. }));
    }

    #[test]
    fn h2k2_pair_is_quartic() {
        let spec = presets::h2k2_spec();
        let d = crate::graph::decompose(&spec).unwrap();
        let pencil = crate::pencil::reduce(&d, 128).unwrap();
        let sf = crate::pencil::subset_coefficients(&pencil).unwrap();
        let fam = family_from_subsets(&sf).unwrap();
        let curves = analytic_circles(&fam);
        assert_eq!(curves.len(), 1);
        match &curves[0].kind {
            CurveKind::Other { description } => {
                assert!(description.contains("^1"), "{description}");
            }
            other => panic!("expected a quartic descriptor, got {other:?}"),
        }
    }

    #[test]
    fn traced_arcs_lie_on_analytic_circles() {
        let spec = presets::h2k1_spec();
        let d = crate::graph::decompose(&spec).unwrap();
        let pencil = crate::pencil::reduce(&d, 128).unwrap();
        let sf = crate::pencil::subset_coefficients(&pencil).unwrap();
        let fam = family_from_subsets(&sf).unwrap();
        let ls = trace_limit_set(&fam, &TraceConfig::with_resolution(300)).unwrap();
        let curves = analytic_circles(&fam);
        for arc in &ls.arcs {
            let curve = curves.iter().find(|c| c.pair == arc.pair).unwrap();
            if let CurveKind::Circle { center, radius } = curve.kind {
                let ctr = Complex64::new(center.0, center.1);
                for j in 0..arc.len() {
                    let d = ((arc.point(j) - ctr).norm() - radius).abs();
                    assert!(d < 1e-6, "arc point off its circle by {d}");
                }
            }
        }
    }

    #[test]
    fn lemniscate_density_vanishes_at_origin() {
        let fam = presets::lemniscate_family(0.7, 128);
        let ls = trace_limit_set(&fam, &TraceConfig::with_resolution(500)).unwrap();
        // Total winding over all arcs: the degree-2n family puts density 2
        // across the whole curve.
        let mut total = 0.0;
        for arc in &ls.arcs {
            let l = arc.total_length();
            let di = density_integral(arc, 0.0, l).unwrap();
            total += di.value;
        }
        assert!((total - 2.0).abs() < 0.1, "total density integral {total}");
        // Density near z = 0 is far below the density near z = sqrt(2).
        let mut rho_near_0: f64 = f64::INFINITY;
        let mut rho_near_s2: f64 = 0.0;
        for arc in &ls.arcs {
            for j in 0..arc.len() {
                let z = arc.point(j);
                if z.norm() < 0.05 {
                    rho_near_0 = rho_near_0.min(arc.rho[j]);
                }
                if (z - Complex64::new(2f64.sqrt(), 0.0)).norm() < 0.05 {
                    rho_near_s2 = rho_near_s2.max(arc.rho[j]);
                }
            }
        }
        // Analytic value at sqrt(2): theta = u along the curve and
        // |dz/du| = |1+e^{iu}|^(-1/2)/2, so rho(0) = 2 sqrt(2)/(2 pi).
        let want = 2f64.sqrt() / std::f64::consts::PI;
        assert!(
            (rho_near_s2 - want).abs() < 0.03,
            "rho near sqrt2: {rho_near_s2} vs {want}"
        );
        assert!(rho_near_0 < 0.08, "rho near 0: {rho_near_0}");
    }

    #[test]
    fn density_integral_matches_theta_increment() {
        let fam = presets::limset_family(128);
        let ls = trace_limit_set(&fam, &TraceConfig::with_resolution(300)).unwrap();
        let arc = ls
            .arcs
            .iter()
            .max_by(|a, b| a.total_length().partial_cmp(&b.total_length()).unwrap())
            .unwrap();
        let l = arc.total_length();
        let (a, b) = (0.2 * l, 0.7 * l);
        let di = density_integral(arc, a, b).unwrap();
        assert!(!di.endpoint_warning);
        let want = theta_increment(arc, a, b);
        assert!((di.value - want).abs() < 1e-3, "{} vs {}", di.value, want);
        // Degenerate interval integrates to zero.
        assert_eq!(density_integral(arc, a, a).unwrap().value, 0.0);
        // Touching the endpoint raises the warning flag.
        assert!(density_integral(arc, 0.0, b).unwrap().endpoint_warning);
    }

    #[test]
    fn theta_monotone_and_rho_positive() {
        let fam = presets::limset_family(128);
        let ls = trace_limit_set(&fam, &TraceConfig::with_resolution(300)).unwrap();
        for arc in &ls.arcs {
            for j in 1..arc.len() {
                assert!(arc.theta[j] >= arc.theta[j - 1], "theta not monotone");
            }
            for &r in &arc.rho {
                assert!(r >= 0.0, "negative density sample");
            }
            let interior = &arc.rho[1..arc.len().saturating_sub(1)];
            assert!(interior.iter().all(|&r| r > 0.0), "vanishing interior density");
        }
    }

    #[test]
    fn tie_symmetry_under_label_swap() {
        // Tracing with members listed in reverse order yields the same arc
        // point sets.
        let fam = presets::limset2_family(0.5, 128);
        let mut members_rev: Vec<AnalyticMember> = fam.members.clone();
        members_rev.reverse();
        let fam_rev = AnalyticFamily::new(members_rev);
        let cfg = TraceConfig::with_resolution(200);
        let a = trace_limit_set(&fam, &cfg).unwrap();
        let b = trace_limit_set(&fam_rev, &cfg).unwrap();
        assert_eq!(a.arcs.len(), b.arcs.len());
        let key = |ls: &LimitSet| {
            let mut pts: Vec<(u64, u64)> = ls
                .arcs
                .iter()
                .flat_map(|arc| {
                    arc.points
                        .iter()
                        .map(|p| (p.0.to_bits(), p.1.to_bits()))
                        .collect::<Vec<_>>()
                })
                .collect();
            pts.sort_unstable();
            pts
        };
        assert_eq!(key(&a), key(&b), "arc point sets differ under relabeling");
    }

    #[test]
    fn scaling_invariance_of_arcs_and_isolated_points() {
        let spec = presets::h2k1_spec();
        let d = crate::graph::decompose(&spec).unwrap();
        let pencil = crate::pencil::reduce(&d, 128).unwrap();
        let sf = crate::pencil::subset_coefficients(&pencil).unwrap();
        let fam = family_from_subsets(&sf).unwrap();
        let scale = BigComplex::from_f64s(3.7, 0.0, 128);
        let scaled_members: Vec<AnalyticMember> = fam
            .members
            .iter()
            .map(|m| AnalyticMember::new(&m.label, m.coeff.scale(&scale), m.factors.clone()))
            .collect();
        let fam_scaled = AnalyticFamily::new(scaled_members);
        let cfg = TraceConfig::with_resolution(200);
        let a = trace_limit_set(&fam, &cfg).unwrap();
        let b = trace_limit_set(&fam_scaled, &cfg).unwrap();
        // Arcs bit-identical.
        let pts = |ls: &LimitSet| {
            ls.arcs
                .iter()
                .flat_map(|arc| arc.points.iter().map(|p| (p.0.to_bits(), p.1.to_bits())))
                .collect::<Vec<_>>()
        };
        assert_eq!(pts(&a), pts(&b));
        // Isolated points identical to tolerance.
        assert_eq!(a.isolated.len(), b.isolated.len());
        for (x, y) in a.isolated.iter().zip(b.isolated.iter()) {
            assert!((x.z() - y.z()).norm() < 1e-12);
            assert!((x.margin - y.margin).abs() < 1e-12);
        }
    }

    #[test]
    fn maximum_principle_side_rule() {
        // Crossing an arc of pair (r,s) flips which member is larger.
        let fam = presets::limset_family(128);
        let ls = trace_limit_set(&fam, &TraceConfig::with_resolution(300)).unwrap();
        let arc = ls.arcs.iter().find(|a| a.len() > 20).unwrap();
        let j = arc.len() / 2;
        let z = arc.point(j);
        let t = arc.point(j + 1) - arc.point(j - 1);
        let nrm = Complex64::new(0.0, 1.0) * t / t.norm();
        let eps = 1e-4;
        let (r, s) = arc.pair;
        let d_plus = fam.log_mag(r, z + nrm * eps) - fam.log_mag(s, z + nrm * eps);
        let d_minus = fam.log_mag(r, z - nrm * eps) - fam.log_mag(s, z - nrm * eps);
        assert!(
            d_plus * d_minus < 0.0,
            "dominance does not flip across the arc"
        );
    }

    #[test]
    fn family_from_subsets_empty_member_is_unit() {
        let spec = presets::h2k2_spec();
        let d = crate::graph::decompose(&spec).unwrap();
        let pencil = crate::pencil::reduce(&d, 128).unwrap();
        let sf = crate::pencil::subset_coefficients(&pencil).unwrap();
        let fam = family_from_subsets(&sf).unwrap();
        assert_eq!(fam.len(), 2);
        // The empty-subset member normalizes to exactly 1 everywhere.
        let empty_idx = (0..fam.len()).find(|&r| fam.label(r) == "{}").unwrap();
        for z in [Complex64::new(0.3, 1.0), Complex64::new(-2.0, 0.1)] {
            assert_eq!(fam.log_mag(empty_idx, z), 0.0);
        }
    }
}
