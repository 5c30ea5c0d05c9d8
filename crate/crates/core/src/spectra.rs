//! Spectra of the lengthened matrices: eigenvalues are roots of the factored
//! family `F_n`, found by the simultaneous iteration seeded from the traced
//! limit set and escalated through the precision ladder until residuals pass.
//! Dense linear algebra appears only in the cross-check oracles, the
//! inverse-iteration eigenvector solver and the resolvent grid.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bignum::{BigComplex, PREC_LADDER};
use crate::graph::{assemble, GraphSpec};
use crate::limitset::{
    family_from_subsets, isolated_limits, trace_limit_set, AnalyticFamily, ArcSample, LimitSet,
    TraceConfig,
};
use crate::linalg::{lu_factor, mat_vec, Lu, Mat, Scalar};
use crate::par;
use crate::poly::{aberth_roots, ring_seeds, AberthConfig, RootSet};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SpectrumConfig {
    /// First rung of the precision ladder to try.
    pub start_prec: u32,
    pub max_prec: u32,
    /// Grid resolution for the limit-set trace used in seeding and
    /// classification.
    pub grid_resolution: usize,
    pub max_iters: usize,
    /// An eigenvalue is "on" an arc within `arc_class_factor / n`.
    pub arc_class_factor: f64,
    /// Isolated radius `iso_class_factor / margin * (1 - margin)^n`.
    pub iso_class_factor: f64,
    pub seed: u64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            start_prec: 53,
            max_prec: 512,
            grid_resolution: 800,
            max_iters: 600,
            arc_class_factor: 5.0,
            iso_class_factor: 10.0,
            seed: 1,
        }
    }
}

impl SpectrumConfig {
    pub fn fast(grid_resolution: usize) -> Self {
        SpectrumConfig {
            grid_resolution,
            ..Default::default()
        }
    }
}

/// How an eigenvalue relates to the predicted limit objects.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Classification {
    Isolated { index: usize, dist: f64 },
    OnArc { arc: usize, dist: f64 },
    Unclassified,
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub n: u32,
    pub dim: usize,
    pub roots: RootSet,
    /// One entry per distinct root, aligned with `roots.roots`.
    pub classes: Vec<Classification>,
    pub precision_used: u32,
}

/// A spectrum computation together with the limit prediction it was checked
/// against.
pub struct SpectrumRun {
    pub result: SpectrumResult,
    pub limit_set: LimitSet,
    pub family: AnalyticFamily,
}

impl AnalyticFamily {
    /// `(F_n(z), F_n'(z), scale)` evaluated in factored form.
    pub fn eval_f(
        &self,
        z: &BigComplex,
        n: u32,
    ) -> (BigComplex, BigComplex, crate::bignum::BigReal) {
        let prec = z.prec();
        let p = prec as usize;
        let rm = astro_float::RoundingMode::ToEven;
        let mut f_val = BigComplex::zero(prec);
        let mut f_der = BigComplex::zero(prec);
        let mut scale = crate::bignum::real_from_f64(0.0, prec);
        for m in &self.members {
            // U = prod_i g_i^(n e_i), dU by the product rule.
            let mut g_pow = Vec::with_capacity(m.factors.len());
            let mut g_pow_d = Vec::with_capacity(m.factors.len());
            for fac in &m.factors {
                let k = n as u64 * fac.e as u64;
                let g = z.sub(&fac.alpha).div(&fac.beta);
                let gm1 = if k >= 1 { g.powi(k - 1) } else { BigComplex::one(prec) };
                let gm = gm1.mul(&g);
                let dgm = gm1.scale_f64(k as f64).div(&fac.beta);
                g_pow.push(gm);
                g_pow_d.push(dgm);
            }
            let mut u = BigComplex::one(prec);
            for gp in &g_pow {
                u = u.mul(gp);
            }
            let mut du = BigComplex::zero(prec);
            for i in 0..g_pow.len() {
                let mut rest = g_pow_d[i].clone();
                for (j, gp) in g_pow.iter().enumerate() {
                    if j != i {
                        rest = rest.mul(gp);
                    }
                }
                du = du.add(&rest);
            }
            let (av, ad) = m.coeff.eval_with_derivative(z);
            f_val = f_val.add(&av.mul(&u));
            f_der = f_der.add(&ad.mul(&u)).add(&av.mul(&du));
            scale = scale.add(&m.coeff.eval_abs_scale(z).mul(&u.abs(), p, rm), p, rm);
        }
        (f_val, f_der, scale)
    }

    /// Degree of `F_n` as a polynomial in `z`, with a check that the leading
    /// coefficients of tied members do not cancel.
    pub fn fn_degree_checked(&self, n: u32, prec: u32) -> Result<usize> {
        let mut best = 0usize;
        for m in &self.members {
            let da = m.coeff.degree().ok_or_else(|| {
                Error::numeric("family member with identically zero coefficient")
            })?;
            let df: usize = m
                .factors
                .iter()
                .map(|f| f.e as usize * n as usize)
                .sum();
            best = best.max(da + df);
        }
        let mut lead = BigComplex::zero(prec);
        for m in &self.members {
            let da = m.coeff.degree().unwrap();
            let df: usize = m
                .factors
                .iter()
                .map(|f| f.e as usize * n as usize)
                .sum();
            if da + df == best {
                let mut c = m.coeff.leading().unwrap().with_prec(prec);
                for f in &m.factors {
                    c = c.div(&f.beta.powi(n as u64 * f.e as u64).with_prec(prec));
                }
                lead = lead.add(&c);
            }
        }
        if lead.is_zero() {
            return Err(Error::numeric(
                "degenerate leading term: top-degree members cancel",
            ));
        }
        Ok(best)
    }
}

fn empty_limitset(fam: &AnalyticFamily, note: String) -> Result<LimitSet> {
    let (isolated, ambiguous) = isolated_limits(fam)?;
    let bbox = fam.initial_bbox()?;
    Ok(LimitSet {
        arcs: Vec::new(),
        isolated,
        ambiguous,
        bbox,
        diagnostics: vec![note],
    })
}

/// Seeds: predicted isolated points first, then samples along the arcs
/// jittered by 1/n across the curve, then a fallback ring, trimmed or padded
/// to the exact root count.
fn seeds_from_prediction(
    ls: &LimitSet,
    degree: usize,
    n: u32,
    fallback_radius: f64,
    prec: u32,
) -> Vec<BigComplex> {
    let mut seeds: Vec<Complex64> = Vec::with_capacity(degree);
    for pt in &ls.isolated {
        seeds.push(pt.z() + Complex64::new(1e-3, 1e-3) * (1.0 + pt.z().norm()));
    }
    let total_len = ls.total_arc_length();
    if total_len > 0.0 {
        let jitter = 1.0 / n as f64;
        for arc in &ls.arcs {
            let share = arc.total_length() / total_len;
            let count = ((degree as f64 - ls.isolated.len() as f64) * share).ceil() as usize;
            if count == 0 || arc.len() < 2 {
                continue;
            }
            for k in 0..count {
                if seeds.len() >= degree {
                    break;
                }
                let s = arc.total_length() * (k as f64 + 0.5) / count as f64;
                let idx = match arc
                    .arclength
                    .binary_search_by(|x| x.partial_cmp(&s).unwrap())
                {
                    Ok(i) => i,
                    Err(i) => i.min(arc.len() - 1),
                };
                let z = arc.point(idx);
                let nb = arc.point(if idx + 1 < arc.len() { idx + 1 } else { idx - 1 });
                let t = nb - z;
                let nrm = if t.norm() > 0.0 {
                    Complex64::new(0.0, 1.0) * t / t.norm()
                } else {
                    Complex64::new(0.0, 1.0)
                };
                let side = if k % 2 == 0 { 1.0 } else { -1.0 };
                seeds.push(z + nrm * (jitter * side));
            }
        }
    }
    let mut out: Vec<BigComplex> = seeds
        .into_iter()
        .take(degree)
        .map(|z| BigComplex::from_c64(z, prec))
        .collect();
    if out.len() < degree {
        let missing = degree - out.len();
        out.extend(ring_seeds(
            Complex64::new(0.0, 0.0),
            fallback_radius,
            missing,
            prec,
        ));
    }
    out
}

fn classify_roots(
    roots: &RootSet,
    ls: &LimitSet,
    n: u32,
    cfg: &SpectrumConfig,
) -> Vec<Classification> {
    let arc_radius = cfg.arc_class_factor / n as f64;
    roots
        .roots
        .iter()
        .map(|root| {
            let z = root.value.to_c64();
            let mut best_iso: Option<(usize, f64, f64)> = None;
            for (i, pt) in ls.isolated.iter().enumerate() {
                let d = (z - pt.z()).norm();
                if best_iso.map(|(_, bd, _)| d < bd).unwrap_or(true) {
                    best_iso = Some((i, d, pt.margin));
                }
            }
            if let Some((i, d, margin)) = best_iso {
                let radius = (cfg.iso_class_factor / margin
                    * (1.0 - margin).powi(n as i32))
                .max(1e-8 * (1.0 + z.norm()));
                if d <= radius {
                    return Classification::Isolated { index: i, dist: d };
                }
            }
            let mut best_arc: Option<(usize, f64)> = None;
            for (i, arc) in ls.arcs.iter().enumerate() {
                let d = arc.distance(z);
                if best_arc.map(|(_, bd)| d < bd).unwrap_or(true) {
                    best_arc = Some((i, d));
                }
            }
            if let Some((i, d)) = best_arc {
                if d <= arc_radius {
                    return Classification::OnArc { arc: i, dist: d };
                }
            }
            Classification::Unclassified
        })
        .collect()
}

/// Root-find `F_n` for a family built fresh at each precision rung.
pub fn family_roots(
    builder: &dyn Fn(u32) -> Result<AnalyticFamily>,
    n: u32,
    cfg: &SpectrumConfig,
) -> Result<SpectrumRun> {
    if n < 1 {
        return Err(Error::numeric("n must be >= 1"));
    }
    let fam_trace = builder(128)?;
    let limit_set = match trace_limit_set(&fam_trace, &TraceConfig::with_resolution(cfg.grid_resolution))
    {
        Ok(ls) => ls,
        Err(e) => empty_limitset(&fam_trace, format!("trace skipped: {e}"))?,
    };
    let degree = fam_trace.fn_degree_checked(n, 128)?;
    let fallback_radius = {
        let (x0, y0, x1, y1) = limit_set.bbox;
        let corner = [
            Complex64::new(x0, y0),
            Complex64::new(x0, y1),
            Complex64::new(x1, y0),
            Complex64::new(x1, y1),
        ];
        corner.iter().map(|z| z.norm()).fold(0.0, f64::max) * 1.02
    };

    let mut last_err = None;
    for prec in PREC_LADDER {
        if prec < cfg.start_prec || prec > cfg.max_prec {
            continue;
        }
        let fam = builder(prec)?;
        let seeds = seeds_from_prediction(&limit_set, degree, n, fallback_radius, prec);
        let eval = |z: &BigComplex| fam.eval_f(z, n);
        let mut acfg = AberthConfig::with_prec(prec);
        acfg.max_iters = cfg.max_iters;
        match aberth_roots(&eval, degree, &seeds, &acfg) {
            Ok(roots) => {
                let classes = classify_roots(&roots, &limit_set, n, cfg);
                return Ok(SpectrumRun {
                    result: SpectrumResult {
                        n,
                        dim: degree,
                        precision_used: prec,
                        classes,
                        roots,
                    },
                    limit_set,
                    family: fam_trace,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::numeric("empty precision ladder")))
}

/// Eigenvalues of `A(n)` through the reduced pencil.
pub fn eigenvalues(spec: &GraphSpec, n: u32, cfg: &SpectrumConfig) -> Result<SpectrumRun> {
    let spec = spec.clone();
    let builder = move |prec: u32| -> Result<AnalyticFamily> {
        let d = crate::graph::decompose(&spec)?;
        let pencil = crate::pencil::reduce(&d, prec)?;
        let fam = crate::pencil::subset_coefficients(&pencil)?;
        family_from_subsets(&fam)
    };
    family_roots(&builder, n, cfg)
}

/// Per-sector root counts inside the annulus `1-delta < |z| < 1+delta`.
#[derive(Clone, Debug, Serialize)]
pub struct SectorCount {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Fraction over all roots (with multiplicity).
    pub fraction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorStats {
    pub delta: f64,
    pub total_roots: usize,
    pub in_annulus: usize,
    pub sectors: Vec<SectorCount>,
}

pub fn sector_statistics(
    result: &SpectrumResult,
    delta: f64,
    sectors: &[(f64, f64)],
) -> Result<SectorStats> {
    let all = result.roots.to_c64_with_multiplicity();
    if all.is_empty() {
        return Err(Error::numeric("sector statistics on an empty spectrum"));
    }
    let total = all.len();
    let tau = 2.0 * std::f64::consts::PI;
    let in_annulus: Vec<Complex64> = all
        .iter()
        .cloned()
        .filter(|z| {
            let r = z.norm();
            r > 1.0 - delta && r < 1.0 + delta
        })
        .collect();
    let sectors = sectors
        .iter()
        .map(|&(lo, hi)| {
            let count = in_annulus
                .iter()
                .filter(|z| {
                    let mut a = z.arg();
                    if a < 0.0 {
                        a += tau;
                    }
                    let mut l = lo.rem_euclid(tau);
                    let mut span = hi - lo;
                    if span >= tau {
                        return true;
                    }
                    if span < 0.0 {
                        span += tau;
                    }
                    let mut rel = a - l;
                    if rel < 0.0 {
                        rel += tau;
                    }
                    l = 0.0;
                    let _ = l;
                    rel < span
                })
                .count();
            SectorCount {
                lo,
                hi,
                count,
                fraction: count as f64 / total as f64,
            }
        })
        .collect();
    Ok(SectorStats {
        delta,
        total_roots: total,
        in_annulus: in_annulus.len(),
        sectors,
    })
}

/// Number of eigenvalues within `eps` of the sub-arc `[from_s, to_s]`.
pub fn tube_count(
    result: &SpectrumResult,
    arc: &ArcSample,
    from_s: f64,
    to_s: f64,
    eps: f64,
) -> Result<usize> {
    if from_s > to_s || from_s < 0.0 || to_s > arc.total_length() {
        return Err(Error::numeric("tube_count: bad sub-arc range"));
    }
    // The polyline must resolve the requested radius.
    let mut max_gap = 0.0f64;
    for j in 1..arc.len() {
        if arc.arclength[j] >= from_s && arc.arclength[j - 1] <= to_s {
            max_gap = max_gap.max(arc.arclength[j] - arc.arclength[j - 1]);
        }
    }
    if eps < max_gap {
        return Err(Error::numeric(format!(
            "tube radius {eps} below the polyline resolution {max_gap}"
        )));
    }
    if from_s == to_s {
        return Ok(0);
    }
    let sub: Vec<Complex64> = (0..arc.len())
        .filter(|&j| arc.arclength[j] >= from_s && arc.arclength[j] <= to_s)
        .map(|j| arc.point(j))
        .collect();
    if sub.len() < 2 {
        return Ok(0);
    }
    let dist = |z: Complex64| -> f64 {
        let mut best = f64::INFINITY;
        for w in sub.windows(2) {
            let d = {
                let (a, b) = (w[0], w[1]);
                let ab = b - a;
                let den = ab.norm_sqr();
                let t = (((z - a).re * ab.re + (z - a).im * ab.im) / den).clamp(0.0, 1.0);
                (z - (a + ab * t)).norm()
            };
            best = best.min(d);
        }
        best
    };
    Ok(result
        .roots
        .to_c64_with_multiplicity()
        .into_iter()
        .filter(|&z| dist(z) <= eps)
        .count())
}

/// Eigenvector by inverse iteration with a jittered shift.
#[derive(Clone, Debug)]
pub struct EigPair {
    pub lambda: Complex64,
    pub v: Vec<Complex64>,
    pub residual: f64,
    pub prec: u32,
}

fn inverse_iteration<S: Scalar>(
    a: &Mat<S>,
    shifted_lu: &Lu<S>,
    v0: Vec<S>,
    lambda: &S,
    iters: usize,
) -> (Vec<S>, f64) {
    let mut v = v0;
    for _ in 0..iters {
        let w = shifted_lu.solve(&v);
        let norm = w.iter().map(|x| x.mag_sq()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        v = w.iter().map(|x| x.s_scale_f64(1.0 / norm)).collect();
    }
    // residual ||A v - lambda v||_2 with ||v||_2 = 1
    let av = mat_vec(a, &v);
    let mut res = 0.0f64;
    for (avi, vi) in av.iter().zip(v.iter()) {
        let r = avi.s_sub(&vi.s_mul(lambda));
        res += r.mag_sq();
    }
    (v, res.sqrt())
}

pub fn eigenvector(
    spec: &GraphSpec,
    n: u32,
    lambda: Complex64,
    cfg: &SpectrumConfig,
) -> Result<EigPair> {
    let tol = 1e-8;
    let jitter = 2f64.powi(-30);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // f64 attempt first.
    let a64 = assemble(spec, n, 53)?.to_dense_c64();
    let dim = a64.len();
    let v0: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let shift = if lambda.norm() > 0.0 {
        lambda * (1.0 + jitter)
    } else {
        Complex64::new(jitter, 0.0)
    };
    let mut shifted = a64.clone();
    for i in 0..dim {
        shifted[i][i] -= shift;
    }
    let lu = lu_factor(shifted);
    let (v, residual) = inverse_iteration(&a64, &lu, v0.clone(), &lambda, 2);
    if residual <= tol {
        return Ok(EigPair {
            lambda,
            v,
            residual,
            prec: 53,
        });
    }
    // A few more rounds at f64 before escalating.
    let (v, residual) = inverse_iteration(&a64, &lu, v, &lambda, 4);
    if residual <= tol {
        return Ok(EigPair {
            lambda,
            v,
            residual,
            prec: 53,
        });
    }

    // High-precision fallback.
    let prec = 128;
    let abig = assemble(spec, n, prec)?.to_dense_big();
    let lam = BigComplex::from_c64(lambda, prec);
    let shift = lam.scale_f64(1.0 + jitter);
    let shift = if lam.is_zero() {
        BigComplex::from_f64s(jitter, 0.0, prec)
    } else {
        shift
    };
    let mut shifted: Mat<BigComplex> = abig.clone();
    for i in 0..dim {
        shifted[i][i] = shifted[i][i].sub(&shift);
    }
    let lu = lu_factor(shifted);
    let v0big: Vec<BigComplex> = v0.iter().map(|z| BigComplex::from_c64(*z, prec)).collect();
    let (vbig, residual) = inverse_iteration(&abig, &lu, v0big, &lam, 4);
    if residual <= tol {
        return Ok(EigPair {
            lambda,
            v: vbig.iter().map(|z| z.to_c64()).collect(),
            residual,
            prec,
        });
    }
    Err(Error::numeric(format!(
        "inverse iteration stagnated: residual {residual:.3e} > {tol:.0e}; \
         the shift is likely not an eigenvalue of A({n})"
    )))
}

/// Per-channel localization diagnostics for one eigen-pair.
#[derive(Clone, Debug, Serialize)]
pub struct ChannelLocalization {
    pub channel: usize,
    /// Centre `alpha_r` and radius `|beta_r|` of the channel circle.
    pub circle_center: (f64, f64),
    pub circle_radius: f64,
    pub dist_to_circle: f64,
    /// |(lambda - alpha_r)/beta_r|
    pub ratio: f64,
    /// min(ratio, 1/ratio) in (0, 1]
    pub decay: f64,
    pub direction: String,
    pub max_abs: f64,
    /// max_i |beta v_{i+1} - (lambda - alpha) v_i| over the channel interior,
    /// with ||v|| = 1.
    pub recurrence_residual: f64,
    /// Geometric decay, bounded ratio, or zero channel: which certificate of
    /// the localization dichotomy this channel satisfies.
    pub certificate: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalizationReport {
    pub lambda: (f64, f64),
    pub n: u32,
    pub channels: Vec<ChannelLocalization>,
    /// `(N, ||v restricted to the depth-N channel interior||_2)` for a
    /// doubling ladder of N.
    pub junction_mass: Vec<(usize, f64)>,
    /// Checked only when every channel decays: mass^2 <= h c^(2(N-1))/(1-c^2).
    pub junction_mass_bound_ok: Option<bool>,
    pub residual: f64,
}

pub fn localization_report(
    spec: &GraphSpec,
    n: u32,
    pair: &EigPair,
) -> Result<LocalizationReport> {
    let m = assemble(spec, n, 53)?;
    let lambda = pair.lambda;
    let v = &pair.v;
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let zero_tol = 1e-12 * norm.max(1e-300);
    let flat_band = 5.0 / n as f64;

    let mut channels = Vec::new();
    for (r, ch) in spec.channels.iter().enumerate() {
        let alpha = ch.alpha.to_c64();
        let beta = ch.beta.to_c64();
        let len = m.channel_len(r);
        let base = m
            .row_of(&crate::graph::VertexKey::Channel { channel: r, pos: 0 })
            .unwrap();
        let seg = &v[base..base + len];
        let max_abs = seg.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let ratio = ((lambda - alpha) / beta).norm();
        let decay = ratio.min(1.0 / ratio.max(1e-300)).min(1.0);
        let dist_to_circle = ((lambda - alpha).norm() - beta.norm()).abs();

        let mut rec_res = 0.0f64;
        for i in 0..len.saturating_sub(1) {
            let d = (beta * seg[i + 1] - (lambda - alpha) * seg[i]).norm();
            rec_res = rec_res.max(d);
        }

        let (direction, certificate) = if max_abs <= zero_tol {
            ("zero".to_string(), "zero-channel".to_string())
        } else if dist_to_circle <= flat_band * beta.norm().max(1.0) {
            // Near the circle: bounded component ratios with d = e^(2a) * 1.1.
            let a = n as f64 * (ratio - 1.0).abs();
            let d = (2.0 * a).exp() * 1.1;
            let nonzero: Vec<f64> = seg
                .iter()
                .map(|z| z.norm())
                .filter(|&x| x > zero_tol)
                .collect();
            let ok = nonzero
                .iter()
                .all(|&x| nonzero.iter().all(|&y| x / y <= d && y / x <= d));
            (
                "flat".to_string(),
                if ok {
                    format!("bounded-ratio d={d:.3e}")
                } else {
                    format!("bounded-ratio FAILED d={d:.3e}")
                },
            )
        } else if ratio < 1.0 {
            // |v| shrinks along the channel.
            let slack = rec_res / beta.norm() + zero_tol;
            let ok = (0..len - 1).all(|i| seg[i + 1].norm() <= ratio * seg[i].norm() + slack);
            (
                "decaying-forward".to_string(),
                if ok {
                    format!("geometric c={decay:.4}")
                } else {
                    format!("geometric FAILED c={decay:.4}")
                },
            )
        } else {
            let slack = rec_res / (lambda - alpha).norm().max(1e-300) + zero_tol;
            let ok = (0..len - 1)
                .all(|i| seg[i].norm() <= (1.0 / ratio) * seg[i + 1].norm() + slack);
            (
                "decaying-backward".to_string(),
                if ok {
                    format!("geometric c={decay:.4}")
                } else {
                    format!("geometric FAILED c={decay:.4}")
                },
            )
        };
        channels.push(ChannelLocalization {
            channel: r,
            circle_center: (alpha.re, alpha.im),
            circle_radius: beta.norm(),
            dist_to_circle,
            ratio,
            decay,
            direction,
            max_abs,
            recurrence_residual: rec_res,
            certificate,
        });
    }

    // Junction mass ladder over N = 1, 2, 4, 8, ...
    let mut junction_mass = Vec::new();
    let max_len = (0..spec.channels.len())
        .map(|r| m.channel_len(r))
        .max()
        .unwrap_or(0);
    let mut nn = 1usize;
    while 2 * nn <= max_len + 1 {
        let mut acc = 0.0f64;
        for r in 0..spec.channels.len() {
            let len = m.channel_len(r);
            let base = m
                .row_of(&crate::graph::VertexKey::Channel { channel: r, pos: 0 })
                .unwrap();
            // 1-based positions N..=len-N
            for i in nn..=(len.saturating_sub(nn)) {
                acc += v[base + i - 1].norm_sqr();
            }
        }
        junction_mass.push((nn, acc.sqrt()));
        nn *= 2;
    }

    let all_decaying = channels
        .iter()
        .all(|c| c.direction == "decaying-forward" || c.direction == "decaying-backward");
    let junction_mass_bound_ok = if all_decaying && !channels.is_empty() {
        let c = channels.iter().map(|c| c.decay).fold(0.0f64, f64::max);
        let h = channels.len() as f64;
        Some(junction_mass.iter().all(|&(nn, mass)| {
            let bound = h * c.powi(2 * (nn as i32 - 1)) / (1.0 - c * c);
            mass * mass <= bound * (1.0 + 1e-9) + 1e-12
        }))
    } else {
        None
    };

    Ok(LocalizationReport {
        lambda: (lambda.re, lambda.im),
        n,
        channels,
        junction_mass,
        junction_mass_bound_ok,
        residual: pair.residual,
    })
}

/// log10 of the 2-norm of the resolvent on a rectangular grid, estimated by
/// power iteration on `(zI - A)^-1 (zI - A)^-H` through LU solves.
#[derive(Clone, Debug, Serialize)]
pub struct ResolventGrid {
    pub nx: usize,
    pub ny: usize,
    pub bbox: (f64, f64, f64, f64),
    /// Row-major `(re, im, log10 norm)` samples; eigenvalue hits carry
    /// `f64::INFINITY` and are skipped in exports.
    pub rows: Vec<(f64, f64, f64)>,
}

pub const RESOLVENT_DIM_CAP: usize = 400;

pub fn resolvent_grid(
    spec: &GraphSpec,
    n: u32,
    bbox: (f64, f64, f64, f64),
    nx: usize,
    ny: usize,
    probes: usize,
    seed: u64,
) -> Result<ResolventGrid> {
    let a = assemble(spec, n, 53)?;
    if a.dim > RESOLVENT_DIM_CAP {
        return Err(Error::numeric(format!(
            "resolvent grid capped at dimension {RESOLVENT_DIM_CAP}, got {}",
            a.dim
        )));
    }
    let dense = a.to_dense_c64();
    let dim = a.dim;
    let (x0, y0, x1, y1) = bbox;
    let points: Vec<Complex64> = (0..ny)
        .flat_map(|j| {
            (0..nx).map(move |i| {
                Complex64::new(
                    x0 + (x1 - x0) * (i as f64 + 0.5) / nx as f64,
                    y0 + (y1 - y0) * (j as f64 + 0.5) / ny as f64,
                )
            })
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q0: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let rows: Vec<(f64, f64, f64)> = par::map_slice(&points, |&z| {
        let m: Vec<Vec<Complex64>> = (0..dim)
            .map(|r| {
                (0..dim)
                    .map(|c| if r == c { z - dense[r][c] } else { -dense[r][c] })
                    .collect()
            })
            .collect();
        let lu = lu_factor(m);
        if lu.singular_at.is_some() {
            return (z.re, z.im, f64::INFINITY);
        }
        let mut q = q0.clone();
        let nq = q.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in q.iter_mut() {
            *x /= nq;
        }
        let mut lam = 0.0f64;
        for _ in 0..probes {
            let t = lu.solve_adjoint(&q);
            let w = lu.solve(&t);
            let nw = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if !nw.is_finite() || nw == 0.0 {
                return (z.re, z.im, f64::INFINITY);
            }
            lam = nw;
            q = w.into_iter().map(|x| x / nw).collect();
        }
        (z.re, z.im, lam.sqrt().log10())
    });
    Ok(ResolventGrid {
        nx,
        ny,
        bbox,
        rows,
    })
}

/// CSV with one row per eigenvalue: re, im, multiplicity, residual, class,
/// class_dist.
pub fn eigenvalues_to_csv(result: &SpectrumResult) -> String {
    let mut out = String::from("re,im,multiplicity,residual,class,class_dist\n");
    for (root, class) in result.roots.roots.iter().zip(result.classes.iter()) {
        let z = root.value.to_c64();
        let (cls, dist) = match class {
            Classification::Isolated { index, dist } => (format!("isolated:{index}"), *dist),
            Classification::OnArc { arc, dist } => (format!("arc:{arc}"), *dist),
            Classification::Unclassified => ("unclassified".to_string(), f64::NAN),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            z.re, z.im, root.multiplicity, root.residual, cls, dist
        ));
    }
    out
}

pub fn resolvent_to_csv(grid: &ResolventGrid) -> String {
    let mut out = String::from("re,im,log10_norm\n");
    for &(re, im, v) in &grid.rows {
        if v.is_finite() {
            out.push_str(&format!("{re},{im},{v}\n"));
        } else {
            out.push_str(&format!("{re},{im},inf\n"));
        }
    }
    out
}
