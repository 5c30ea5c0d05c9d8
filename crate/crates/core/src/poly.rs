//! Univariate complex polynomials at arbitrary precision and a simultaneous
//! (Aberth–Ehrlich) root finder driven by a black-box evaluator.
//!
//! The root finder never requires expanded coefficients: callers supply a
//! closure returning `(F(z), F'(z), scale(z))` where `scale` is the sum of
//! the magnitudes of the terms making up `F(z)`. The backward residual
//! `|F(z)| / scale(z)` is the acceptance measure, so factored forms like
//! `(z-a)^(n e)` stay well conditioned no matter how large the powers get.

use num_complex::Complex64;

use crate::bignum::{real_from_f64, real_to_f64, BigComplex, BigReal};
use crate::par;
use crate::{Error, Result};

/// Polynomial with coefficients stored lowest degree first.
///
/// The zero polynomial has an empty coefficient vector (degree `None`).
#[derive(Clone, Debug)]
pub struct ComplexPoly {
    coeffs: Vec<BigComplex>,
    prec: u32,
}

impl ComplexPoly {
    pub fn new(mut coeffs: Vec<BigComplex>, prec: u32) -> Self {
        while coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
            coeffs.pop();
        }
        ComplexPoly { coeffs, prec }
    }

    pub fn zero(prec: u32) -> Self {
        ComplexPoly {
            coeffs: Vec::new(),
            prec,
        }
    }

    pub fn constant(c: BigComplex) -> Self {
        let prec = c.prec();
        Self::new(vec![c], prec)
    }

    pub fn from_f64_coeffs(coeffs: &[(f64, f64)], prec: u32) -> Self {
        Self::new(
            coeffs
                .iter()
                .map(|&(re, im)| BigComplex::from_f64s(re, im, prec))
                .collect(),
            prec,
        )
    }

    /// Parse coefficients from decimal string pairs, lowest degree first.
    pub fn parse_coeffs(coeffs: &[(&str, &str)], prec: u32) -> Result<Self> {
        let cs = coeffs
            .iter()
            .map(|(re, im)| BigComplex::parse_parts(re, im, prec))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(cs, prec))
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[BigComplex], prec: u32) -> Self {
        let mut p = Self::new(vec![BigComplex::one(prec)], prec);
        for r in roots {
            let lin = Self::new(vec![r.neg().with_prec(prec), BigComplex::one(prec)], prec);
            p = p.mul(&lin).expect("same precision");
        }
        p
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn coeffs(&self) -> &[BigComplex] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: usize) -> BigComplex {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| BigComplex::zero(self.prec))
    }

    pub fn leading(&self) -> Option<&BigComplex> {
        self.coeffs.last()
    }

    pub fn to_c64_coeffs(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| c.to_c64()).collect()
    }

    fn check_prec(&self, rhs: &Self) -> Result<()> {
        if self.prec != rhs.prec {
            return Err(Error::numeric(format!(
                "precision-context mismatch: {} vs {} bits",
                self.prec, rhs.prec
            )));
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_prec(rhs)?;
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k).add(&rhs.coeff(k)));
        }
        Ok(Self::new(out, self.prec))
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.check_prec(rhs)?;
        if self.is_zero() || rhs.is_zero() {
            return Ok(Self::zero(self.prec));
        }
        let mut out = vec![BigComplex::zero(self.prec); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Ok(Self::new(out, self.prec))
    }

    pub fn scale(&self, s: &BigComplex) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.mul(s)).collect(), self.prec)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero(self.prec);
        }
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.scale_f64(k as f64))
            .collect();
        Self::new(out, self.prec)
    }

    /// Substitute `z -> a*z + b`.
    pub fn compose_linear(&self, a: &BigComplex, b: &BigComplex) -> Self {
        let lin = Self::new(vec![b.with_prec(self.prec), a.with_prec(self.prec)], self.prec);
        let mut acc = Self::zero(self.prec);
        for c in self.coeffs.iter().rev() {
            acc = acc
                .mul(&lin)
                .and_then(|p| p.add(&Self::constant(c.with_prec(self.prec))))
                .expect("same precision");
        }
        acc
    }

    pub fn eval(&self, z: &BigComplex) -> BigComplex {
        let mut acc = BigComplex::zero(self.prec.max(z.prec()));
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(z).add(c);
        }
        acc
    }

    pub fn eval_with_derivative(&self, z: &BigComplex) -> (BigComplex, BigComplex) {
        let p = self.prec.max(z.prec());
        let mut f = BigComplex::zero(p);
        let mut df = BigComplex::zero(p);
        for c in self.coeffs.iter().rev() {
            df = df.mul(z).add(&f);
            f = f.mul(z).add(c);
        }
        (f, df)
    }

    /// Sum of |c_k| |z|^k, the natural magnitude scale for backward residuals.
    pub fn eval_abs_scale(&self, z: &BigComplex) -> BigReal {
        let p = (self.prec.max(z.prec())) as usize;
        let rm = astro_float::RoundingMode::ToEven;
        let az = z.abs();
        let mut acc = real_from_f64(0.0, p as u32);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&az, p, rm).add(&c.abs(), p, rm);
        }
        acc
    }

    /// Drop leading coefficients whose magnitude is below `rel_eps` times the
    /// largest coefficient magnitude. Used after numeric extraction where
    /// structural zeros come out as rounding dust.
    pub fn trim_relative(&self, rel_eps: f64) -> Self {
        let mags: Vec<f64> = self.coeffs.iter().map(|c| c.abs_f64()).collect();
        let max = mags.iter().cloned().fold(0.0f64, f64::max);
        if max == 0.0 {
            return Self::zero(self.prec);
        }
        let mut coeffs = self.coeffs.clone();
        while let Some(last) = coeffs.last() {
            if last.abs_f64() <= rel_eps * max {
                coeffs.pop();
            } else {
                break;
            }
        }
        // Interior dust is snapped to exact zero as well.
        let out = coeffs
            .into_iter()
            .map(|c| {
                if c.abs_f64() <= rel_eps * max {
                    BigComplex::zero(self.prec)
                } else {
                    c
                }
            })
            .collect();
        Self::new(out, self.prec)
    }
}

/// One root with its multiplicity (cluster size) and relative backward
/// residual.
#[derive(Clone, Debug)]
pub struct Root {
    pub value: BigComplex,
    pub multiplicity: usize,
    pub residual: f64,
}

/// Roots of a degree-`total` function, multiplicities summing to `total`.
#[derive(Clone, Debug)]
pub struct RootSet {
    pub roots: Vec<Root>,
    pub total: usize,
    /// Number of multi-point clusters merged; nonzero values flag that the
    /// multiplicity assignment came from the clustering radius policy.
    pub clusters_formed: usize,
    pub precision_used: u32,
}

impl RootSet {
    pub fn multiplicity_sum(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn max_residual(&self) -> f64 {
        self.roots.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    /// All roots expanded with multiplicity, as f64 complex values.
    pub fn to_c64_with_multiplicity(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.total);
        for r in &self.roots {
            for _ in 0..r.multiplicity {
                out.push(r.value.to_c64());
            }
        }
        out
    }
}

/// Configuration for the simultaneous root iteration.
#[derive(Clone, Debug)]
pub struct AberthConfig {
    pub prec: u32,
    pub max_iters: usize,
    /// Relative backward residual accepted for every root; defaults to
    /// 2^-(prec/2).
    pub tol: Option<f64>,
    /// Cluster radius factor; points within `factor * (1 + |z|)` merge.
    pub cluster_radius_factor: f64,
}

impl AberthConfig {
    pub fn with_prec(prec: u32) -> Self {
        AberthConfig {
            prec,
            max_iters: 600,
            tol: None,
            cluster_radius_factor: 2f64.powi(-20),
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
            .unwrap_or_else(|| 2f64.powf(-(self.prec as f64) / 2.0))
    }
}

/// Evaluator contract: `(F(z), F'(z), scale(z))` with `scale` the sum of the
/// term magnitudes of `F` at `z`.
pub type EvalFn<'a> = dyn Fn(&BigComplex) -> (BigComplex, BigComplex, BigReal) + Sync + 'a;

struct IterPoint {
    z: BigComplex,
    residual: f64,
    converged: bool,
}

fn rel_residual(f: &BigComplex, scale: &BigReal) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let fmag = real_to_f64(&f.abs());
    let smag = real_to_f64(scale);
    if smag == 0.0 || !smag.is_finite() {
        // |F| <= scale by construction, so this only happens on overflow of
        // the f64 conversion; fall back to a big-float division.
        let p = f.prec() as usize;
        let q = f.abs().div(scale, p, astro_float::RoundingMode::ToEven);
        return real_to_f64(&q);
    }
    fmag / smag
}

/// Simultaneous root refinement with Jacobi-style rounds: every correction in
/// a round is a pure function of the previous round's points, so rounds can
/// be evaluated in parallel.
pub fn aberth_roots(
    eval: &EvalFn,
    degree: usize,
    seeds: &[BigComplex],
    cfg: &AberthConfig,
) -> Result<RootSet> {
    if degree == 0 {
        return Ok(RootSet {
            roots: Vec::new(),
            total: 0,
            clusters_formed: 0,
            precision_used: cfg.prec,
        });
    }
    if seeds.len() != degree {
        return Err(Error::numeric(format!(
            "root finder needs exactly {degree} seeds, got {}",
            seeds.len()
        )));
    }
    let prec = cfg.prec;
    let tol = cfg.tolerance();
    // Iteration continues until steps stall near machine precision or the
    // residual is driven to the hard floor; `tol` is only the acceptance gate.
    let eps_step = 2f64.powf(-((prec as f64) - 8.0));
    let eps_res_hard = 2f64.powf(-((prec as f64) - 10.0));

    let mut pts: Vec<IterPoint> = seeds
        .iter()
        .map(|s| IterPoint {
            z: s.with_prec(prec),
            residual: f64::INFINITY,
            converged: false,
        })
        .collect();

    for _round in 0..cfg.max_iters {
        let snapshot: Vec<BigComplex> = pts.iter().map(|p| p.z.clone()).collect();
        let flags: Vec<bool> = pts.iter().map(|p| p.converged).collect();
        let next = par::map_range(degree, |i| {
            if flags[i] {
                return (snapshot[i].clone(), pts[i].residual, true);
            }
            let z = &snapshot[i];
            let (f, df, scale) = eval(z);
            let res = rel_residual(&f, &scale);
            if res <= eps_res_hard {
                return (z.clone(), res, true);
            }
            if df.is_zero() || !df.is_finite() || !f.is_finite() {
                // Saddle of F or overflow: nudge deterministically.
                let ang = 0.77 + i as f64;
                let mag = 1e-2 * (1.0 + z.abs_f64());
                let nudge =
                    BigComplex::from_f64s(mag * ang.cos(), mag * ang.sin(), prec);
                return (z.add(&nudge), res, false);
            }
            let newton = f.div(&df);
            let mut rep = BigComplex::zero(prec);
            for (j, zj) in snapshot.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = z.sub(zj);
                if d.is_zero() {
                    continue;
                }
                rep = rep.add(&d.recip());
            }
            let denom = BigComplex::one(prec).sub(&newton.mul(&rep));
            let corr = if denom.is_zero() || !denom.is_finite() {
                newton.clone()
            } else {
                newton.div(&denom)
            };
            let znew = z.sub(&corr);
            if !znew.is_finite() {
                return (z.clone(), res, false);
            }
            let step_rel = corr.abs_f64() / (1.0 + znew.abs_f64());
            let done = step_rel <= eps_step && res.is_finite();
            (znew, res, done)
        });
        let mut all = true;
        for (p, (z, res, done)) in pts.iter_mut().zip(next.into_iter()) {
            p.z = z;
            p.residual = res;
            p.converged = done;
            all &= done;
        }
        if all {
            break;
        }
    }

    // Final residual refresh (converged points may carry a stale value).
    let refreshed = par::map_slice(&pts, |p| {
        let (f, _df, scale) = eval(&p.z);
        rel_residual(&f, &scale)
    });
    for (p, r) in pts.iter_mut().zip(refreshed) {
        p.residual = r;
        p.converged = p.converged && r.is_finite();
    }

    let worst = pts
        .iter()
        .map(|p| p.residual)
        .fold(0.0f64, f64::max);
    if pts.iter().any(|p| !p.converged) || worst > tol {
        return Err(Error::numeric(format!(
            "root finder did not reach residual {tol:.3e} after {} rounds at {prec} bits \
             (worst relative residual {worst:.3e}); precision escalation suggested",
            cfg.max_iters
        )));
    }

    Ok(cluster_roots(pts, degree, cfg))
}

fn cluster_roots(pts: Vec<IterPoint>, degree: usize, cfg: &AberthConfig) -> RootSet {
    let n = pts.len();
    let zs: Vec<Complex64> = pts.iter().map(|p| p.z.to_c64()).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let rad = cfg.cluster_radius_factor * (1.0 + zs[i].norm().max(zs[j].norm()));
            if (zs[i] - zs[j]).norm() <= rad {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut clusters_formed = 0usize;
    let mut roots: Vec<Root> = groups
        .values()
        .map(|members| {
            if members.len() > 1 {
                clusters_formed += 1;
            }
            let mut acc = BigComplex::zero(cfg.prec);
            let mut res = 0.0f64;
            for &i in members {
                acc = acc.add(&pts[i].z);
                res = res.max(pts[i].residual);
            }
            Root {
                value: acc.scale_f64(1.0 / members.len() as f64),
                multiplicity: members.len(),
                residual: res,
            }
        })
        .collect();
    roots.sort_by(|a, b| {
        let (x, y) = (a.value.to_c64(), b.value.to_c64());
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    RootSet {
        roots,
        total: degree,
        clusters_formed,
        precision_used: cfg.prec,
    }
}

/// Deterministic seed ring: `count` points near radius `r`, staggered in
/// angle and radius to break symmetries of the target function.
pub fn ring_seeds(center: Complex64, r: f64, count: usize, prec: u32) -> Vec<BigComplex> {
    (0..count)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * (k as f64) / (count as f64) + 0.5376;
            let frac = (k as f64 * 0.618_033_988_749_895).fract() - 0.5;
            let rad = r * (1.0 + 0.08 * frac);
            let z = center + Complex64::from_polar(rad, ang);
            BigComplex::from_c64(z, prec)
        })
        .collect()
}

/// Roots of an expanded polynomial, seeding from the Cauchy bound ring.
/// Exact zero roots (trailing zero coefficients) are stripped structurally
/// before iterating; relative residuals are meaningless for them.
pub fn poly_roots(p: &ComplexPoly, cfg: &AberthConfig) -> Result<RootSet> {
    let d_full = match p.degree() {
        None => return Err(Error::numeric("root finding on the zero polynomial")),
        Some(d) => d,
    };
    let zero_mult = p
        .coeffs()
        .iter()
        .take_while(|c| c.is_zero())
        .count()
        .min(d_full);
    if zero_mult > 0 {
        let reduced = ComplexPoly::new(p.coeffs()[zero_mult..].to_vec(), p.prec());
        let mut rs = poly_roots(&reduced, cfg)?;
        rs.roots.insert(
            0,
            Root {
                value: BigComplex::zero(cfg.prec),
                multiplicity: zero_mult,
                residual: 0.0,
            },
        );
        rs.total += zero_mult;
        return Ok(rs);
    }
    let d = d_full;
    if d == 0 {
        return Ok(RootSet {
            roots: Vec::new(),
            total: 0,
            clusters_formed: 0,
            precision_used: cfg.prec,
        });
    }
    let lead = p.leading().unwrap().abs_f64();
    let mut bound = 0.0f64;
    for c in p.coeffs().iter().take(d) {
        let m = c.abs_f64() / lead;
        if m.is_finite() {
            bound = bound.max(m);
        } else {
            bound = bound.max(1e6);
        }
    }
    let radius = (1.0 + bound).min(1e9);
    let seeds = ring_seeds(Complex64::new(0.0, 0.0), radius, d, cfg.prec);
    let pw = if p.prec() >= cfg.prec {
        p.clone()
    } else {
        ComplexPoly::new(
            p.coeffs().iter().map(|c| c.with_prec(cfg.prec)).collect(),
            cfg.prec,
        )
    };
    let eval = move |z: &BigComplex| {
        let (f, df) = pw.eval_with_derivative(z);
        let scale = pw.eval_abs_scale(z);
        (f, df, scale)
    };
    aberth_roots(&eval, d, &seeds, cfg)
}

/// Multiplicity certificate: |F^(j)(z)| for j < m estimated by central finite
/// differences must vanish relative to the local scale.
pub fn verify_multiplicity(eval: &EvalFn, root: &BigComplex, m: usize, tol: f64) -> bool {
    let prec = root.prec();
    let h = 2f64.powf(-(prec as f64) / (2.0 * m as f64)) * (1.0 + root.abs_f64());
    // Sample F on a small ring around the root; the j-th discrete Fourier
    // coefficient approximates F^(j)(z) h^j / j!.
    let k = 2 * m + 2;
    let samples: Vec<Complex64> = (0..k)
        .map(|j| {
            let ang = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            let dz = BigComplex::from_c64(Complex64::from_polar(h, ang), prec);
            let (f, _, _) = eval(&root.add(&dz));
            f.to_c64()
        })
        .collect();
    let scale = {
        let (_, _, s) = eval(root);
        real_to_f64(&s).max(f64::MIN_POSITIVE)
    };
    for j in 0..m {
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, f) in samples.iter().enumerate() {
            let ang = -2.0 * std::f64::consts::PI * (idx * j) as f64 / k as f64;
            acc += f * Complex64::from_polar(1.0, ang);
        }
        acc /= k as f64;
        // acc ~ F^(j)(z) h^j / j!; compare against the scale at ring radius.
        if acc.norm() / scale > tol {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bignum::PREC_LADDER;

    fn bc(re: f64, im: f64, prec: u32) -> BigComplex {
        BigComplex::from_f64s(re, im, prec)
    }

    #[test]
    fn derivative_of_squared_linear() {
        // d/dz (z-a)^2 = 2(z-a), a = 1.5 - 0.5i
        let a = bc(1.5, -0.5, 128);
        let p = ComplexPoly::from_roots(&[a.clone(), a.clone()], 128);
        let d = p.derivative();
        let expect = ComplexPoly::new(vec![a.scale_f64(-2.0), bc(2.0, 0.0, 128)], 128);
        assert_eq!(d.degree(), Some(1));
        for k in 0..2 {
            assert!(d.coeff(k).sub(&expect.coeff(k)).abs_f64() < 1e-30);
        }
    }

    #[test]
    fn product_of_conjugate_linears() {
        let p = ComplexPoly::from_f64_coeffs(&[(-1.0, 0.0), (1.0, 0.0)], 128);
        let q = ComplexPoly::from_f64_coeffs(&[(1.0, 0.0), (1.0, 0.0)], 128);
        let r = p.mul(&q).unwrap();
        assert_eq!(r.degree(), Some(2));
        assert!(r.coeff(0).add(&BigComplex::one(128)).abs_f64() < 1e-30);
        assert!(r.coeff(1).abs_f64() < 1e-30);
        assert!(r.coeff(2).sub(&BigComplex::one(128)).abs_f64() < 1e-30);
    }

    #[test]
    fn compose_linear_matches_repeated_multiplication() {
        // z^6 composed with z -> z - alpha, against prod (z - alpha)^6.
        let alpha = bc(0.75, 1.25, 128);
        let mut zn = ComplexPoly::from_f64_coeffs(&[(0.0, 0.0); 0], 128);
        zn = {
            let mut c = vec![(0.0, 0.0); 7];
            c[6] = (1.0, 0.0);
            ComplexPoly::from_f64_coeffs(&c, 128)
        };
        let composed = zn.compose_linear(&BigComplex::one(128), &alpha.neg());
        let oracle = ComplexPoly::from_roots(&vec![alpha.clone(); 6], 128);
        assert_eq!(composed.degree(), oracle.degree());
        for k in 0..=6 {
            assert!(
                composed.coeff(k).sub(&oracle.coeff(k)).abs_f64() < 1e-28,
                "coefficient {k} differs"
            );
        }
    }

    #[test]
    fn precision_mismatch_is_an_error() {
        let p = ComplexPoly::from_f64_coeffs(&[(1.0, 0.0)], 53);
        let q = ComplexPoly::from_f64_coeffs(&[(1.0, 0.0)], 128);
        assert!(p.add(&q).is_err());
        assert!(p.mul(&q).is_err());
    }

    #[test]
    fn roots_of_unity() {
        let n = 12usize;
        let cfg = AberthConfig::with_prec(53);
        let seeds = ring_seeds(Complex64::new(0.0, 0.0), 1.2, n, 53);
        let eval = |z: &BigComplex| {
            let f = z.powi(n as u64).sub(&BigComplex::one(z.prec()));
            let df = z.powi(n as u64 - 1).scale_f64(n as f64);
            let p = z.prec() as usize;
            let scale = z
                .abs()
                .powi(n, p, astro_float::RoundingMode::ToEven)
                .add(
                    &real_from_f64(1.0, z.prec()),
                    p,
                    astro_float::RoundingMode::ToEven,
                );
            (f, df, scale)
        };
        let rs = aberth_roots(&eval, n, &seeds, &cfg).unwrap();
        assert_eq!(rs.multiplicity_sum(), n);
        for k in 0..n {
            let want = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
            let best = rs
                .roots
                .iter()
                .map(|r| (r.value.to_c64() - want).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-12, "root near {want} missing: {best:.3e}");
        }
    }

    // Closed-form oracle for (z^2-1)^n = c.
    fn cassini_oracle(n: usize, c: f64) -> Vec<Complex64> {
        let mut roots = Vec::with_capacity(2 * n);
        let cn = c.powf(1.0 / n as f64);
        for r in 0..n {
            let w = Complex64::from_polar(cn, 2.0 * std::f64::consts::PI * r as f64 / n as f64);
            let s = (Complex64::new(1.0, 0.0) + w).sqrt();
            roots.push(s);
            roots.push(-s);
        }
        roots
    }

    fn cassini_eval(n: u64, c: f64) -> impl Fn(&BigComplex) -> (BigComplex, BigComplex, BigReal) + Sync {
        move |z: &BigComplex| {
            let p = z.prec();
            let rm = astro_float::RoundingMode::ToEven;
            let w = z.mul(z).sub(&BigComplex::one(p)); // z^2 - 1
            let f = w.powi(n).sub(&BigComplex::from_f64s(c, 0.0, p));
            // F' = n (z^2-1)^(n-1) * 2z
            let df = w.powi(n - 1).mul(z).scale_f64(2.0 * n as f64);
            let scale = w
                .abs()
                .powi(n as usize, p as usize, rm)
                .add(&real_from_f64(c, p), p as usize, rm);
            (f, df, scale)
        }
    }

    #[test]
    fn cassini_roots_match_closed_form() {
        let n = 20usize;
        let c = 0.7f64;
        let cfg = AberthConfig::with_prec(128);
        let eval = cassini_eval(n as u64, c);
        let seeds = ring_seeds(Complex64::new(0.0, 0.0), 1.3, 2 * n, 128);
        let rs = aberth_roots(&eval, 2 * n, &seeds, &cfg).unwrap();
        let oracle = cassini_oracle(n, c);
        let computed = rs.to_c64_with_multiplicity();
        let mut used = vec![false; computed.len()];
        let mut worst = 0.0f64;
        for o in &oracle {
            let (bi, bd) = computed
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, z)| (i, (z - o).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            used[bi] = true;
            worst = worst.max(bd);
        }
        assert!(worst < 1e-10, "pairing distance {worst:.3e}");
    }

    #[test]
    fn triple_root_clusters() {
        let one = BigComplex::one(128);
        let p = ComplexPoly::from_roots(&[one.clone(), one.clone(), one.clone()], 128);
        let cfg = AberthConfig::with_prec(128);
        let rs = poly_roots(&p, &cfg).unwrap();
        assert_eq!(rs.multiplicity_sum(), 3);
        assert_eq!(rs.roots.len(), 1);
        assert_eq!(rs.roots[0].multiplicity, 3);
        assert_eq!(rs.clusters_formed, 1);
        assert!((rs.roots[0].value.to_c64() - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        // Multiplicity certificate via the ring-sampling test.
        let eval = move |z: &BigComplex| {
            let (f, df) = p.eval_with_derivative(z);
            let s = p.eval_abs_scale(z);
            (f, df, s)
        };
        assert!(verify_multiplicity(&eval, &rs.roots[0].value, 3, 1e-6));
    }

    #[test]
    fn quadratic_matches_formula_oracle() {
        // z^2 - (a+d) z + (ad - bc), a=3, d=1, b=c=1 -> roots 2 +/- sqrt(2)
        let p = ComplexPoly::from_f64_coeffs(&[(2.0, 0.0), (-4.0, 0.0), (1.0, 0.0)], 128);
        let rs = poly_roots(&p, &AberthConfig::with_prec(128)).unwrap();
        let mut got: Vec<f64> = rs.roots.iter().map(|r| r.value.to_c64().re).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = [2.0 - 2f64.sqrt(), 2.0 + 2f64.sqrt()];
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_with_known_factorization() {
        // z^3 - z^2/2 - 4z + 2 = (z - 1/2)(z - 2)(z + 2)
        let p = ComplexPoly::from_f64_coeffs(
            &[(2.0, 0.0), (-4.0, 0.0), (-0.5, 0.0), (1.0, 0.0)],
            128,
        );
        let rs = poly_roots(&p, &AberthConfig::with_prec(128)).unwrap();
        let mut got: Vec<f64> = rs.roots.iter().map(|r| r.value.to_c64().re).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, w) in got.iter().zip([-2.0, 0.5, 2.0].iter()) {
            assert!((g - w).abs() < 1e-12);
        }
        for r in &rs.roots {
            assert!(p.eval(&r.value).abs_f64() < 1e-10);
        }
    }

    #[test]
    fn constant_poly_has_no_roots() {
        let p = ComplexPoly::from_f64_coeffs(&[(4.0, 0.0)], 53);
        let rs = poly_roots(&p, &AberthConfig::with_prec(53)).unwrap();
        assert!(rs.roots.is_empty());
        assert_eq!(rs.total, 0);
        assert!(poly_roots(&ComplexPoly::zero(53), &AberthConfig::with_prec(53)).is_err());
    }

    #[test]
    fn seed_independence() {
        let p = {
            let mut c = vec![(0.0, 0.0); 9];
            c[0] = (-1.0, 0.0);
            c[8] = (1.0, 0.0);
            ComplexPoly::from_f64_coeffs(&c, 128) // z^8 - 1
        };
        let eval = |z: &BigComplex| {
            let (f, df) = p.eval_with_derivative(z);
            (f, df, p.eval_abs_scale(z))
        };
        let cfg = AberthConfig::with_prec(128);
        let s1 = ring_seeds(Complex64::new(0.0, 0.0), 2.0, 8, 128);
        let s2 = ring_seeds(Complex64::new(0.1, 0.05), 0.6, 8, 128);
        let r1 = aberth_roots(&eval, 8, &s1, &cfg).unwrap();
        let r2 = aberth_roots(&eval, 8, &s2, &cfg).unwrap();
        let a = r1.to_c64_with_multiplicity();
        let b = r2.to_c64_with_multiplicity();
        for x in &a {
            let d = b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-12, "multisets differ by {d:.3e}");
        }
    }

    #[test]
    fn precision_monotonicity_on_fixture_battery() {
        // Doubling mantissa bits must not increase any backward residual.
        let fixtures: Vec<ComplexPoly> = vec![
            {
                let mut c = vec![(0.0, 0.0); 13];
                c[0] = (-1.0, 0.0);
                c[12] = (1.0, 0.0);
                ComplexPoly::from_f64_coeffs(&c, 512) // z^12 - 1
            },
            ComplexPoly::from_f64_coeffs(&[(2.0, 0.0), (-4.0, 0.0), (1.0, 0.0)], 512),
        ];
        for p in &fixtures {
            let mut last = f64::INFINITY;
            for prec in PREC_LADDER {
                let rs = poly_roots(p, &AberthConfig::with_prec(prec)).unwrap();
                // Residuals below one ulp of the working precision are noise.
                let worst = rs.max_residual().max(2f64.powf(-(prec as f64)));
                assert!(
                    worst <= last * (1.0 + 1e-9),
                    "residual grew from {last:.3e} to {worst:.3e} at {prec} bits"
                );
                last = worst;
            }
        }
    }
}
