//! The reduced pencil on the collapsed graph and the subset-coefficient
//! family of its determinant.
//!
//! For a graph with channels `(e_r, alpha_r, beta_r)` and junction weight
//! block `J`, the characteristic polynomial of the lengthened matrix factors
//! as
//!
//! ```text
//! det(zI - A(n)) = k * sum_s a_s(z) * prod_{i in s} ((z - alpha_i)/beta_i)^(n e_i)
//! ```
//!
//! with `k = prod_r beta_r^(n e_r)` and the sum over channel subsets. The
//! pencil stored here is normalized so its determinant is exactly the sum on
//! the right: channel diagonal `u_r`, channel-to-junction entries `-1`,
//! junction-to-channel entries `-beta_r`, junction block `zI - J`. Each `u_r`
//! appears in exactly one entry, so the determinant is affine in each `u_r`
//! and `a_s(z)` is the minor obtained by deleting the rows and columns of the
//! channels in `s` and zeroing the remaining `u`.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bignum::{real_from_f64, real_to_f64, BigComplex, BigReal};
use crate::graph::{assemble_capped, Decomposition, GraphSpec};
use crate::linalg::lu_factor;
use crate::par;
use crate::poly::ComplexPoly;
use crate::{Error, Result};

const RM: astro_float::RoundingMode = astro_float::RoundingMode::ToEven;

/// Cap on the number of channels for the 2^h subset extraction.
pub const DEFAULT_SUBSET_CAP: usize = 20;
/// Cap on the assembled dimension for the dense determinant oracle.
pub const DEFAULT_ORACLE_CAP: usize = 400;
/// Cap for the exact characteristic-polynomial oracle.
pub const BRUTE_CAP: usize = 12;

#[derive(Clone, Debug)]
pub enum PencilEntry {
    Zero,
    Const(BigComplex),
    /// c0 + c1 * z
    Linear { c0: BigComplex, c1: BigComplex },
    /// The indeterminate standing for ((z - alpha_r)/beta_r)^(n e_r).
    ChannelVar(usize),
}

#[derive(Clone, Debug)]
pub struct ChannelFactor {
    pub alpha: BigComplex,
    pub beta: BigComplex,
    pub e: u32,
}

/// The (h + #J)-dimensional normalized pencil.
#[derive(Clone, Debug)]
pub struct ReducedPencil {
    pub h: usize,
    pub nj: usize,
    pub entries: Vec<Vec<PencilEntry>>,
    pub channel_meta: Vec<ChannelFactor>,
    pub junction_ids: Vec<String>,
    pub prec: u32,
}

pub fn reduce(decomp: &Decomposition, prec: u32) -> Result<ReducedPencil> {
    let h = decomp.num_channels();
    let nj = decomp.num_junction_vertices();
    let dim = h + nj;
    let mut entries = vec![vec![PencilEntry::Zero; dim]; dim];

    let mut channel_meta = Vec::with_capacity(h);
    for (r, ch) in decomp.channels.iter().enumerate() {
        let beta = ch.beta.to_big(prec)?;
        entries[r][r] = PencilEntry::ChannelVar(r);
        entries[r][h + ch.to] = PencilEntry::Const(BigComplex::from_f64s(-1.0, 0.0, prec));
        entries[h + ch.from][r] = PencilEntry::Const(beta.neg());
        channel_meta.push(ChannelFactor {
            alpha: ch.alpha.to_big(prec)?,
            beta,
            e: ch.e,
        });
    }
    for i in 0..nj {
        entries[h + i][h + i] = PencilEntry::Linear {
            c0: BigComplex::zero(prec),
            c1: BigComplex::one(prec),
        };
    }
    for (&(i, j), w) in decomp.junction_weights.iter() {
        let wv = w.to_big(prec)?;
        if i == j {
            entries[h + i][h + i] = PencilEntry::Linear {
                c0: wv.neg(),
                c1: BigComplex::one(prec),
            };
        } else {
            entries[h + i][h + j] = PencilEntry::Const(wv.neg());
        }
    }

    Ok(ReducedPencil {
        h,
        nj,
        entries,
        channel_meta,
        junction_ids: decomp.junction_ids.clone(),
        prec,
    })
}

impl ReducedPencil {
    pub fn dim(&self) -> usize {
        self.h + self.nj
    }

    fn eval_entry(&self, e: &PencilEntry, z: &BigComplex, u: &[BigComplex]) -> BigComplex {
        match e {
            PencilEntry::Zero => BigComplex::zero(self.prec),
            PencilEntry::Const(c) => c.clone(),
            PencilEntry::Linear { c0, c1 } => c0.add(&c1.mul(z)),
            PencilEntry::ChannelVar(r) => u[*r].clone(),
        }
    }

    /// Determinant of the pencil at a point, with explicit values for the
    /// channel indeterminates.
    pub fn det_at(&self, z: &BigComplex, u: &[BigComplex]) -> BigComplex {
        let dim = self.dim();
        let m: Vec<Vec<BigComplex>> = (0..dim)
            .map(|r| {
                (0..dim)
                    .map(|c| self.eval_entry(&self.entries[r][c], z, u))
                    .collect()
            })
            .collect();
        lu_factor(m).det()
    }

    /// Determinant with `u_r = ((z - alpha_r)/beta_r)^(n e_r)` substituted.
    /// Multiplying by the global factor `k` gives `det(zI - A(n))`.
    pub fn substituted_det(&self, z: &BigComplex, n: u32) -> BigComplex {
        let u: Vec<BigComplex> = self
            .channel_meta
            .iter()
            .map(|cf| {
                let g = z.sub(&cf.alpha).div(&cf.beta);
                g.powi(n as u64 * cf.e as u64)
            })
            .collect();
        self.det_at(z, &u)
    }

    /// Minor determinant defining `a_s`: delete the rows and columns of the
    /// channels in `mask`, set the remaining indeterminates to zero.
    fn subset_minor_det(&self, mask: u32, z: &BigComplex) -> BigComplex {
        let keep: Vec<usize> = (0..self.h)
            .filter(|r| mask & (1 << r) == 0)
            .chain(self.h..self.dim())
            .collect();
        let zero = BigComplex::zero(self.prec);
        let m: Vec<Vec<BigComplex>> = keep
            .iter()
            .map(|&r| {
                keep.iter()
                    .map(|&c| match &self.entries[r][c] {
                        PencilEntry::ChannelVar(_) => zero.clone(),
                        e => self.eval_entry(e, z, &[]),
                    })
                    .collect()
            })
            .collect();
        if m.is_empty() {
            return BigComplex::one(self.prec);
        }
        lu_factor(m).det()
    }
}

/// The finite family `{a_s, f_s}` with the global factor kept factored.
#[derive(Clone, Debug)]
pub struct SubsetFamily {
    pub h: usize,
    pub nj: usize,
    /// Nonzero coefficients only, keyed by channel-subset bitmask.
    pub coeffs: BTreeMap<u32, ComplexPoly>,
    pub factors: Vec<ChannelFactor>,
    pub prec: u32,
}

fn lagrange_interpolate(
    nodes: &[BigComplex],
    values: &[BigComplex],
    prec: u32,
) -> ComplexPoly {
    let mut acc = ComplexPoly::zero(prec);
    for j in 0..nodes.len() {
        let mut basis = ComplexPoly::constant(BigComplex::one(prec));
        let mut denom = BigComplex::one(prec);
        for k in 0..nodes.len() {
            if k == j {
                continue;
            }
            let lin = ComplexPoly::new(
                vec![nodes[k].neg(), BigComplex::one(prec)],
                prec,
            );
            basis = basis.mul(&lin).expect("same precision");
            denom = denom.mul(&nodes[j].sub(&nodes[k]));
        }
        acc = acc
            .add(&basis.scale(&values[j].div(&denom)))
            .expect("same precision");
    }
    acc
}

/// Extract every `a_s` by evaluating the 2^h structured minors at #J + 1
/// interpolation nodes. Structurally zero coefficients are dropped.
pub fn subset_coefficients(pencil: &ReducedPencil) -> Result<SubsetFamily> {
    subset_coefficients_capped(pencil, DEFAULT_SUBSET_CAP)
}

pub fn subset_coefficients_capped(pencil: &ReducedPencil, cap: usize) -> Result<SubsetFamily> {
    if pencil.h > cap {
        return Err(Error::numeric(format!(
            "subset extraction needs 2^{} evaluations, above the cap of 2^{cap}",
            pencil.h
        )));
    }
    let prec = pencil.prec;
    let nj = pencil.nj;
    let n_nodes = nj + 1;
    let nodes: Vec<BigComplex> = (0..n_nodes)
        .map(|j| {
            let ang = 2.0 * std::f64::consts::PI * j as f64 / n_nodes as f64 + 0.321;
            BigComplex::from_c64(Complex64::from_polar(2.0, ang), prec)
        })
        .collect();

    let masks: Vec<u32> = (0..(1u32 << pencil.h)).collect();
    let raw: Vec<(Vec<BigComplex>, f64)> = par::map_slice(&masks, |&mask| {
        let vals: Vec<BigComplex> = nodes
            .iter()
            .map(|z| pencil.subset_minor_det(mask, z))
            .collect();
        let scale = vals.iter().map(|v| v.abs_f64()).fold(0.0f64, f64::max);
        (vals, scale)
    });

    let global_scale = raw.iter().map(|(_, s)| *s).fold(0.0f64, f64::max).max(1e-300);
    let zero_floor = global_scale * 2f64.powf(-(prec as f64) / 2.0);

    let mut coeffs = BTreeMap::new();
    for (mask, (vals, scale)) in masks.iter().zip(raw.iter()) {
        if *scale <= zero_floor {
            continue; // structural zero
        }
        let poly = lagrange_interpolate(&nodes, vals, prec)
            .trim_relative(2f64.powf(-(prec as f64) / 2.0));
        if poly.is_zero() {
            continue;
        }
        coeffs.insert(*mask, poly);
    }

    let fam = SubsetFamily {
        h: pencil.h,
        nj,
        coeffs,
        factors: pencil.channel_meta.clone(),
        prec,
    };
    let sigma = fam.full_mask();
    match fam.coeffs.get(&sigma) {
        Some(a) if a.degree() == Some(nj) => {}
        _ => {
            return Err(Error::numeric(
                "full-subset coefficient missing or of wrong degree; extraction failed",
            ))
        }
    }
    if fam.coeffs.values().any(|a| a.degree().unwrap_or(0) > nj) {
        return Err(Error::numeric("subset coefficient degree exceeds #J"));
    }
    Ok(fam)
}

impl SubsetFamily {
    pub fn full_mask(&self) -> u32 {
        if self.h == 32 {
            u32::MAX
        } else {
            (1u32 << self.h) - 1
        }
    }

    pub fn support(&self) -> BTreeSet<u32> {
        self.coeffs.keys().cloned().collect()
    }

    /// Total degree of `F_n` after substitution: the dimension of `A(n)`.
    pub fn fn_degree(&self, n: u32) -> usize {
        let ch: usize = self
            .factors
            .iter()
            .map(|f| f.e as usize * n as usize)
            .sum();
        ch + self.nj
    }

    /// `k = prod_r beta_r^(n e_r)`.
    pub fn global_factor(&self, n: u32) -> BigComplex {
        let mut k = BigComplex::one(self.prec);
        for f in &self.factors {
            k = k.mul(&f.beta.powi(n as u64 * f.e as u64));
        }
        k
    }

    /// Evaluate `(F_n(z), F_n'(z), scale)` in fully factored form, where
    /// `scale` is the sum of term magnitudes (the backward-residual scale).
    pub fn eval_f(&self, z: &BigComplex, n: u32) -> (BigComplex, BigComplex, BigReal) {
        let prec = self.prec.max(z.prec());
        let p = prec as usize;
        let zero = BigComplex::zero(prec);

        // Per channel: G_r = g_r^(n e_r) and its derivative.
        let mut g_pow = Vec::with_capacity(self.h);
        let mut g_pow_d = Vec::with_capacity(self.h);
        for f in &self.factors {
            let m = n as u64 * f.e as u64;
            let g = z.sub(&f.alpha).div(&f.beta);
            let gm1 = if m >= 1 { g.powi(m - 1) } else { BigComplex::one(prec) };
            let gm = gm1.mul(&g);
            // d/dz g^m = (m / beta) g^(m-1)
            let dgm = gm1.scale_f64(m as f64).div(&f.beta);
            g_pow.push(gm);
            g_pow_d.push(dgm);
        }

        let mut f_val = zero.clone();
        let mut f_der = zero.clone();
        let mut scale = real_from_f64(0.0, prec);
        for (&mask, a) in &self.coeffs {
            let members: Vec<usize> = (0..self.h).filter(|r| mask & (1 << r) != 0).collect();
            let mut u = BigComplex::one(prec);
            for &r in &members {
                u = u.mul(&g_pow[r]);
            }
            let mut du = zero.clone();
            for &r in &members {
                let mut rest = g_pow_d[r].clone();
                for &t in &members {
                    if t != r {
                        rest = rest.mul(&g_pow[t]);
                    }
                }
                du = du.add(&rest);
            }
            let (av, ad) = a.eval_with_derivative(z);
            f_val = f_val.add(&av.mul(&u));
            f_der = f_der.add(&ad.mul(&u)).add(&av.mul(&du));
            let term_mag = a.eval_abs_scale(z).mul(&u.abs(), p, RM);
            scale = scale.add(&term_mag, p, RM);
        }
        (f_val, f_der, scale)
    }

    /// Expand `k * F_n` into coefficients:
    /// `sum_s a_s (z-alpha_i)^(n e_i) prod_{j not in s} beta_j^(n e_j)`.
    /// Only usable for small `n` (oracle work).
    pub fn expand_char_poly(&self, n: u32) -> ComplexPoly {
        let prec = self.prec;
        let mut total = ComplexPoly::zero(prec);
        for (&mask, a) in &self.coeffs {
            let mut term = a.clone();
            for (r, f) in self.factors.iter().enumerate() {
                let m = n as u64 * f.e as u64;
                if mask & (1 << r) != 0 {
                    let lin = ComplexPoly::new(
                        vec![f.alpha.neg(), BigComplex::one(prec)],
                        prec,
                    );
                    for _ in 0..m {
                        term = term.mul(&lin).expect("same precision");
                    }
                } else {
                    term = term.scale(&f.beta.powi(m));
                }
            }
            total = total.add(&term).expect("same precision");
        }
        total
    }
}

/// Report from the determinant identity cross-check.
#[derive(Clone, Debug, serde::Serialize)]
pub struct IdentitySample {
    pub z_re: f64,
    pub z_im: f64,
    pub rel_dev: f64,
    pub resampled: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct IdentityReport {
    pub n: u32,
    pub dim: usize,
    pub prec: u32,
    pub max_rel_dev: f64,
    pub resampled: usize,
    pub samples: Vec<IdentitySample>,
}

/// Random sample points on a circle, seeded for reproducibility.
pub fn sample_ring(count: usize, radius: f64, seed: u64, prec: u32) -> Vec<BigComplex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let ang: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
            BigComplex::from_c64(Complex64::from_polar(radius, ang), prec)
        })
        .collect()
}

/// Compare the LU determinant of `zI - A(n)` against `k * F_n(z)` at every
/// sample point. Samples that hit an eigenvalue to working tolerance are
/// nudged and retried.
pub fn identity_check(
    spec: &GraphSpec,
    n: u32,
    samples: &[BigComplex],
    prec: u32,
    cap: usize,
) -> Result<IdentityReport> {
    let a = assemble_capped(spec, n, prec, cap)?;
    let decomp = crate::graph::decompose(spec)?;
    let pencil = reduce(&decomp, prec)?;
    let fam = subset_coefficients(&pencil)?;
    let k = fam.global_factor(n);
    let dense = a.to_dense_big();
    let dim = a.dim;

    let results: Vec<IdentitySample> = par::map_slice(samples, |z0| {
        let mut z = z0.with_prec(prec);
        let mut resampled = false;
        for _attempt in 0..4 {
            // zI - A
            let m: Vec<Vec<BigComplex>> = (0..dim)
                .map(|r| {
                    (0..dim)
                        .map(|c| {
                            let v = dense[r][c].neg();
                            if r == c {
                                v.add(&z)
                            } else {
                                v
                            }
                        })
                        .collect()
                })
                .collect();
            let lu = lu_factor(m);
            let det = lu.det();
            let (fval, _, fscale) = fam.eval_f(&z, n);
            let rhs = k.mul(&fval);
            let det_mag = det.abs_f64();
            let rhs_mag = rhs.abs_f64();
            let scale_mag = real_to_f64(&fscale) * k.abs_f64();
            // A determinant tiny against the term scale means z is an
            // eigenvalue to tolerance; comparison there is meaningless.
            let singularish = det_mag.max(rhs_mag) <= scale_mag * 2f64.powf(-(prec as f64) / 4.0);
            if singularish || lu.singular_at.is_some() {
                resampled = true;
                z = z.scale_f64(1.0037).add(&BigComplex::from_f64s(
                    0.0041 * (1.0 + z.abs_f64()),
                    0.0023,
                    prec,
                ));
                continue;
            }
            let dev = det.sub(&rhs).abs_f64() / det_mag.max(rhs_mag);
            return IdentitySample {
                z_re: z.to_c64().re,
                z_im: z.to_c64().im,
                rel_dev: dev,
                resampled,
            };
        }
        IdentitySample {
            z_re: z.to_c64().re,
            z_im: z.to_c64().im,
            rel_dev: f64::INFINITY,
            resampled: true,
        }
    });

    let max_rel_dev = results.iter().map(|s| s.rel_dev).fold(0.0, f64::max);
    Ok(IdentityReport {
        n,
        dim,
        prec,
        max_rel_dev,
        resampled: results.iter().filter(|s| s.resampled).count(),
        samples: results,
    })
}

/// Exact characteristic polynomial of a small matrix by the
/// Faddeev-LeVerrier recurrence at elevated precision.
pub fn brute_char_poly(matrix: &crate::graph::AssembledMatrix) -> Result<ComplexPoly> {
    let d = matrix.dim;
    if d > BRUTE_CAP {
        return Err(Error::numeric(format!(
            "exact characteristic polynomial capped at dimension {BRUTE_CAP}, got {d}"
        )));
    }
    let prec = matrix.prec.max(256);
    let a: Vec<Vec<BigComplex>> = matrix
        .to_dense_big()
        .into_iter()
        .map(|row| row.into_iter().map(|v| v.with_prec(prec)).collect())
        .collect();
    brute_char_poly_dense(&a, prec)
}

pub fn brute_char_poly_dense(a: &[Vec<BigComplex>], prec: u32) -> Result<ComplexPoly> {
    let d = a.len();
    if d == 0 {
        return Err(Error::numeric("characteristic polynomial of empty matrix"));
    }
    // M_1 = A, c_1 = -tr(M_1); M_k = A (M_{k-1} + c_{k-1} I), c_k = -tr(M_k)/k
    let mut coeffs = vec![BigComplex::zero(prec); d + 1];
    coeffs[d] = BigComplex::one(prec);
    let mut m: Vec<Vec<BigComplex>> = a.to_vec();
    let mut c_prev;
    for k in 1..=d {
        let mut tr = BigComplex::zero(prec);
        for i in 0..d {
            tr = tr.add(&m[i][i]);
        }
        let ck = tr.scale_f64(-1.0 / k as f64);
        coeffs[d - k] = ck.clone();
        c_prev = ck;
        if k == d {
            break;
        }
        // m <- A (m + c_prev I)
        let mut shifted = m.clone();
        for i in 0..d {
            shifted[i][i] = shifted[i][i].add(&c_prev);
        }
        let mut next = vec![vec![BigComplex::zero(prec); d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = BigComplex::zero(prec);
                for l in 0..d {
                    acc = acc.add(&a[i][l].mul(&shifted[l][j]));
                }
                next[i][j] = acc;
            }
        }
        m = next;
    }
    Ok(ComplexPoly::new(coeffs, prec))
}

/// Subsets `s` for which the remaining graph admits a disjoint cycle cover
/// containing every surviving channel, with singleton loops allowed at every
/// vertex. This is a structural superset of the nonzero-coefficient support.
pub fn cycle_cover_support(decomp: &Decomposition) -> Result<BTreeSet<u32>> {
    cycle_cover_support_capped(decomp, DEFAULT_SUBSET_CAP)
}

pub fn cycle_cover_support_capped(
    decomp: &Decomposition,
    cap: usize,
) -> Result<BTreeSet<u32>> {
    let h = decomp.num_channels();
    if h > cap {
        return Err(Error::numeric(format!(
            "cycle cover enumeration needs 2^{h} subset tests, above the cap of 2^{cap}"
        )));
    }
    let nj = decomp.num_junction_vertices();
    let mut out = BTreeSet::new();
    for mask in 0u32..(1u32 << h) {
        if subset_has_cycle_cover(decomp, mask, nj) {
            out.insert(mask);
        }
    }
    Ok(out)
}

/// A disjoint cycle cover using every surviving channel exists iff the
/// successor relation admits a perfect matching: junction vertices may map to
/// themselves (the `zI` singleton loop), to junction out-neighbours, or into
/// a surviving channel starting there; a surviving channel must map to its
/// end junction.
fn subset_has_cycle_cover(decomp: &Decomposition, mask: u32, nj: usize) -> bool {
    let kept: Vec<usize> = (0..decomp.num_channels())
        .filter(|r| mask & (1 << r) == 0)
        .collect();
    let n = nj + kept.len();
    let chan_node: BTreeMap<usize, usize> = kept
        .iter()
        .enumerate()
        .map(|(i, &r)| (r, nj + i))
        .collect();

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..nj {
        adj[v].push(v); // singleton cycle
    }
    for (&(i, j), _) in decomp.junction_weights.iter() {
        if i != j {
            adj[i].push(j);
        }
    }
    for &r in &kept {
        let c = decomp.channels[r].clone();
        adj[c.from].push(chan_node[&r]);
        adj[chan_node[&r]].push(c.to);
    }

    // Kuhn's augmenting-path matching, left nodes to right nodes.
    let mut match_right = vec![usize::MAX; n];
    fn augment(
        u: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        match_right: &mut [usize],
    ) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if match_right[v] == usize::MAX
                || augment(match_right[v], adj, seen, match_right)
            {
                match_right[v] = u;
                return true;
            }
        }
        false
    }
    for u in 0..n {
        let mut seen = vec![false; n];
        if !augment(u, &adj, &mut seen, &mut match_right) {
            return false;
        }
    }
    true
}
