//! Named fixtures used by the CLI presets and the test suites. Each graph
//! preset records the channel parameters `alpha`, `beta`, junction weights
//! `gamma`, and the channel wiring it encodes; family presets carry the
//! coefficient polynomials and factored power bases directly.

use crate::graph::{ChannelSpec, CxParam, GraphSpec, JunctionDecl, JunctionEdge};
use crate::limitset::{AnalyticFamily, AnalyticMember, PowerFactor};
use crate::poly::ComplexPoly;
use crate::{Error, Result};

fn jd(id: &str) -> JunctionDecl {
    JunctionDecl { id: id.into() }
}

fn je(from: &str, to: &str, re: &str, im: &str) -> JunctionEdge {
    JunctionEdge {
        from: from.into(),
        to: to.into(),
        weight: CxParam::new(re, im),
    }
}

fn ch(from: &str, to: &str, e: u32, alpha: (&str, &str), beta: (&str, &str)) -> ChannelSpec {
    ChannelSpec {
        from: from.into(),
        to: to.into(),
        e,
        alpha: CxParam::new(alpha.0, alpha.1),
        beta: CxParam::new(beta.0, beta.1),
    }
}

/// One junction of two points joined by a back edge of weight 1 plus a single
/// channel (alpha=0, beta=1): `A(m)` is the (m+2)-cycle shift with
/// characteristic polynomial z^(m+2) - 1.
pub fn cycle_spec() -> GraphSpec {
    GraphSpec {
        junctions: vec![jd("p"), jd("q")],
        junction_edges: vec![je("q", "p", "1", "0")],
        channels: vec![ch("p", "q", 1, ("0", "0"), ("1", "0"))],
    }
}

/// Single one-point junction gamma=5 with two loop channels,
/// alpha=[2,-1], beta=[2,3].
pub fn h2k1_spec() -> GraphSpec {
    GraphSpec {
        junctions: vec![jd("j")],
        junction_edges: vec![je("j", "j", "5", "0")],
        channels: vec![
            ch("j", "j", 1, ("2", "0"), ("2", "0")),
            ch("j", "j", 1, ("-1", "0"), ("3", "0")),
        ],
    }
}

/// Single one-point junction gamma=3 with three loop channels,
/// alpha=[1, i, -i], beta=[1, 3/2, 3/2].
pub fn h3k1_spec() -> GraphSpec {
    GraphSpec {
        junctions: vec![jd("j")],
        junction_edges: vec![je("j", "j", "3", "0")],
        channels: vec![
            ch("j", "j", 1, ("1", "0"), ("1", "0")),
            ch("j", "j", 1, ("0", "1"), ("1.5", "0")),
            ch("j", "j", 1, ("0", "-1"), ("1.5", "0")),
        ],
    }
}

/// Two one-point junctions gamma=[-2,2] in a single circuit of two channels,
/// alpha=[-1.2,1.2], beta=[1.3,1.3].
pub fn h2k2_spec() -> GraphSpec {
    GraphSpec {
        junctions: vec![jd("v1"), jd("v2")],
        junction_edges: vec![je("v1", "v1", "-2", "0"), je("v2", "v2", "2", "0")],
        channels: vec![
            ch("v1", "v2", 1, ("-1.2", "0"), ("1.3", "0")),
            ch("v2", "v1", 1, ("1.2", "0"), ("1.3", "0")),
        ],
    }
}

/// The h2k2 graph with the two junction points weakly linked both ways by
/// weight 1e-2.
pub fn h2k2_weak_spec() -> GraphSpec {
    let mut spec = h2k2_spec();
    spec.junction_edges.push(je("v1", "v2", "0.01", "0"));
    spec.junction_edges.push(je("v2", "v1", "0.01", "0"));
    spec
}

/// Three channels, two junctions (one of two points, one isolated point):
/// junction diagonals -2, 2, 0, one internal edge a->c, channels
/// c->a (alpha=i/2), a->b (alpha=-i/2), b->c (alpha=3/2), all beta=1.
/// Exactly 3 of the 8 subset coefficients are nonzero.
pub fn three_spec() -> GraphSpec {
    GraphSpec {
        junctions: vec![jd("a"), jd("b"), jd("c")],
        junction_edges: vec![
            je("a", "a", "-2", "0"),
            je("b", "b", "2", "0"),
            je("a", "c", "1", "0"),
        ],
        channels: vec![
            ch("c", "a", 1, ("0", "0.5"), ("1", "0")),
            ch("a", "b", 1, ("0", "-0.5"), ("1", "0")),
            ch("b", "c", 1, ("1.5", "0"), ("1", "0")),
        ],
    }
}

/// One junction that is a directed 2h-cycle, with h chord channels
/// i -> C_i -> i+1. Every one of the 2^h subset coefficients is a nonzero
/// constant.
pub fn chords_spec(h: usize) -> GraphSpec {
    let m = 2 * h;
    let name = |i: usize| format!("v{}", i % m);
    let mut spec = GraphSpec {
        junctions: (0..m).map(|i| jd(&name(i))).collect(),
        junction_edges: (0..m)
            .map(|i| je(&name(i), &name(i + 1), "1", "0"))
            .collect(),
        channels: (0..h)
            .map(|i| ch(&name(i), &name(i + 1), 1, ("0", "0"), ("1", "0")))
            .collect(),
    };
    spec.junction_edges.shrink_to_fit();
    spec
}

fn member(label: &str, a: ComplexPoly, factors: Vec<PowerFactor>) -> AnalyticMember {
    AnalyticMember::new(label, a, factors)
}

fn pf(alpha: (f64, f64), beta: (f64, f64), e: u32, prec: u32) -> PowerFactor {
    PowerFactor {
        alpha: crate::bignum::BigComplex::from_f64s(alpha.0, alpha.1, prec),
        beta: crate::bignum::BigComplex::from_f64s(beta.0, beta.1, prec),
        e,
    }
}

fn consts(c: f64, prec: u32) -> ComplexPoly {
    ComplexPoly::from_f64_coeffs(&[(c, 0.0)], prec)
}

/// (z-a)^n (z-b)^n + alpha (z-a)^n + beta (z-b)^n + gamma with
/// a=1, b=-1, alpha=beta=gamma=1: roots fill both circles |z-1|=1, |z+1|=1.
pub fn limset_family(prec: u32) -> AnalyticFamily {
    let one = (1.0, 0.0);
    AnalyticFamily::new(vec![
        member(
            "f1",
            consts(1.0, prec),
            vec![pf((1.0, 0.0), one, 1, prec), pf((-1.0, 0.0), one, 1, prec)],
        ),
        member("f2", consts(1.0, prec), vec![pf((1.0, 0.0), one, 1, prec)]),
        member("f3", consts(1.0, prec), vec![pf((-1.0, 0.0), one, 1, prec)]),
        member("f4", consts(1.0, prec), vec![]),
    ])
}

/// (z-a)^n (z+a)^n + (z-a)^n + 1: three arcs meeting at +/- i sqrt(1-a^2)
/// when 0 < a < 1; a full circle plus a closed quartic when a > 1.
pub fn limset2_family(a: f64, prec: u32) -> AnalyticFamily {
    let one = (1.0, 0.0);
    AnalyticFamily::new(vec![
        member(
            "f1",
            consts(1.0, prec),
            vec![pf((a, 0.0), one, 1, prec), pf((-a, 0.0), one, 1, prec)],
        ),
        member("f2", consts(1.0, prec), vec![pf((a, 0.0), one, 1, prec)]),
        member("f3", consts(1.0, prec), vec![]),
    ])
}

/// w^2 + a1(z) w + a0(z) at w = z^n with a1 = -z^2 - z + 9/2 and
/// a0 = z^3 - z^2/2 - 4z + 2: two rings near |z|=1 plus one root near 1/2.
pub fn tworings_family(prec: u32) -> Result<AnalyticFamily> {
    let zero = (0.0, 0.0);
    let one = (1.0, 0.0);
    let a1 = ComplexPoly::parse_coeffs(&[("4.5", "0"), ("-1", "0"), ("-1", "0")], prec)?;
    let a0 = ComplexPoly::parse_coeffs(&[("2", "0"), ("-4", "0"), ("-0.5", "0"), ("1", "0")], prec)?;
    Ok(AnalyticFamily::new(vec![
        member("w2", consts(1.0, prec), vec![pf(zero, one, 2, prec)]),
        member("w1", a1, vec![pf(zero, one, 1, prec)]),
        member("w0", a0, vec![]),
    ]))
}

/// w^2 - 4w - 8z + 3 at w = z^n: two interlocking rings, closest near -1.
pub fn interlock_family(prec: u32) -> Result<AnalyticFamily> {
    let zero = (0.0, 0.0);
    let one = (1.0, 0.0);
    let a0 = ComplexPoly::parse_coeffs(&[("3", "0"), ("-8", "0")], prec)?;
    Ok(AnalyticFamily::new(vec![
        member("w2", consts(1.0, prec), vec![pf(zero, one, 2, prec)]),
        member("w1", consts(-4.0, prec), vec![pf(zero, one, 1, prec)]),
        member("w0", a0, vec![]),
    ]))
}

/// (z^2 - 1)^n = c: roots on the Cassini lemniscate |z^2-1|=1 with an
/// explicit closed form.
pub fn lemniscate_family(c: f64, prec: u32) -> AnalyticFamily {
    let one = (1.0, 0.0);
    AnalyticFamily::new(vec![
        member(
            "f",
            consts(1.0, prec),
            vec![pf((1.0, 0.0), one, 1, prec), pf((-1.0, 0.0), one, 1, prec)],
        ),
        member("c", consts(-c, prec), vec![]),
    ])
}

/// What a preset is built from.
pub enum PresetData {
    Graph(GraphSpec),
    Family(AnalyticFamily),
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub default_n: u32,
    pub data: PresetData,
}

pub const PRESET_NAMES: [&str; 12] = [
    "cycle",
    "h2k1",
    "h3k1",
    "h2k2",
    "h2k2-weak",
    "three",
    "chords-h3",
    "chords-h4",
    "limset",
    "limset2-a-half",
    "limset2-a-threehalves",
    "tworings",
];

/// Extra family presets addressable by name but not part of the headline
/// list (used by density and gap diagnostics).
pub const EXTRA_PRESET_NAMES: [&str; 2] = ["interlock", "lemniscate"];

pub fn build_preset(name: &str, prec: u32) -> Result<Preset> {
    let p = |name, description, default_n, data| Preset {
        name,
        description,
        default_n,
        data,
    };
    Ok(match name {
        "cycle" => p(
            "cycle",
            "single channel, 2-point junction, weight-1 back edge: the (n+2)-cycle shift",
            12,
            PresetData::Graph(cycle_spec()),
        ),
        "h2k1" => p(
            "h2k1",
            "one 1-point junction gamma=5, two loop channels alpha=[2,-1] beta=[2,3]",
            30,
            PresetData::Graph(h2k1_spec()),
        ),
        "h3k1" => p(
            "h3k1",
            "one 1-point junction gamma=3, three loop channels alpha=[1,i,-i] beta=[1,1.5,1.5]",
            30,
            PresetData::Graph(h3k1_spec()),
        ),
        "h2k2" => p(
            "h2k2",
            "two 1-point junctions gamma=[-2,2], circuit of two channels alpha=[-1.2,1.2] beta=[1.3,1.3]",
            30,
            PresetData::Graph(h2k2_spec()),
        ),
        "h2k2-weak" => p(
            "h2k2-weak",
            "h2k2 with junctions weakly linked both ways by 1e-2",
            100,
            PresetData::Graph(h2k2_weak_spec()),
        ),
        "three" => p(
            "three",
            "three channels alpha=[i/2,-i/2,3/2], junction diagonals [-2,2,0], edge a->c; 3 of 8 subset coefficients survive",
            25,
            PresetData::Graph(three_spec()),
        ),
        "chords-h3" => p(
            "chords-h3",
            "6-cycle junction with 3 chord channels: all 8 subset coefficients nonzero",
            8,
            PresetData::Graph(chords_spec(3)),
        ),
        "chords-h4" => p(
            "chords-h4",
            "8-cycle junction with 4 chord channels: all 16 subset coefficients nonzero",
            6,
            PresetData::Graph(chords_spec(4)),
        ),
        "limset" => p(
            "limset",
            "(z-1)^n (z+1)^n + (z-1)^n + (z+1)^n + 1: roots fill both unit circles centred at +/-1",
            60,
            PresetData::Family(limset_family(prec)),
        ),
        "limset2-a-half" => p(
            "limset2-a-half",
            "(z-a)^n (z+a)^n + (z-a)^n + 1 with a=1/2: three arcs meeting at +/- i sqrt(3)/2",
            60,
            PresetData::Family(limset2_family(0.5, prec)),
        ),
        "limset2-a-threehalves" => p(
            "limset2-a-threehalves",
            "same family with a=3/2: full circle |z+a|=1 plus a closed quartic in Re z > 0",
            60,
            PresetData::Family(limset2_family(1.5, prec)),
        ),
        "tworings" => p(
            "tworings",
            "z^2n + (-z^2-z+9/2) z^n + (z^3-z^2/2-4z+2): two rings near |z|=1, one root near 1/2",
            40,
            PresetData::Family(tworings_family(prec)?),
        ),
        "interlock" => p(
            "interlock",
            "z^2n - 4 z^n - 8z + 3: interlocking rings, closest near -1",
            20,
            PresetData::Family(interlock_family(prec)?),
        ),
        "lemniscate" => p(
            "lemniscate",
            "(z^2-1)^n = 0.7: closed-form roots on the Cassini curve |z^2-1|=1",
            40,
            PresetData::Family(lemniscate_family(0.7, prec)),
        ),
        other => {
            return Err(Error::parse(format!(
                "unknown preset {other:?}; available: {} (+ {})",
                PRESET_NAMES.join(", "),
                EXTRA_PRESET_NAMES.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_graph_presets_validate() {
        for spec in [
            cycle_spec(),
            h2k1_spec(),
            h3k1_spec(),
            h2k2_spec(),
            h2k2_weak_spec(),
            three_spec(),
            chords_spec(3),
            chords_spec(4),
        ] {
            spec.validate().unwrap();
        }
    }

    #[test]
    fn preset_lookup() {
        for name in PRESET_NAMES.iter().chain(EXTRA_PRESET_NAMES.iter()) {
            let p = build_preset(name, 128).unwrap();
            assert_eq!(p.name, *name);
            assert!(p.default_n >= 1);
        }
        assert!(build_preset("nope", 128).is_err());
    }
}
