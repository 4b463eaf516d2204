use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{convex_hull, normalize_w_frame, ConvexPolygon, Point};

pub const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Rectangle,
    IsocelesTriangle,
    HexLens,
    RandomConvex,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] =
        [FamilyKind::Rectangle, FamilyKind::IsocelesTriangle, FamilyKind::HexLens, FamilyKind::RandomConvex];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Rectangle => "rectangle",
            FamilyKind::IsocelesTriangle => "isoceles_triangle",
            FamilyKind::HexLens => "hex_lens",
            FamilyKind::RandomConvex => "random_convex",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown family kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub eps: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Each level halves the mesh size and doubles the ODE elements and
    /// bridge samples.
    #[serde(default)]
    pub refinement: u32,
}

impl FamilySpec {
    pub fn new(kind: FamilyKind, eps: &[f64]) -> Self {
        FamilySpec { kind, eps: eps.to_vec(), seed: 0, refinement: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::invalid("empty eps list"));
        }
        for &e in &self.eps {
            if !(e > 0.0 && e < 0.5) {
                return Err(Error::OutOfRange { what: "eps", value: e, lo: 0.0, hi: 0.5 });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Domain {
    pub id: String,
    pub kind: FamilyKind,
    /// The requested width.
    pub eps: f64,
    pub polygon: ConvexPolygon,
}

pub fn domain_id(kind: FamilyKind, index: usize, eps: f64) -> String {
    format!("{kind}-{index:03}-eps{eps:.4}")
}

pub fn generate_family(spec: &FamilySpec) -> Result<Vec<Domain>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    spec.eps
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let polygon = match spec.kind {
                FamilyKind::Rectangle => rectangle(eps),
                FamilyKind::IsocelesTriangle => isoceles_triangle(eps),
                FamilyKind::HexLens => hex_lens(eps),
                FamilyKind::RandomConvex => random_convex(eps, &mut rng),
            }?;
            Ok(Domain { id: domain_id(spec.kind, i, eps), kind: spec.kind, eps, polygon })
        })
        .collect()
}

/// `[0, sqrt(4 - eps^2)] x [0, eps]`, diameter 2.
pub fn rectangle(eps: f64) -> Result<ConvexPolygon> {
    let a = (4.0 - eps * eps).sqrt();
    ConvexPolygon::new(vec![Point::new(0.0, 0.0), Point::new(a, 0.0), Point::new(a, eps), Point::new(0.0, eps)])
}

/// Two sides of length 2 meeting at the origin with opening angle `2 alpha`,
/// `sin(2 alpha) = eps / 2`: the altitude onto a long side is `eps`.
pub fn isoceles_triangle(eps: f64) -> Result<ConvexPolygon> {
    let alpha = 0.5 * (0.5 * eps).asin();
    let (s, c) = alpha.sin_cos();
    ConvexPolygon::new(vec![Point::new(0.0, 0.0), Point::new(2.0 * c, -2.0 * s), Point::new(2.0 * c, 2.0 * s)])
}

/// Hexagon with tips at `(0, 0)` and `(2, 0)` and flat top and bottom at
/// `y = +-eps/2` over `[1/2, 3/2]`.
pub fn hex_lens(eps: f64) -> Result<ConvexPolygon> {
    let e = 0.5 * eps;
    ConvexPolygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(0.5, -e),
        Point::new(1.5, -e),
        Point::new(2.0, 0.0),
        Point::new(1.5, e),
        Point::new(0.5, e),
    ])
}

/// Hull of 5 to 12 uniform points in `[0, 2] x [0, eps]`, stretched in the
/// width direction once to aim at `eps`, then put in w-frame position.
/// Candidates with width off by more than 10% are drawn again.
pub fn random_convex(eps: f64, rng: &mut impl Rng) -> Result<ConvexPolygon> {
    for _ in 0..MAX_ATTEMPTS {
        let n = rng.gen_range(5..=12);
        let pts: Vec<Point> = (0..n).map(|_| Point::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..eps))).collect();
        let Ok(hull) = convex_hull(&pts) else { continue };
        let Ok((framed, frame)) = normalize_w_frame(&hull) else { continue };
        let s = eps / frame.eps;
        let Ok(stretched) = framed.map(|p| Point::new(p.x, s * p.y)) else { continue };
        let Ok((out, frame)) = normalize_w_frame(&stretched) else { continue };
        if (frame.eps - eps).abs() <= 0.1 * eps {
            return Ok(out);
        }
    }
    Err(Error::Generation { attempts: MAX_ATTEMPTS })
}
