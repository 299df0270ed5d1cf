//! Approximate-symmetry group actions `G = {e, g}` with `g` a signed node
//! involution, their construction on lattices, and orbit-averaged references.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::spin_model::{Lattice, QuadraticModel, SpinConfig};

/// Node involution lifted to configurations by `(g s)_{g(i)} = -s_i`
/// (or `+s_i` when `negate` is false).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedInvolution {
    perm: Vec<usize>,
    negate: bool,
}

impl SignedInvolution {
    pub fn new(perm: Vec<usize>, negate: bool) -> Result<Self> {
        let n = perm.len();
        for (i, &p) in perm.iter().enumerate() {
            if p >= n {
                return Err(Error::InvalidInput(format!(
                    "image {p} of node {i} out of range"
                )));
            }
            if perm[p] != i {
                return Err(Error::InvalidInput(format!(
                    "not an involution: {i} -> {p} -> {}",
                    perm[p]
                )));
            }
        }
        Ok(Self { perm, negate })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    #[inline]
    pub fn image(&self, i: usize) -> usize {
        self.perm[i]
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn negates(&self) -> bool {
        self.negate
    }

    pub fn fixed_points(&self) -> usize {
        self.perm
            .iter()
            .enumerate()
            .filter(|(i, &p)| *i == p)
            .count()
    }

    /// `t` with `t_{perm(i)} = -s_i`. Panics on a dimension mismatch.
    pub fn apply(&self, s: &SpinConfig) -> SpinConfig {
        let mut out = s.clone();
        self.apply_into(s, &mut out);
        out
    }

    pub fn apply_into(&self, s: &SpinConfig, out: &mut SpinConfig) {
        assert_eq!(
            s.len(),
            self.len(),
            "configuration/action dimension mismatch"
        );
        assert_eq!(
            out.len(),
            self.len(),
            "configuration/action dimension mismatch"
        );
        let sign: i8 = if self.negate { -1 } else { 1 };
        let src = s.as_slice();
        let dst = out.raw_mut();
        for (i, &p) in self.perm.iter().enumerate() {
            dst[p] = sign * src[i];
        }
    }
}

/// Transpose `(r, c) -> (c, r)` combined with global spin negation.
pub fn build_double_flip(lattice: &Lattice) -> Result<SignedInvolution> {
    if !lattice.is_square() {
        return Err(Error::InvalidGeometry(format!(
            "double flip needs a square lattice, got {}x{}",
            lattice.n1(),
            lattice.n2()
        )));
    }
    let perm = (0..lattice.len())
        .map(|i| {
            let (r, c) = lattice.coords(i);
            lattice.node(c, r)
        })
        .collect();
    SignedInvolution::new(perm, true)
}

/// Norm used to order nodes by distance from the center in the pairing scan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceNorm {
    #[default]
    Linf,
    L2,
}

impl DistanceNorm {
    fn of(self, (x, y): (f64, f64)) -> f64 {
        match self {
            DistanceNorm::Linf => x.abs().max(y.abs()),
            DistanceNorm::L2 => x.hypot(y),
        }
    }
}

/// Greedy geometric pairing for rectangular lattices.
///
/// Nodes are embedded in `[-1, 1]^2`; `y_i` is `x_i` with its coordinates
/// swapped. Nodes are scanned by decreasing `norm(x_j)`, ties by index; each
/// still-unpaired `j` is paired with the unpaired `i` whose `y_i` is closest
/// (Euclidean) to `x_j`, lowest index on ties. `i == j` yields a fixed point.
/// Outer nodes are paired first so the leftovers cluster near the center.
pub fn build_paired_flip(lattice: &Lattice, norm: DistanceNorm) -> SignedInvolution {
    let n = lattice.len();
    let x: Vec<(f64, f64)> = (0..n).map(|i| lattice.embed(i)).collect();
    let y: Vec<(f64, f64)> = x.iter().map(|&(a, b)| (b, a)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norm.of(x[b]).total_cmp(&norm.of(x[a])).then(a.cmp(&b)));

    const UNPAIRED: usize = usize::MAX;
    let mut perm = vec![UNPAIRED; n];
    for &j in &order {
        if perm[j] != UNPAIRED {
            continue;
        }
        let (xj0, xj1) = x[j];
        let mut best = UNPAIRED;
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            if perm[i] != UNPAIRED {
                continue;
            }
            let d = (y[i].0 - xj0).powi(2) + (y[i].1 - xj1).powi(2);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        // j itself is unpaired, so a candidate always exists.
        perm[j] = best;
        perm[best] = j;
    }
    SignedInvolution::new(perm, true).expect("pairing construction yields an involution")
}

/// `max_i |y_i - x_{g(i)}|` (Euclidean): zero for an exact transpose.
pub fn pairing_mismatch(lattice: &Lattice, action: &SignedInvolution) -> f64 {
    (0..lattice.len())
        .map(|i| {
            let (a, b) = lattice.embed(i);
            let (gx, gy) = lattice.embed(action.image(i));
            (b - gx).hypot(a - gy)
        })
        .fold(0.0, f64::max)
}

/// Max and mean of `|E(gs) - E(s)|` over a probe set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectStats {
    pub max: f64,
    pub mean: f64,
    pub probes: usize,
}

pub fn symmetry_defect(
    model: &QuadraticModel,
    action: &SignedInvolution,
    probes: &[SpinConfig],
) -> Result<DefectStats> {
    if probes.is_empty() {
        return Err(Error::InvalidInput(
            "symmetry defect needs at least one probe".into(),
        ));
    }
    if action.len() != model.len() {
        return Err(Error::DimensionMismatch {
            expected: model.len(),
            actual: action.len(),
        });
    }
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut image = probes[0].clone();
    for s in probes {
        if s.len() != model.len() {
            return Err(Error::DimensionMismatch {
                expected: model.len(),
                actual: s.len(),
            });
        }
        action.apply_into(s, &mut image);
        let d = (model.log_density(&image) - model.log_density(s)).abs();
        max = max.max(d);
        sum += d;
    }
    Ok(DefectStats {
        max,
        mean: sum / probes.len() as f64,
        probes: probes.len(),
    })
}

/// Largest `|E(gs) - E(s)| / (1 + |E(s)|)` over the probes.
pub fn relative_defect(
    model: &QuadraticModel,
    action: &SignedInvolution,
    probes: &[SpinConfig],
) -> f64 {
    probes
        .iter()
        .map(|s| {
            let e = model.log_density(s);
            (model.log_density(&action.apply(s)) - e).abs() / (1.0 + e.abs())
        })
        .fold(0.0, f64::max)
}

/// `count` uniform configurations from a stream seeded with `seed`.
pub fn random_probes(n: usize, count: usize, seed: u64) -> Vec<SpinConfig> {
    let mut rng = RngStream::new(seed);
    (0..count)
        .map(|_| SpinConfig::uniform(n, &mut rng))
        .collect()
}

pub const DEFECT_PROBES: usize = 1000;
const DEFECT_PROBE_SEED: u64 = 0x5eed_defe_c700;

/// Symmetric reference `E_R(s) = (E(s) + E(gs)) / 2` with the action that makes it
/// exact, and the target's defect under that action.
#[derive(Clone, Debug)]
pub struct OrbitAveragedModel {
    pub reference: QuadraticModel,
    pub action: SignedInvolution,
    pub defect: DefectStats,
}

/// Orbit average over `{e, g}`: `J_R = (J + P^T J P) / 2`, `h_R = (h - P h) / 2`
/// (`h + P h` for an unsigned action), same beta.
pub fn build_reference(
    model: &QuadraticModel,
    action: &SignedInvolution,
) -> Result<OrbitAveragedModel> {
    let n = model.len();
    if action.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: action.len(),
        });
    }
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for (i, j, w) in model.edges() {
        let half = 0.5 * w;
        let (gi, gj) = (action.image(i), action.image(j));
        for (a, b) in [(i, j), (gi, gj)] {
            *rows[a].entry(b).or_insert(0.0) += half;
            *rows[b].entry(a).or_insert(0.0) += half;
        }
    }
    let h = model.field();
    let field = (0..n)
        .map(|i| {
            let hg = h[action.image(i)];
            if action.negates() {
                0.5 * (h[i] - hg)
            } else {
                0.5 * (h[i] + hg)
            }
        })
        .collect();
    let mut reference = QuadraticModel::from_rows(rows, field, model.beta())?;
    if let Some((n1, n2)) = model.shape() {
        reference = reference.with_shape(n1, n2);
    }
    let probes = random_probes(n, DEFECT_PROBES, DEFECT_PROBE_SEED);
    let defect = symmetry_defect(model, action, &probes)?;
    Ok(OrbitAveragedModel {
        reference,
        action: action.clone(),
        defect,
    })
}

/// Writes `node image` lines under a short comment header.
pub fn write_pairing<W: Write>(
    action: &SignedInvolution,
    mismatch: Option<f64>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "# symsample pairing v1")?;
    writeln!(out, "# negate = {}", action.negates())?;
    if let Some(m) = mismatch {
        writeln!(out, "# max_mismatch = {m:.16e}")?;
    }
    writeln!(out, "# node image")?;
    for (i, &p) in action.perm().iter().enumerate() {
        writeln!(out, "{i} {p}")?;
    }
    Ok(())
}

pub fn read_pairing<R: BufRead>(input: R) -> Result<SignedInvolution> {
    let mut perm: Vec<Option<usize>> = Vec::new();
    let mut negate = true;
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("negate =") {
                negate = v.trim() == "true";
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |t: Option<&str>| -> Result<usize> {
            t.and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(lineno + 1, format!("bad pairing line `{line}`")))
        };
        let i = parse(it.next())?;
        let p = parse(it.next())?;
        if perm.len() <= i {
            perm.resize(i + 1, None);
        }
        perm[i] = Some(p);
    }
    let perm = perm
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| Error::parse(0, format!("missing node {i}"))))
        .collect::<Result<Vec<_>>>()?;
    SignedInvolution::new(perm, negate)
}
