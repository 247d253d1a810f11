//! The right toroid T(r) = ∏ S¹(r_k), its lattice, and the natural convex
//! partition whose parts meet every diagonal coset in arcs proportional to
//! the squared radii.
//!
//! Geometry lives in arc coordinates: the covering box is
//! B = [0, s₁)×…×[0, s_n) with s_k = 2π r_k, and ϖ: ℝⁿ → T(r) reduces
//! coordinates modulo the lattice generated by f_k = s_k e_k. The part 𝔭_k
//! is the ϖ-image of the parallelotope A_k spanned by {g_j = w_j s − f_j}
//! (j ≠ k) and w_k s, where s = Σ f_j and w_j = r_j²/Σr² are the normalized
//! weights. Point location never materializes A_k: reduce into the box,
//! sort the per-axis fractions a_ν = S_ν/s_ν descending, and bracket
//! τ = Σ w_ν a_ν between the prefix sums of the sorted weights — the slab
//! of the sorted simplex that contains the point names the part.

use rand::Rng;
use serde::Serialize;

use crate::{Error, Result};

/// Radii gap below which the toroid construction refuses to run.
pub const RADII_DISTINCT_TOL: f64 = 1e-10;
/// Boundary band for tie-breaking in point location.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A right toroid with strictly descending positive radii.
#[derive(Debug, Clone)]
pub struct RightToroid {
    radii: Vec<f64>,
    /// Circumferences s_k = 2π r_k.
    circumferences: Vec<f64>,
    /// Normalized weights w_k = r_k²/Σ r².
    weights: Vec<f64>,
}

impl RightToroid {
    /// Radii must be positive, sorted strictly descending. (For toroids
    /// derived from states Σ r² = 1; the geometry itself only needs the
    /// normalized weights, which are formed internally.)
    pub fn new(radii: &[f64]) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidParameter("empty radii".into()));
        }
        for w in radii.windows(2) {
            if w[1] >= w[0] - RADII_DISTINCT_TOL {
                return Err(Error::DegenerateRadii { gap: w[0] - w[1], t: f64::NAN });
            }
        }
        if radii[radii.len() - 1] <= 0.0 {
            return Err(Error::InvalidParameter("radii must be positive".into()));
        }
        let total: f64 = radii.iter().map(|r| r * r).sum();
        Ok(Self {
            radii: radii.to_vec(),
            circumferences: radii.iter().map(|r| std::f64::consts::TAU * r).collect(),
            weights: radii.iter().map(|r| r * r / total).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn circumferences(&self) -> &[f64] {
        &self.circumferences
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// f_j = s_j e_j.
    pub fn lattice_generator(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        v[j] = self.circumferences[j];
        v
    }

    /// The diagonal vector s = Σ_j f_j.
    pub fn diagonal(&self) -> Vec<f64> {
        self.circumferences.clone()
    }

    /// g_j = w_j·s − f_j (the projections of −f_j onto the diagonal's
    /// orthogonal complement, up to the w-weighting).
    pub fn slab_generator(&self, j: usize) -> Vec<f64> {
        let s = self.diagonal();
        let mut v: Vec<f64> = s.iter().map(|x| self.weights[j] * x).collect();
        v[j] -= self.circumferences[j];
        v
    }

    /// Reduce a point of ℝⁿ into the covering box [0, s_k).
    pub fn reduce(&self, coords: &[f64]) -> Result<ToroidPoint> {
        ToroidPoint::new(self, coords)
    }

    /// Uniform random point.
    pub fn sample(&self, rng: &mut impl Rng) -> ToroidPoint {
        let coords = self
            .circumferences
            .iter()
            .map(|&s| rng.gen_range(0.0..s))
            .collect();
        ToroidPoint { coords }
    }
}

/// A point of the toroid in arc coordinates S_k = r_k θ_k ∈ [0, s_k).
#[derive(Debug, Clone, PartialEq)]
pub struct ToroidPoint {
    pub coords: Vec<f64>,
}

impl ToroidPoint {
    pub fn new(toroid: &RightToroid, coords: &[f64]) -> Result<Self> {
        if coords.len() != toroid.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, toroid dimension {}",
                coords.len(),
                toroid.dim()
            )));
        }
        let reduced = coords
            .iter()
            .zip(toroid.circumferences.iter())
            .map(|(&x, &s)| {
                let mut v = x % s;
                if v < 0.0 {
                    v += s;
                }
                if v >= s {
                    v = 0.0;
                }
                v
            })
            .collect();
        Ok(Self { coords: reduced })
    }

    /// Build from amplitude phases: S_k = r_k · arg(q_k).
    pub fn from_phases(toroid: &RightToroid, phases: &[f64]) -> Result<Self> {
        if phases.len() != toroid.dim() {
            return Err(Error::DimensionMismatch("phase count != dimension".into()));
        }
        let coords: Vec<f64> = phases
            .iter()
            .zip(toroid.radii.iter())
            .map(|(&th, &r)| th * r)
            .collect();
        Self::new(toroid, &coords)
    }
}

/// Result of point location: the part index (0-based) plus a boundary flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PartitionLabel {
    pub k: usize,
    pub on_boundary: bool,
}

/// Locates the part 𝔭_k containing a point.
///
/// Ties in the fraction sort and bracketing coincidences within
/// [`BOUNDARY_TOL`] are resolved toward the lowest part index and flagged.
pub fn locate(point: &ToroidPoint, toroid: &RightToroid) -> Result<PartitionLabel> {
    let n = toroid.dim();
    if point.coords.len() != n {
        return Err(Error::DimensionMismatch("point/toroid dimension".into()));
    }
    let fractions: Vec<f64> = point
        .coords
        .iter()
        .zip(toroid.circumferences.iter())
        .map(|(&x, &s)| x / s)
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        fractions[j]
            .partial_cmp(&fractions[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let mut boundary = false;
    for w in order.windows(2) {
        if (fractions[w[0]] - fractions[w[1]]).abs() < BOUNDARY_TOL {
            boundary = true;
        }
    }
    let tau: f64 = (0..n).map(|i| toroid.weights[i] * fractions[i]).sum();
    let mut acc = 0.0;
    let mut candidates: Vec<usize> = Vec::new();
    for &idx in &order {
        let hi = acc + toroid.weights[idx];
        if tau >= acc - BOUNDARY_TOL && tau <= hi + BOUNDARY_TOL {
            candidates.push(idx);
            if (tau - acc).abs() < BOUNDARY_TOL || (tau - hi).abs() < BOUNDARY_TOL {
                boundary = true;
            }
        }
        acc = hi;
    }
    let k = *candidates
        .iter()
        .min()
        .ok_or_else(|| Error::InvalidParameter("bracketing failed".into()))?;
    if candidates.len() > 1 {
        boundary = true;
    }
    Ok(PartitionLabel { k, on_boundary: boundary })
}

/// Measures, per part, the fraction of one full diagonal coset through
/// `base` covered by that part. The sweep is exact: along a diagonal all
/// fractions advance at unit rate, so the bracketing only changes at
/// per-axis wrap events and at linear threshold crossings in between.
/// Returns arc lengths (sum = 2π√(Σr²)).
pub fn diagonal_arcs(toroid: &RightToroid, base: &ToroidPoint) -> Result<Vec<f64>> {
    let n = toroid.dim();
    let length: f64 = std::f64::consts::TAU
        * toroid.radii.iter().map(|r| r * r).sum::<f64>().sqrt();
    // Wrap event times of each axis fraction: tau in [0,1).
    let c: Vec<f64> = base
        .coords
        .iter()
        .zip(toroid.circumferences.iter())
        .map(|(&x, &s)| x / s)
        .collect();
    let mut events: Vec<f64> = c
        .iter()
        .map(|&ci| {
            let w = (1.0 - ci) % 1.0;
            if w < 0.0 { w + 1.0 } else { w }
        })
        .collect();
    events.push(0.0);
    events.push(1.0);
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let mut arcs = vec![0.0; n];
    for w in events.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo < 1e-15 {
            continue;
        }
        // Inside this segment the sorted order is fixed; τ(t) = τ(lo) + (t−lo).
        // Break the segment further at threshold crossings.
        let probe = 0.5 * (lo + hi);
        let frac = |t: f64| -> Vec<f64> {
            c.iter()
                .map(|&ci| {
                    let mut v = (ci + t) % 1.0;
                    if v < 0.0 {
                        v += 1.0;
                    }
                    v
                })
                .collect()
        };
        let fr = frac(probe);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| fr[j].partial_cmp(&fr[i]).unwrap().then(i.cmp(&j)));
        let tau_probe: f64 = (0..n).map(|i| toroid.weights[i] * fr[i]).sum();
        // τ at segment start (linear with slope 1 in t).
        let tau_lo = tau_probe - (probe - lo);
        // Prefix thresholds in sorted order.
        let mut cuts = vec![lo];
        let mut acc = 0.0;
        for &idx in &order {
            acc += toroid.weights[idx];
            let t_cross = lo + (acc - tau_lo);
            if t_cross > lo + 1e-15 && t_cross < hi - 1e-15 {
                cuts.push(t_cross);
            }
        }
        cuts.push(hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for piece in cuts.windows(2) {
            let mid = 0.5 * (piece[0] + piece[1]);
            let tau_mid = tau_lo + (mid - lo);
            let mut acc2 = 0.0;
            let mut label = order[n - 1];
            for &idx in &order {
                if tau_mid >= acc2 && tau_mid <= acc2 + toroid.weights[idx] {
                    label = idx;
                    break;
                }
                acc2 += toroid.weights[idx];
            }
            arcs[label] += (piece[1] - piece[0]) * length;
        }
    }
    Ok(arcs)
}

/// Sampled variant of [`diagonal_arcs`] (point-location oracle route).
pub fn diagonal_arcs_sampled(
    toroid: &RightToroid,
    base: &ToroidPoint,
    samples: usize,
) -> Result<Vec<f64>> {
    let n = toroid.dim();
    let length: f64 = std::f64::consts::TAU
        * toroid.radii.iter().map(|r| r * r).sum::<f64>().sqrt();
    let mut arcs = vec![0.0; n];
    let s = toroid.diagonal();
    for i in 0..samples {
        let t = (i as f64 + 0.5) / samples as f64;
        let coords: Vec<f64> = base
            .coords
            .iter()
            .zip(s.iter())
            .map(|(&b, &sv)| b + t * sv)
            .collect();
        let p = toroid.reduce(&coords)?;
        let label = locate(&p, toroid)?;
        arcs[label.k] += length / samples as f64;
    }
    Ok(arcs)
}

/// Monte-Carlo volume fraction of part k; the expected value is the
/// normalized weight w_k.
pub fn part_measure(
    toroid: &RightToroid,
    k: usize,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if samples < 10_000 {
        return Err(Error::TooFewSamples { got: samples, need: 10_000 });
    }
    if k >= toroid.dim() {
        return Err(Error::InvalidParameter(format!("part index {k} out of range")));
    }
    let mut hits = 0usize;
    for _ in 0..samples {
        let p = toroid.sample(rng);
        if locate(&p, toroid)?.k == k {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}

/// Exact vertex data of the lifted cells, for visualization and oracles.
#[derive(Debug, Clone, Serialize)]
pub struct CellGeometry {
    pub k: usize,
    /// 2ⁿ vertices of the parallelotope A_k.
    pub parallelotope: Vec<Vec<f64>>,
    /// Vertices of the simplex slab Sl†(k, σ) for each permutation σ
    /// (paired with σ itself, one-line notation).
    pub slabs: Vec<(Vec<usize>, Vec<Vec<f64>>)>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q: Vec<usize> = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Exact cell geometry for n ≤ 4: the parallelotope A_k (all vertex
/// combinations of g_j, j ≠ k, plus the diagonal segment w_k·s) and the
/// slab pieces Sl†(k, σ) whose lattice translates tile it.
pub fn cell_geometry(toroid: &RightToroid, k: usize) -> Result<CellGeometry> {
    let n = toroid.dim();
    if n > 4 {
        return Err(Error::InvalidParameter(format!(
            "cell export limited to n <= 4, got {n}"
        )));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!("part index {k} out of range")));
    }
    let s = toroid.diagonal();
    let w = toroid.weights();
    let gens: Vec<Vec<f64>> = (0..n).filter(|&j| j != k).map(|j| toroid.slab_generator(j)).collect();
    let mut parallelotope = Vec::new();
    for mask in 0..(1usize << (n - 1)) {
        for &with_diag in &[0.0, 1.0] {
            let mut v = vec![0.0; n];
            for (bit, g) in gens.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    for i in 0..n {
                        v[i] += g[i];
                    }
                }
            }
            for i in 0..n {
                v[i] += with_diag * w[k] * s[i];
            }
            parallelotope.push(v);
        }
    }

    // Slab pieces: vertices of Sl(k, σ) − v_{kσ} where Sl(k, σ) is the cut
    // of the sorted simplex between the diagonal-normal hyperplanes through
    // the σ-chain vertices numbered σ⁻¹(k) − 1 and σ⁻¹(k).
    let total_s2: f64 = s.iter().map(|x| x * x).sum();
    let mut slabs = Vec::new();
    for sigma in permutations(n) {
        let mut chain = vec![vec![0.0; n]];
        for &ax in &sigma {
            let mut nxt = chain.last().unwrap().clone();
            nxt[ax] += s[ax];
            chain.push(nxt);
        }
        let pos = sigma.iter().position(|&x| x == k).unwrap();
        // Normalized diagonal height of a point: h(x) = (s·x)/(s·s) ∈ [0,1];
        // h(chain[j]) = prefix weight sums.
        let height = |v: &[f64]| -> f64 {
            v.iter().zip(s.iter()).map(|(a, b)| a * b).sum::<f64>() / total_s2
        };
        let h_lo = height(&chain[pos]);
        let h_hi = height(&chain[pos + 1]);
        let mut verts: Vec<Vec<f64>> = Vec::new();
        // Simplex vertices inside the slab.
        for v in &chain {
            let h = height(v);
            if h >= h_lo - 1e-14 && h <= h_hi + 1e-14 {
                verts.push(v.clone());
            }
        }
        // Edge/hyperplane intersections.
        for a in 0..chain.len() {
            for b in (a + 1)..chain.len() {
                let (ha, hb) = (height(&chain[a]), height(&chain[b]));
                for cut in [h_lo, h_hi] {
                    if (ha - cut) * (hb - cut) < -1e-14 {
                        let t = (cut - ha) / (hb - ha);
                        let v: Vec<f64> = chain[a]
                            .iter()
                            .zip(chain[b].iter())
                            .map(|(x, y)| x + t * (y - x))
                            .collect();
                        verts.push(v);
                    }
                }
            }
        }
        // Translate by −v_{kσ} = −chain[pos].
        let base = chain[pos].clone();
        for v in verts.iter_mut() {
            for i in 0..n {
                v[i] -= base[i];
            }
        }
        dedup_vertices(&mut verts);
        slabs.push((sigma, verts));
    }
    Ok(CellGeometry { k, parallelotope, slabs })
}

fn dedup_vertices(verts: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in verts.iter() {
        if !out.iter().any(|u| {
            u.iter().zip(v.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < 1e-10
        }) {
            out.push(v.clone());
        }
    }
    *verts = out;
}

/// Report of a naturality check: labels on the sub-toroid (dropped axis at
/// its basepoint) must agree with the labels of the smaller toroid.
#[derive(Debug, Clone, Serialize)]
pub struct NaturalityReport {
    pub axis_dropped: usize,
    pub samples: usize,
    pub violations: usize,
    pub boundary_skips: usize,
}

pub fn check_naturality(
    toroid: &RightToroid,
    axis_to_drop: usize,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<NaturalityReport> {
    let n = toroid.dim();
    if n < 2 {
        return Err(Error::InvalidParameter("need n >= 2".into()));
    }
    if axis_to_drop >= n {
        return Err(Error::InvalidParameter("axis out of range".into()));
    }
    // The sub-toroid keeps the remaining radii (still descending); its part
    // indices map back through `kept`.
    let kept: Vec<usize> = (0..n).filter(|&j| j != axis_to_drop).collect();
    let sub_radii: Vec<f64> = kept.iter().map(|&j| toroid.radii[j]).collect();
    let sub = RightToroid::new(&sub_radii)?;
    let mut violations = 0;
    let mut boundary_skips = 0;
    for _ in 0..samples {
        let sub_pt = sub.sample(rng);
        let mut full_coords = vec![0.0; n];
        for (i, &j) in kept.iter().enumerate() {
            full_coords[j] = sub_pt.coords[i];
        }
        let full_pt = toroid.reduce(&full_coords)?;
        let full_label = locate(&full_pt, toroid)?;
        let sub_label = locate(&sub_pt, &sub)?;
        if full_label.on_boundary || sub_label.on_boundary {
            boundary_skips += 1;
            continue;
        }
        if full_label.k != kept[sub_label.k] {
            violations += 1;
        }
    }
    Ok(NaturalityReport { axis_dropped: axis_to_drop, samples, violations, boundary_skips })
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

/// SVG of the n = 2 partition: the covering box, the diagonal, the slab
/// pieces colored by part, and the A_k outlines.
pub fn partition_svg(toroid: &RightToroid) -> Result<String> {
    if toroid.dim() != 2 {
        return Err(Error::InvalidParameter("svg export is n = 2 only".into()));
    }
    let s = toroid.diagonal();
    let (w, h) = (s[0], s[1]);
    let scale = 600.0 / w.max(h);
    let pad = 20.0;
    let map = |x: f64, y: f64| -> (f64, f64) { (pad + x * scale, pad + (h - y) * scale) };
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n",
        2.0 * pad + w * scale,
        2.0 * pad + h * scale,
        2.0 * pad + w * scale,
        2.0 * pad + h * scale
    );
    let colors = ["#4878cf", "#d65f5f", "#6acc65", "#c4ad66"];
    for k in 0..2 {
        let geo = cell_geometry(toroid, k)?;
        for (_, verts) in &geo.slabs {
            // Order the (convex, planar) piece by angle for the polygon.
            let cx: f64 = verts.iter().map(|v| v[0]).sum::<f64>() / verts.len() as f64;
            let cy: f64 = verts.iter().map(|v| v[1]).sum::<f64>() / verts.len() as f64;
            let mut ordered = verts.clone();
            ordered.sort_by(|a, b| {
                let ta = (a[1] - cy).atan2(a[0] - cx);
                let tb = (b[1] - cy).atan2(b[0] - cx);
                ta.partial_cmp(&tb).unwrap()
            });
            let pts: Vec<String> = ordered
                .iter()
                .map(|v| {
                    // shift into the box for display
                    let (mut x, mut y) = (v[0], v[1]);
                    if x < -1e-9 {
                        x += w;
                    }
                    if y < -1e-9 {
                        y += h;
                    }
                    let (px, py) = map(x, y);
                    format!("{px:.2},{py:.2}")
                })
                .collect();
            out += &format!(
                "  <polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.45\" stroke=\"#333\" stroke-width=\"0.8\"/>\n",
                pts.join(" "),
                colors[k % colors.len()]
            );
        }
    }
    let (x0, y0) = map(0.0, 0.0);
    let (x1, y1) = map(w, h);
    out += &format!(
        "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#000\" stroke-width=\"1.5\"/>\n",
        x0.min(x1),
        y0.min(y1),
        (x1 - x0).abs(),
        (y0 - y1).abs()
    );
    let (dx, dy) = map(w, h);
    out += &format!(
        "  <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{dx:.2}\" y2=\"{dy:.2}\" stroke=\"#000\" stroke-width=\"1\" stroke-dasharray=\"6 4\"/>\n"
    );
    for (k, label) in ["p1", "p2"].iter().enumerate() {
        let frac = if k == 0 { 0.75 } else { 0.25 };
        let (lx, ly) = map(frac * w, (1.0 - frac) * h * 0.35 + 0.05 * h);
        out += &format!(
            "  <text x=\"{lx:.2}\" y=\"{ly:.2}\" font-size=\"18\" fill=\"#000\">{label}</text>\n"
        );
    }
    out += "</svg>\n";
    Ok(out)
}

/// OBJ-style vertex/face text for the n = 3 cells.
pub fn partition_obj(toroid: &RightToroid) -> Result<String> {
    if toroid.dim() != 3 {
        return Err(Error::InvalidParameter("obj export is n = 3 only".into()));
    }
    let mut out = String::new();
    let mut offset = 1usize;
    for k in 0..3 {
        let geo = cell_geometry(toroid, k)?;
        out += &format!("o part_{}\n", k + 1);
        for v in &geo.parallelotope {
            out += &format!("v {:.9} {:.9} {:.9}\n", v[0], v[1], v[2]);
        }
        // Parallelotope faces: for each generator pair, the two quads; we
        // emit the 6 faces of the 3-parallelotope through vertex masks.
        // Vertices are indexed by (mask over the two g's, diagonal bit):
        // index = mask*2 + diag (see cell_geometry ordering).
        let idx = |mask: usize, diag: usize| offset + mask * 2 + diag;
        let faces = [
            [idx(0, 0), idx(1, 0), idx(3, 0), idx(2, 0)],
            [idx(0, 1), idx(1, 1), idx(3, 1), idx(2, 1)],
            [idx(0, 0), idx(1, 0), idx(1, 1), idx(0, 1)],
            [idx(2, 0), idx(3, 0), idx(3, 1), idx(2, 1)],
            [idx(0, 0), idx(2, 0), idx(2, 1), idx(0, 1)],
            [idx(1, 0), idx(3, 0), idx(3, 1), idx(1, 1)],
        ];
        for f in faces {
            out += &format!("f {} {} {} {}\n", f[0], f[1], f[2], f[3]);
        }
        offset += geo.parallelotope.len();
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Brute-force oracle: membership via half-space tests on the slab pieces.
// ---------------------------------------------------------------------------

/// Labels a box point by direct half-space membership in the simplex slabs
/// Sl(k, σ): the sorted-fraction chain inequalities plus the two diagonal
/// cuts. Exponential in n — oracle use only.
pub fn locate_bruteforce(point: &ToroidPoint, toroid: &RightToroid) -> Result<Vec<usize>> {
    let n = toroid.dim();
    let s = toroid.diagonal();
    let total_s2: f64 = s.iter().map(|x| x * x).sum();
    let frac: Vec<f64> = point
        .coords
        .iter()
        .zip(toroid.circumferences.iter())
        .map(|(&x, &sv)| x / sv)
        .collect();
    let height: f64 = point
        .coords
        .iter()
        .zip(s.iter())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / total_s2;
    let mut labels = Vec::new();
    let eps = 1e-12;
    for sigma in permutations(n) {
        // x ∈ S_σ ⟺ a_{σ(1)} ≥ a_{σ(2)} ≥ … ≥ a_{σ(n)} ≥ 0, a_{σ(1)} ≤ 1.
        let mut ok = frac[sigma[0]] <= 1.0 + eps && frac[sigma[n - 1]] >= -eps;
        for w in sigma.windows(2) {
            ok &= frac[w[0]] >= frac[w[1]] - eps;
        }
        if !ok {
            continue;
        }
        for k in 0..n {
            let pos = sigma.iter().position(|&x| x == k).unwrap();
            let lo: f64 = sigma[..pos].iter().map(|&j| toroid.weights[j]).sum();
            let hi = lo + toroid.weights[k];
            if height >= lo - eps && height <= hi + eps {
                labels.push(k);
            }
        }
    }
    labels.sort_unstable();
    labels.dedup();
    if labels.is_empty() {
        return Err(Error::InvalidParameter("brute-force membership found no cell".into()));
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toroid2() -> RightToroid {
        RightToroid::new(&[0.8f64.sqrt(), 0.2f64.sqrt()]).unwrap()
    }

    fn toroid3() -> RightToroid {
        let raw = [5.0, 4.0, 3.0];
        let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>();
        let r: Vec<f64> = raw.iter().map(|x| x / norm.sqrt()).collect();
        RightToroid::new(&r).unwrap()
    }

    #[test]
    fn rejects_degenerate_radii() {
        assert!(matches!(
            RightToroid::new(&[0.7, 0.7]),
            Err(Error::DegenerateRadii { .. })
        ));
        assert!(RightToroid::new(&[0.5, 0.6]).is_err()); // not descending
    }

    #[test]
    fn n1_always_first_part() {
        let t = RightToroid::new(&[1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = t.sample(&mut rng);
            assert_eq!(locate(&p, &t).unwrap().k, 0);
        }
    }

    #[test]
    fn generating_circles_live_in_their_parts() {
        // Points on C_k (all other coordinates at the basepoint) get label k.
        for toroid in [toroid2(), toroid3()] {
            let n = toroid.dim();
            for k in 0..n {
                for i in 1..40 {
                    let mut coords = vec![0.0; n];
                    coords[k] = toroid.circumferences()[k] * i as f64 / 40.0;
                    let p = toroid.reduce(&coords).unwrap();
                    let l = locate(&p, &toroid).unwrap();
                    assert_eq!(l.k, k, "n={n} circle {k} sample {i}");
                }
            }
        }
    }

    #[test]
    fn locate_agrees_with_bruteforce_n3() {
        let toroid = toroid3();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        for _ in 0..10_000 {
            let p = toroid.sample(&mut rng);
            let l = locate(&p, &toroid).unwrap();
            let brute = locate_bruteforce(&p, &toroid).unwrap();
            if l.on_boundary || brute.len() > 1 {
                continue;
            }
            assert_eq!(vec![l.k], brute, "point {:?}", p.coords);
            checked += 1;
        }
        assert!(checked > 9_900, "too many boundary skips: {checked}");
    }

    #[test]
    fn inversion_symmetry() {
        let toroid = toroid3();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let p = toroid.sample(&mut rng);
            let l1 = locate(&p, &toroid).unwrap();
            let neg: Vec<f64> = p.coords.iter().map(|&x| -x).collect();
            let p2 = toroid.reduce(&neg).unwrap();
            let l2 = locate(&p2, &toroid).unwrap();
            if l1.on_boundary || l2.on_boundary {
                continue;
            }
            assert_eq!(l1.k, l2.k);
        }
    }

    #[test]
    fn exact_diagonal_arcs_n2() {
        let toroid = toroid2();
        let base = toroid.reduce(&[0.0, 0.0]).unwrap();
        let arcs = diagonal_arcs(&toroid, &base).unwrap();
        let tau = std::f64::consts::TAU;
        assert!((arcs[0] - 0.8 * tau).abs() < 1e-9, "{arcs:?}");
        assert!((arcs[1] - 0.2 * tau).abs() < 1e-9, "{arcs:?}");
    }

    #[test]
    fn diagonal_arcs_random_offsets_match_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for toroid in [toroid2(), toroid3()] {
            let tau = std::f64::consts::TAU;
            for _ in 0..20 {
                let base = toroid.sample(&mut rng);
                let arcs = diagonal_arcs(&toroid, &base).unwrap();
                let total: f64 = arcs.iter().sum();
                assert!((total - tau).abs() < 1e-9, "arcs must fill the coset");
                for (k, &a) in arcs.iter().enumerate() {
                    assert!(
                        (a - tau * toroid.weights()[k]).abs() < 1e-9,
                        "part {k}: {a} vs {}",
                        tau * toroid.weights()[k]
                    );
                }
            }
        }
    }

    #[test]
    fn diagonal_arcs_n4_exact_and_sampled() {
        let raw = [0.63, 0.52, 0.41, 0.27];
        let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>();
        let r: Vec<f64> = raw.iter().map(|x| x / norm.sqrt()).collect();
        let toroid = RightToroid::new(&r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base = toroid.sample(&mut rng);
        let exact = diagonal_arcs(&toroid, &base).unwrap();
        let sampled = diagonal_arcs_sampled(&toroid, &base, 400_000).unwrap();
        let tau = std::f64::consts::TAU;
        let total: f64 = exact.iter().sum();
        assert!((total - tau).abs() < 1e-9);
        for k in 0..4 {
            assert!((exact[k] - tau * toroid.weights()[k]).abs() < 1e-9);
            assert!((exact[k] - sampled[k]).abs() < 1e-3);
        }
    }

    #[test]
    fn part_measures_match_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let toroid = RightToroid::new(&[0.6f64.sqrt(), 0.4f64.sqrt()]).unwrap();
        let n_samples = 100_000;
        let frac = part_measure(&toroid, 0, n_samples, &mut rng).unwrap();
        let p = 0.6;
        let sigma = (p * (1.0 - p) / n_samples as f64).sqrt();
        assert!((frac - p).abs() < 3.0 * sigma, "{frac} vs {p} (3s = {})", 3.0 * sigma);
    }

    #[test]
    fn five_part_measures_sum_to_one() {
        let raw = [0.61, 0.5, 0.42, 0.33, 0.21];
        let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>();
        let r: Vec<f64> = raw.iter().map(|x| x / norm.sqrt()).collect();
        let toroid = RightToroid::new(&r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n_samples = 20_000;
        let mut total = 0.0;
        for k in 0..5 {
            let mut rng_k = ChaCha8Rng::seed_from_u64(13 + k as u64);
            let frac = part_measure(&toroid, k, n_samples, &mut rng_k).unwrap();
            let p = toroid.weights()[k];
            let sigma = (p * (1.0 - p) / n_samples as f64).sqrt();
            assert!((frac - p).abs() < 4.0 * sigma, "part {k}");
            total += part_measure(&toroid, k, n_samples, &mut rng).unwrap();
        }
        assert!((total - 1.0).abs() < 0.02);
    }

    #[test]
    fn parallelotope_has_2n_vertices_and_is_convex() {
        for toroid in [toroid2(), toroid3()] {
            let n = toroid.dim();
            for k in 0..n {
                let geo = cell_geometry(&toroid, k).unwrap();
                assert_eq!(geo.parallelotope.len(), 1 << n);
                // Convexity: midpoints of random vertex pairs lie inside the
                // half-space hull of the generators (parallelotope test via
                // coordinates in the generator basis).
                let gens: Vec<Vec<f64>> = (0..n)
                    .filter(|&j| j != k)
                    .map(|j| toroid.slab_generator(j))
                    .collect();
                let s = toroid.diagonal();
                let wk = toroid.weights()[k];
                let diag: Vec<f64> = s.iter().map(|x| wk * x).collect();
                let mut basis = gens.clone();
                basis.push(diag);
                // Solve coords for each vertex via Gaussian elimination.
                for v in &geo.parallelotope {
                    let c = solve(&basis, v);
                    for x in c {
                        assert!((-1e-9..=1.0 + 1e-9).contains(&x), "vertex outside");
                    }
                }
            }
        }
    }

    fn solve(basis: &[Vec<f64>], target: &[f64]) -> Vec<f64> {
        // Solve Σ c_i basis_i = target by Gaussian elimination (small n).
        let n = basis.len();
        let mut a = vec![vec![0.0; n + 1]; n];
        for row in 0..n {
            for col in 0..n {
                a[row][col] = basis[col][row];
            }
            a[row][n] = target[row];
        }
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            let d = a[col][col];
            for x in a[col].iter_mut() {
                *x /= d;
            }
            for row in 0..n {
                if row != col {
                    let f = a[row][col];
                    for c2 in 0..=n {
                        a[row][c2] -= f * a[col][c2];
                    }
                }
            }
        }
        (0..n).map(|i| a[i][n]).collect()
    }

    #[test]
    fn slab_translates_tile_the_parallelotope() {
        // Random points of A_k must land in exactly one Sl†(k, σ) up to a
        // lattice translate; conversely each slab piece sits inside A_k
        // modulo the lattice. Checked via the quotient: ϖ(A_k) carries
        // label k everywhere.
        let toroid = toroid3();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in 0..3 {
            let gens: Vec<Vec<f64>> = (0..3)
                .filter(|&j| j != k)
                .map(|j| toroid.slab_generator(j))
                .collect();
            let s = toroid.diagonal();
            let wk = toroid.weights()[k];
            for _ in 0..2000 {
                let (u, v, w) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
                let coords: Vec<f64> = (0..3)
                    .map(|i| u * gens[0][i] + v * gens[1][i] + w * wk * s[i])
                    .collect();
                let p = toroid.reduce(&coords).unwrap();
                let l = locate(&p, &toroid).unwrap();
                if l.on_boundary {
                    continue;
                }
                assert_eq!(l.k, k, "interior point of A_{k} mislabeled");
            }
        }
    }

    #[test]
    fn hexagonal_projection_for_n3() {
        // Each slab generator g_j is orthogonal to the diagonal, so a single
        // A_k projects along the diagonal to a parallelogram; the union of
        // the three shadows is the hexagon of the zonotope tiling, tiled by
        // the parallelograms without overlap (areas add up).
        let toroid = toroid3();
        let s = toroid.diagonal();
        let s2: f64 = s.iter().map(|x| x * x).sum();
        // Orthonormal basis of the diagonal's orthogonal complement.
        let e1 = {
            let mut v = vec![s[1], -s[0], 0.0];
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            for x in v.iter_mut() {
                *x /= n;
            }
            v
        };
        let e2 = {
            // s × e1, normalized
            let mut v = vec![
                s[1] * e1[2] - s[2] * e1[1],
                s[2] * e1[0] - s[0] * e1[2],
                s[0] * e1[1] - s[1] * e1[0],
            ];
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in v.iter_mut() {
                *x /= n;
            }
            v
        };
        let project = |v: &[f64]| -> [f64; 2] {
            let h: f64 = v.iter().zip(s.iter()).map(|(a, b)| a * b).sum::<f64>() / s2;
            let p: Vec<f64> = v.iter().zip(s.iter()).map(|(a, b)| a - h * b).collect();
            [
                p.iter().zip(e1.iter()).map(|(a, b)| a * b).sum(),
                p.iter().zip(e2.iter()).map(|(a, b)| a * b).sum(),
            ]
        };
        let mut all: Vec<[f64; 2]> = Vec::new();
        let mut piece_area = 0.0;
        for k in 0..3 {
            let geo = cell_geometry(&toroid, k).unwrap();
            let shadow: Vec<[f64; 2]> =
                geo.parallelotope.iter().map(|v| project(v)).collect();
            let hull = convex_hull_2d(&shadow);
            assert_eq!(hull.len(), 4, "part {k}: shadow must be a parallelogram");
            piece_area += polygon_area(&hull);
            all.extend(shadow);
        }
        let union_hull = convex_hull_2d(&all);
        assert_eq!(union_hull.len(), 6, "union shadow must be a hexagon");
        let hex_area = polygon_area(&union_hull);
        assert!(
            (hex_area - piece_area).abs() < 1e-9 * hex_area,
            "parallelograms must tile the hexagon: {piece_area} vs {hex_area}"
        );
    }

    fn polygon_area(hull: &[[f64; 2]]) -> f64 {
        let mut a = 0.0;
        for i in 0..hull.len() {
            let j = (i + 1) % hull.len();
            a += hull[i][0] * hull[j][1] - hull[j][0] * hull[i][1];
        }
        0.5 * a.abs()
    }

    fn convex_hull_2d(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let mut p = pts.to_vec();
        p.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
        p.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
        if p.len() < 3 {
            return p;
        }
        let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
            (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
        };
        let mut lower: Vec<[f64; 2]> = Vec::new();
        for &pt in p.iter() {
            while lower.len() >= 2
                && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], &pt) <= 1e-12
            {
                lower.pop();
            }
            lower.push(pt);
        }
        let mut upper: Vec<[f64; 2]> = Vec::new();
        for &pt in p.iter().rev() {
            while upper.len() >= 2
                && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], &pt) <= 1e-12
            {
                upper.pop();
            }
            upper.push(pt);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        lower
    }

    #[test]
    fn naturality_small_last_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for dims in [2usize, 3, 4] {
            let mut raw: Vec<f64> = (0..dims - 1).map(|i| 0.9 - 0.18 * i as f64).collect();
            raw.push(0.04);
            let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>();
            let r: Vec<f64> = raw.iter().map(|x| x / norm.sqrt()).collect();
            let toroid = RightToroid::new(&r).unwrap();
            let rep = check_naturality(&toroid, dims - 1, 1000, &mut rng).unwrap();
            assert_eq!(rep.violations, 0, "n={dims}: {rep:?}");
        }
    }

    #[test]
    fn naturality_any_axis() {
        // Dropping a middle axis re-indexes but still matches.
        let toroid = toroid3();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for axis in 0..3 {
            let rep = check_naturality(&toroid, axis, 500, &mut rng).unwrap();
            assert_eq!(rep.violations, 0, "axis {axis}");
        }
    }

    #[test]
    fn partition_of_unity_statistics() {
        // Every random point gets exactly one non-boundary label; boundary
        // hits are measure-zero rare.
        let toroid = toroid3();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut boundary = 0usize;
        let n = 100_000;
        for _ in 0..n {
            let p = toroid.sample(&mut rng);
            let l = locate(&p, &toroid).unwrap();
            if l.on_boundary {
                boundary += 1;
            }
        }
        assert!(
            (boundary as f64) < 1e-3 * n as f64,
            "boundary frequency {boundary}/{n}"
        );
    }

    #[test]
    fn svg_and_obj_exports() {
        let svg = partition_svg(&toroid2()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polygon"));
        assert!(svg.matches("polygon").count() >= 4); // 2 slabs per part
        let obj = partition_obj(&toroid3()).unwrap();
        assert_eq!(obj.matches("o part_").count(), 3);
        assert_eq!(obj.matches('v').count() >= 24, true);
    }
}
