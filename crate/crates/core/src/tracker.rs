//! Conditional-spectral-state tracking: the label timeline k(t), jump
//! events, degeneracy continuation, and iterated conditioning.
//!
//! At each trajectory sample the amplitude phases define a point of the
//! right toroid built from the current radii; the partition member that
//! contains it names which frame branch is the conditional state right now.
//! Label changes are refined by bisection on the linearly interpolated arc
//! data (the partition faces are flat in arc coordinates, so the bisected
//! crossing time converges fast); radii near-crossings are bridged by
//! re-matching frame branches across the degenerate window.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::Serialize;

use crate::hilbert::{polar_decompose, rebipartition, PolarFrame, StateVector, DEGENERACY_FLAG_TOL};
use crate::linalg;
use crate::polar_flow::PolarTrajectory;
use crate::toroid::{locate, PartitionLabel, RightToroid, ToroidPoint};
use crate::{Error, Result};

/// Reported precision of refined jump times, relative to the span.
pub const JUMP_REFINE_REL: f64 = 1e-9;
/// Degeneracy bridging window: this many samples or this much time,
/// whichever is larger.
pub const BRIDGE_SAMPLES: usize = 10;
pub const BRIDGE_TIME: f64 = 1e-3;
/// Overlap-ambiguity threshold for branch matching across a degeneracy.
pub const MATCH_AMBIGUITY_TOL: f64 = 1e-3;

/// Which face of the partition a crossing went through.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub enum BoundaryKind {
    /// A flat slab face: the descending-fraction order at the crossing and
    /// the index of the crossed prefix-sum threshold within that order.
    SlabFace { order: Vec<usize>, threshold_index: usize },
    /// The label changed across a bridged radii degeneracy.
    DegeneracyBridge,
}

/// A detected change of the conditional-state label.
#[derive(Debug, Clone, Serialize)]
pub struct JumpEvent {
    pub t: f64,
    pub from_k: usize,
    pub to_k: usize,
    pub boundary_kind: BoundaryKind,
}

/// Output of [`track_labels`].
#[derive(Debug, Clone)]
pub struct TrackingResult {
    pub times: Vec<f64>,
    /// Branch-space label per sample; `None` inside degeneracy windows.
    pub labels: Vec<Option<usize>>,
    pub events: Vec<JumpEvent>,
    /// Bridged windows as (t_enter, t_exit, branch permutation applied).
    pub bridges: Vec<(f64, f64, Vec<usize>)>,
}

impl TrackingResult {
    /// Label timeline as CSV (empty label inside degeneracy windows).
    pub fn timeline_csv(&self) -> String {
        let mut out = String::from("t,label\n");
        for (t, l) in self.times.iter().zip(self.labels.iter()) {
            match l {
                Some(k) => out += &format!("{t:.17e},{k}\n"),
                None => out += &format!("{t:.17e},\n"),
            }
        }
        out
    }

    /// One JSON object per event, newline separated.
    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out += &serde_json::to_string(&serde_json::json!({
                "t": e.t,
                "from": e.from_k,
                "to": e.to_k,
                "boundary_kind": e.boundary_kind,
            }))
            .unwrap();
            out.push('\n');
        }
        out
    }
}

/// Face descriptor at a point: the sorted order and the threshold index
/// that τ is (nearly) sitting on.
fn face_descriptor(point: &ToroidPoint, toroid: &RightToroid) -> BoundaryKind {
    let n = toroid.dim();
    let fractions: Vec<f64> = point
        .coords
        .iter()
        .zip(toroid.circumferences().iter())
        .map(|(&x, &s)| x / s)
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        fractions[j]
            .partial_cmp(&fractions[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let tau: f64 = (0..n).map(|i| toroid.weights()[i] * fractions[i]).sum();
    let mut acc = 0.0;
    let mut best = (0usize, f64::INFINITY);
    for (j, &idx) in order.iter().enumerate() {
        acc += toroid.weights()[idx];
        let d = (tau - acc).abs();
        if d < best.1 {
            best = (j, d);
        }
    }
    BoundaryKind::SlabFace { order, threshold_index: best.0 }
}

struct SampleGeometry {
    radii: Vec<f64>,
    /// Unwrapped phases per branch.
    theta: Vec<f64>,
    degenerate: bool,
}

/// Locates the branch-space label for interpolated (radii, theta) data.
fn branch_label(radii: &[f64], theta: &[f64]) -> Result<(usize, PartitionLabel, RightToroid, ToroidPoint)> {
    let m = radii.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| radii[b].partial_cmp(&radii[a]).unwrap().then(a.cmp(&b)));
    let sorted_radii: Vec<f64> = order.iter().map(|&i| radii[i]).collect();
    let toroid = RightToroid::new(&sorted_radii)?;
    let sorted_phases: Vec<f64> = order.iter().map(|&i| theta[i]).collect();
    let point = ToroidPoint::from_phases(&toroid, &sorted_phases)?;
    let label = locate(&point, &toroid)?;
    Ok((order[label.k], label, toroid, point))
}

/// Tracks the conditional-state label along a polar trajectory.
///
/// Labels are reported in branch space: index k refers to the k-th frame
/// term of the trajectory, which is transported continuously by the
/// evolution, so a change of label is a genuine jump rather than a radii
/// re-sorting artifact. Isolated radii degeneracies are bridged by
/// re-matching branches across the window; a window longer than the
/// bridging limit is reported as permanent degeneracy.
pub fn track_labels(traj: &PolarTrajectory) -> Result<TrackingResult> {
    let n_samples = traj.len();
    if n_samples < 2 {
        return Err(Error::TooFewSamples { got: n_samples, need: 2 });
    }
    let m = traj.frames[0].len();
    let span = traj.times[n_samples - 1] - traj.times[0];

    // Unwrap phases continuously along each branch.
    let mut geos: Vec<SampleGeometry> = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let frame = &traj.frames[i];
        let radii = frame.radii();
        let mut theta: Vec<f64> = frame.q.iter().map(|q| q.arg()).collect();
        if i > 0 {
            let prev = &geos[i - 1];
            for k in 0..m {
                let raw = theta[k];
                let diff = {
                    let mut d = raw - prev.theta[k];
                    while d > std::f64::consts::PI {
                        d -= std::f64::consts::TAU;
                    }
                    while d < -std::f64::consts::PI {
                        d += std::f64::consts::TAU;
                    }
                    d
                };
                theta[k] = prev.theta[k] + diff;
            }
        }
        let mut degenerate = false;
        for a in 0..m {
            for b in (a + 1)..m {
                if (radii[a] - radii[b]).abs() < DEGENERACY_FLAG_TOL {
                    degenerate = true;
                }
            }
        }
        geos.push(SampleGeometry { radii, theta, degenerate });
    }

    let max_bridge_samples = {
        let dt = span.abs() / (n_samples - 1) as f64;
        let by_time = (BRIDGE_TIME / dt).ceil() as usize;
        BRIDGE_SAMPLES.max(by_time)
    };

    let mut labels: Vec<Option<usize>> = vec![None; n_samples];
    let mut events: Vec<JumpEvent> = Vec::new();
    let mut bridges: Vec<(f64, f64, Vec<usize>)> = Vec::new();

    // Branch identity map: sample-branch index -> original branch id.
    let mut branch_map: Vec<usize> = (0..m).collect();

    let mut i = 0usize;
    let mut last_labeled: Option<(usize, usize)> = None; // (sample idx, label)
    while i < n_samples {
        if geos[i].degenerate {
            let start = i;
            while i < n_samples && geos[i].degenerate {
                i += 1;
            }
            let window = i - start;
            if i >= n_samples || start == 0 {
                // Degenerate at the trajectory edge: nothing to bridge into.
                if window > max_bridge_samples {
                    return Err(Error::PermanentDegeneracy {
                        t_start: traj.times[start],
                        t_end: traj.times[(i - 1).min(n_samples - 1)],
                    });
                }
                continue;
            }
            if window > max_bridge_samples {
                return Err(Error::PermanentDegeneracy {
                    t_start: traj.times[start],
                    t_end: traj.times[i - 1],
                });
            }
            let matched =
                continue_through_degeneracy(&traj.frames[start - 1], &traj.frames[i])?;
            // Compose: branch that was j before maps to matched.permutation[j] after.
            let mut new_map = branch_map.clone();
            for j in 0..m {
                new_map[matched.permutation[j]] = branch_map[j];
            }
            branch_map = new_map;
            bridges.push((traj.times[start], traj.times[i - 1], matched.permutation.clone()));
            continue;
        }
        let (raw_branch, _, _, _) = branch_label(&geos[i].radii, &geos[i].theta)?;
        let branch = branch_map[raw_branch];
        labels[i] = Some(branch);
        if let Some((prev_idx, prev_label)) = last_labeled {
            if prev_label != branch {
                let kind_time = refine_crossing(traj, &geos, prev_idx, i, span)?;
                events.push(JumpEvent {
                    t: kind_time.0,
                    from_k: prev_label,
                    to_k: branch,
                    boundary_kind: if prev_idx + 1 == i {
                        kind_time.1
                    } else {
                        BoundaryKind::DegeneracyBridge
                    },
                });
            }
        }
        last_labeled = Some((i, branch));
        i += 1;
    }

    Ok(TrackingResult { times: traj.times.clone(), labels, events, bridges })
}

/// Bisects the crossing between two adjacent samples on the interpolated
/// arc data; returns the time (to JUMP_REFINE_REL of the span) and a face
/// descriptor evaluated at the crossing.
fn refine_crossing(
    traj: &PolarTrajectory,
    geos: &[SampleGeometry],
    i0: usize,
    i1: usize,
    span: f64,
) -> Result<(f64, BoundaryKind)> {
    let interp = |x: f64| -> (Vec<f64>, Vec<f64>) {
        let m = geos[i0].radii.len();
        let mut r = Vec::with_capacity(m);
        let mut th = Vec::with_capacity(m);
        for k in 0..m {
            r.push(geos[i0].radii[k] * (1.0 - x) + geos[i1].radii[k] * x);
            th.push(geos[i0].theta[k] * (1.0 - x) + geos[i1].theta[k] * x);
        }
        (r, th)
    };
    let (t0, t1) = (traj.times[i0], traj.times[i1]);
    let base = branch_label(&geos[i0].radii, &geos[i0].theta)?.0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let tol = (JUMP_REFINE_REL * span.abs() / (t1 - t0).abs()).max(1e-15);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (r, th) = interp(mid);
        let b = branch_label(&r, &th)?.0;
        if b == base {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_cross = t0 + (t1 - t0) * 0.5 * (lo + hi);
    let (r, th) = interp(0.5 * (lo + hi));
    let (_, _, toroid, point) = branch_label(&r, &th)?;
    Ok((t_cross, face_descriptor(&point, &toroid)))
}

/// Result of matching frame branches across an isolated degeneracy.
#[derive(Debug, Clone)]
pub struct BranchMatch {
    /// permutation[j] = index (in the after-frame) of the branch that
    /// continues before-branch j.
    pub permutation: Vec<usize>,
    /// Set when two candidate overlaps were within [`MATCH_AMBIGUITY_TOL`];
    /// the identity is used in that case.
    pub ambiguous: bool,
}

/// Matches eigenbranches across a radii crossing by maximal spinor overlap.
pub fn continue_through_degeneracy(
    before: &PolarFrame,
    after: &PolarFrame,
) -> Result<BranchMatch> {
    let m = before.len();
    if after.len() != m {
        return Err(Error::DimensionMismatch("frame rank changed across window".into()));
    }
    let mut averaged = vec![vec![0.0_f64; m]; m];
    for j in 0..m {
        for k in 0..m {
            let o1 = linalg::inner(&before.phi[j], &after.phi[k]).norm();
            let o2 = linalg::inner(&before.psi[j], &after.psi[k]).norm();
            averaged[j][k] = o1 * o2;
        }
    }
    let mut permutation = vec![usize::MAX; m];
    let mut used = vec![false; m];
    let mut ambiguous = false;
    for j in 0..m {
        let mut best = (usize::MAX, -1.0_f64);
        let mut second = -1.0_f64;
        for (k, &w) in averaged[j].iter().enumerate() {
            if used[k] {
                continue;
            }
            if w > best.1 {
                second = best.1;
                best = (k, w);
            } else if w > second {
                second = w;
            }
        }
        if best.0 == usize::MAX {
            return Err(Error::InvalidParameter("branch matching failed".into()));
        }
        if (best.1 - second).abs() < MATCH_AMBIGUITY_TOL && second >= 0.0 {
            ambiguous = true;
        }
        permutation[j] = best.0;
        used[best.0] = true;
    }
    if ambiguous {
        permutation = (0..m).collect();
    }
    Ok(BranchMatch { permutation, ambiguous })
}

/// Which factor of the bipartition a conditional state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Factor1,
    Factor2,
}

/// One stage of provenance for (iterated) conditioning.
#[derive(Debug, Clone, Serialize)]
pub struct ProvenanceStage {
    pub left_set: Vec<usize>,
    pub side: Side,
    pub label: usize,
    pub on_boundary: bool,
    pub radii: Vec<f64>,
}

/// A conditional spectral state: the selected frame vector plus the chain
/// of conditioning stages that produced it.
#[derive(Debug, Clone)]
pub struct ConditionalState {
    pub side: Side,
    pub ray: Array1<C64>,
    pub label: PartitionLabel,
    pub provenance: Vec<ProvenanceStage>,
}

/// Selects the conditional spectral state of one factor: the frame vector
/// φ_k (side 1) or ψ_k (side 2) for the part k containing `point`. The two
/// sides share the label (they are synchronous).
pub fn conditional_state(
    gamma: &StateVector,
    point: &ToroidPoint,
    side: Side,
) -> Result<ConditionalState> {
    let frame = polar_decompose(gamma)?;
    if frame.degenerate {
        return Err(Error::DegenerateRadii {
            gap: {
                let r = frame.radii();
                let mut g = f64::INFINITY;
                for a in 0..r.len() {
                    for b in (a + 1)..r.len() {
                        g = g.min((r[a] - r[b]).abs());
                    }
                }
                g
            },
            t: f64::NAN,
        });
    }
    let toroid = RightToroid::new(&frame.radii())?;
    let label = locate(point, &toroid)?;
    let ray = match side {
        Side::Factor1 => frame.phi[label.k].clone(),
        Side::Factor2 => frame.psi[label.k].clone(),
    };
    Ok(ConditionalState {
        side,
        ray,
        label,
        provenance: vec![ProvenanceStage {
            left_set: Vec::new(),
            side,
            label: label.k,
            on_boundary: label.on_boundary,
            radii: frame.radii(),
        }],
    })
}

/// One stage of an iterated conditioning chain.
#[derive(Debug, Clone)]
pub struct Stage {
    /// Factors (0-based, indices into the current factor list) forming
    /// factor 1 of this stage's bipartition.
    pub left_set: Vec<usize>,
    /// Which side's conditional vector continues to the next stage.
    pub side: Side,
    /// Amplitude phases selecting the toroid point; zeros when omitted
    /// (a documented gauge choice — the stages' phases are independent
    /// inputs, not derived from one another).
    pub phases: Option<Vec<f64>>,
}

/// Iterated conditional state over a chain of bipartitions.
///
/// Stage 1 conditions the full multi-factor state; later stages condition
/// the previous stage's conditional vector. Past the first stage the input
/// must be a product across the requested cut (secondary radius ≤ 1e−8) —
/// the regime in which iterated conditioning is well-posed; otherwise a
/// non-product error is raised.
pub fn iterate_conditional(
    gamma: &StateVector,
    factor_dims: &[usize],
    chain: &[Stage],
) -> Result<ConditionalState> {
    if chain.is_empty() {
        return Err(Error::InvalidParameter("empty conditioning chain".into()));
    }
    let mut current = gamma.clone();
    let mut dims: Vec<usize> = factor_dims.to_vec();
    let mut provenance: Vec<ProvenanceStage> = Vec::new();
    let mut last: Option<ConditionalState> = None;

    for (s, stage) in chain.iter().enumerate() {
        let re = rebipartition(&current, &dims, &stage.left_set)?;
        let frame = polar_decompose(&re)?;
        if s > 0 && frame.len() > 1 {
            let secondary = frame.radii()[1];
            if secondary > 1e-8 {
                return Err(Error::NonProductStage(secondary));
            }
        }
        let radii = frame.radii();
        let toroid = RightToroid::new(&radii)?;
        let phases = match &stage.phases {
            Some(p) => p.clone(),
            None => vec![0.0; frame.len()],
        };
        let point = ToroidPoint::from_phases(&toroid, &phases)?;
        let label = locate(&point, &toroid)?;
        let ray = match stage.side {
            Side::Factor1 => frame.phi[label.k].clone(),
            Side::Factor2 => frame.psi[label.k].clone(),
        };
        provenance.push(ProvenanceStage {
            left_set: stage.left_set.clone(),
            side: stage.side,
            label: label.k,
            on_boundary: label.on_boundary,
            radii: radii.clone(),
        });

        // Prepare the next stage: the chosen side's factors become the new
        // factor list.
        let kept: Vec<usize> = match stage.side {
            Side::Factor1 => stage.left_set.clone(),
            Side::Factor2 => (0..dims.len())
                .filter(|i| !stage.left_set.contains(i))
                .collect(),
        };
        dims = kept.iter().map(|&i| factor_dims_at(&dims, i)).collect();
        let n = ray.len();
        last = Some(ConditionalState {
            side: stage.side,
            ray: ray.clone(),
            label,
            provenance: provenance.clone(),
        });
        if s + 1 < chain.len() {
            // The ray becomes the next state; its factors are `dims`.
            let total: usize = dims.iter().product();
            if total != n {
                return Err(Error::DimensionMismatch(format!(
                    "stage {s}: conditional vector dim {n} vs factors {dims:?}"
                )));
            }
            // Normalize exactly (unit up to rounding already).
            let nrm = linalg::norm(&ray);
            let amps = ray.mapv(|x| x / nrm);
            let space = crate::hilbert::BipartiteSpace::new(
                dims[0],
                total / dims[0],
            )?;
            current = StateVector { space, amplitudes: amps };
        }
    }
    Ok(last.unwrap())
}

fn factor_dims_at(dims: &[usize], i: usize) -> usize {
    dims[i]
}

/// Empirical label frequencies induced by a uniformly random global phase:
/// the probability-consistency statistic (it must approach the squared
/// radii).
pub fn global_phase_label_frequencies(
    frame: &PolarFrame,
    n_phases: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let radii = frame.radii();
    let toroid = RightToroid::new(&radii)?;
    let m = radii.len();
    let mut counts = vec![0usize; m];
    for _ in 0..n_phases {
        let delta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let phases = vec![delta; m];
        let point = ToroidPoint::from_phases(&toroid, &phases)?;
        let label = locate(&point, &toroid)?;
        counts[label.k] += 1;
    }
    Ok(counts.iter().map(|&c| c as f64 / n_phases as f64).collect())
}
