//! Exact hypervolume for two- and three-objective minimization fronts, plus
//! the normalization helper used when comparing fronts from different runs.

use super::nsga2::nondominated_indices;

/// Hypervolume of a point set, with the number of points that were dropped
/// because they do not dominate the reference (or carry non-finite values).
#[derive(Debug, Clone, PartialEq)]
pub struct HvResult {
    pub value: f64,
    pub discarded: usize,
}

/// Exact dominated hypervolume under minimization: the measure of the region
/// between the points and `reference`. Supports 2 and 3 objectives.
///
/// Points with any coordinate above the reference (or non-finite) contribute
/// nothing and are counted in `discarded`; dominated points are filtered out,
/// so adding one never changes the value.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> HvResult {
    let dim = reference.len();
    assert!(dim == 2 || dim == 3, "hypervolume supports 2 or 3 objectives, got {dim}");
    let mut valid: Vec<Vec<f64>> = Vec::new();
    let mut discarded = 0usize;
    for p in points {
        assert_eq!(p.len(), dim, "point/reference dimension mismatch");
        if p.iter().zip(reference).all(|(x, r)| x.is_finite() && x <= r) {
            valid.push(p.clone());
        } else {
            discarded += 1;
        }
    }
    let keep = nondominated_indices(&valid);
    let front: Vec<Vec<f64>> = keep.into_iter().map(|i| valid[i].clone()).collect();
    let value = match dim {
        2 => hv2d(
            front.iter().map(|p| [p[0], p[1]]).collect(),
            [reference[0], reference[1]],
        ),
        _ => hv3d(front, reference),
    };
    HvResult { value, discarded }
}

/// Sweep over x: each point owns the strip from its x to the next better x.
/// Expects a nondominated set.
fn hv2d(mut points: Vec<[f64; 2]>, reference: [f64; 2]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    // Duplicates in x survive nondominance filtering only as exact duplicates;
    // the sweep handles them as zero-width strips.
    let mut area = 0.0;
    let mut prev_y = reference[1];
    for p in &points {
        area += (reference[0] - p[0]) * (prev_y - p[1]);
        prev_y = p[1];
    }
    area
}

/// Sweep over the third objective: between consecutive levels the dominated
/// cross-section is a 2-D hypervolume of every point at or below the level.
fn hv3d(mut points: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points.sort_by(|a, b| a[2].partial_cmp(&b[2]).unwrap());
    let mut volume = 0.0;
    let mut i = 0;
    while i < points.len() {
        let level = points[i][2];
        // Absorb every point sharing this level before measuring the slab.
        let mut j = i + 1;
        while j < points.len() && points[j][2] == level {
            j += 1;
        }
        let next_level = if j < points.len() { points[j][2] } else { reference[2] };
        let slice: Vec<[f64; 2]> = points[..j].iter().map(|p| [p[0], p[1]]).collect();
        let keep = nondominated_indices(
            &slice.iter().map(|p| p.to_vec()).collect::<Vec<_>>(),
        );
        let cross: Vec<[f64; 2]> = keep.into_iter().map(|k| slice[k]).collect();
        volume += hv2d(cross, [reference[0], reference[1]]) * (next_level - level);
        i = j;
    }
    volume
}

/// Per-objective min/max over one or more fronts, used to map raw objective
/// vectors into [0, 1] before hypervolume so scales are comparable across
/// models. Points with non-finite coordinates are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationBounds {
    /// Bounds over the union of the given fronts. `None` when no point is
    /// fully finite.
    pub fn from_fronts(fronts: &[&[Vec<f64>]]) -> Option<Self> {
        let mut bounds: Option<NormalizationBounds> = None;
        for front in fronts {
            for p in front.iter() {
                if !p.iter().all(|x| x.is_finite()) {
                    continue;
                }
                match &mut bounds {
                    None => {
                        bounds = Some(NormalizationBounds { min: p.clone(), max: p.clone() });
                    }
                    Some(b) => {
                        assert_eq!(b.min.len(), p.len(), "mixed objective dimensions");
                        for d in 0..p.len() {
                            b.min[d] = b.min[d].min(p[d]);
                            b.max[d] = b.max[d].max(p[d]);
                        }
                    }
                }
            }
        }
        bounds
    }

    /// Map a point into [0, 1] per dimension. Degenerate dimensions (no
    /// spread) map to 0; non-finite coordinates stay non-finite so the
    /// hypervolume discards them.
    pub fn normalize_point(&self, p: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), self.min.len());
        (0..p.len())
            .map(|d| {
                let range = self.max[d] - self.min[d];
                if !p[d].is_finite() {
                    p[d]
                } else if range > 0.0 {
                    (p[d] - self.min[d]) / range
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn normalize(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        points.iter().map(|p| self.normalize_point(p)).collect()
    }
}

/// Reference point used after normalization: slightly outside the worst
/// observed value in every dimension.
pub fn default_reference(dim: usize) -> Vec<f64> {
    vec![1.1; dim]
}
