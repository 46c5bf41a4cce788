//! Nondominated sorting, crowding distance, and the environmental-selection
//! interface with NSGA-II as the built-in strategy.

/// Pareto dominance for minimization: `a` is no worse everywhere and
/// strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Indices of the mutually nondominated points.
pub fn nondominated_indices(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| dominates(q, &points[i])))
        .collect()
}

/// Fronts of indices, best first (front 0 is the nondominated set).
pub fn fast_nondominated_sort(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n]; // i dominates these
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominated_by[i].push(j);
                domination_count[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominated_by[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of each member of one front (parallel to `front`).
/// Boundary points get infinity; objectives with no finite spread
/// contribute nothing.
pub fn crowding_distance(points: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut distance = vec![0.0f64; m];
    if m == 0 {
        return distance;
    }
    let dims = points[front[0]].len();
    let mut order: Vec<usize> = (0..m).collect();
    for d in 0..dims {
        order.sort_by(|&a, &b| {
            points[front[a]][d]
                .partial_cmp(&points[front[b]][d])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let lo = points[front[order[0]]][d];
        let hi = points[front[order[m - 1]]][d];
        let range = hi - lo;
        distance[order[0]] = f64::INFINITY;
        distance[order[m - 1]] = f64::INFINITY;
        if !range.is_finite() || range <= 0.0 {
            continue;
        }
        for w in 1..m.saturating_sub(1) {
            let gap = points[front[order[w + 1]]][d] - points[front[order[w - 1]]][d];
            distance[order[w]] += gap / range;
        }
    }
    distance
}

/// Environmental selection strategy: rank a candidate pool and keep the best.
pub trait EnvironmentalSelection: Sync {
    fn name(&self) -> &'static str;

    /// Indices of the `target` survivors, in preference order (best first).
    /// Mating selection tournaments on positions in this ordering.
    fn select(&self, objectives: &[Vec<f64>], target: usize) -> Vec<usize>;
}

/// NSGA-II: fill whole fronts in order; break the last front by descending
/// crowding distance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Nsga2;

impl EnvironmentalSelection for Nsga2 {
    fn name(&self) -> &'static str {
        "nsga2"
    }

    fn select(&self, objectives: &[Vec<f64>], target: usize) -> Vec<usize> {
        let target = target.min(objectives.len());
        let mut survivors = Vec::with_capacity(target);
        for front in fast_nondominated_sort(objectives) {
            let remaining = target - survivors.len();
            let distance = crowding_distance(objectives, &front);
            let mut ranked: Vec<usize> = (0..front.len()).collect();
            // Order within a front by descending crowding even when the
            // whole front fits, so the preference order is fully defined.
            ranked.sort_by(|&a, &b| {
                distance[b]
                    .partial_cmp(&distance[a])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(front[a].cmp(&front[b]))
            });
            for &w in ranked.iter().take(remaining) {
                survivors.push(front[w]);
            }
            if survivors.len() == target {
                break;
            }
        }
        survivors
    }
}
