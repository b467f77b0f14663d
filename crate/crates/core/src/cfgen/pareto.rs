//! Fast non-dominated sorting and crowding distances (minimisation).

use super::objectives::ObjectiveVector;

/// `a` dominates `b`: no worse in every objective, strictly better in one.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
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

/// Pareto fronts as index lists, best front first, indices ascending.
pub fn nondominated_sort_points<P: AsRef<[f64]>>(points: &[P]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in p + 1..n {
            let (a, b) = (points[p].as_ref(), points[q].as_ref());
            if dominates(a, b) {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if dominates(b, a) {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

pub fn nondominated_sort(vectors: &[ObjectiveVector]) -> Vec<Vec<usize>> {
    let pts: Vec<[f64; 4]> = vectors.iter().map(ObjectiveVector::as_array).collect();
    nondominated_sort_points(&pts)
}

/// Crowding distance of each member of `front` (same order as `front`).
/// Boundary members of every coordinate get infinity; inner members sum the
/// normalised gap between their neighbours. `scale` supplies the per
/// coordinate normaliser; `None` uses the front's own extent.
pub fn crowding_by<P: AsRef<[f64]>>(points: &[P], front: &[usize], scale: Option<&[f64]>) -> Vec<f64> {
    let m = front.len();
    let mut dist = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    let dims = points[front[0]].as_ref().len();
    let mut order: Vec<usize> = (0..m).collect();
    for k in 0..dims {
        let val = |i: usize| points[front[i]].as_ref()[k];
        order.sort_by(|&a, &b| val(a).total_cmp(&val(b)).then(a.cmp(&b)));
        let lo = val(order[0]);
        let hi = val(order[m - 1]);
        let extent = scale.map_or(hi - lo, |s| s[k]);
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        if !(extent > 0.0) {
            continue;
        }
        for w in 1..m - 1 {
            let i = order[w];
            if dist[i].is_finite() {
                dist[i] += (val(order[w + 1]) - val(order[w - 1])) / extent;
            }
        }
    }
    dist
}

pub fn crowding_distance(vectors: &[ObjectiveVector], front: &[usize]) -> Vec<f64> {
    let pts: Vec<[f64; 4]> = vectors.iter().map(ObjectiveVector::as_array).collect();
    crowding_by(&pts, front, None)
}
