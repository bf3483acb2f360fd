/// `u` dominates `v` when it is no worse everywhere and better somewhere.
pub fn dominates(u: &[f64; 4], v: &[f64; 4]) -> bool {
    u.iter().zip(v).all(|(a, b)| a <= b) && u.iter().zip(v).any(|(a, b)| a < b)
}

/// Indices of the non-dominated points, ascending. Of several identical
/// points only the first is kept.
pub fn pareto_front(points: &[[f64; 4]]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let p = &points[i];
            !points[..i].contains(p) && !points.iter().any(|q| dominates(q, p))
        })
        .collect()
}
