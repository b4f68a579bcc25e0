//! Edge costs and capacities. All results are exact integers.

use super::GraphError;

/// Connectivity cost table `c_m(n)` for `n` in `2..=m`.
///
/// `c_m(m) = 1` and `c_m(n) = ⌈(n+1)/(n−1) · c_m(n+1)⌉`, so points seen by
/// more keyframes are cheaper. Index `i` of the returned vector holds
/// `c_m(i + 2)`.
pub fn connectivity_table(m: u64) -> Result<Vec<i64>, GraphError> {
    if m < 2 {
        return Err(GraphError::ConnectivityDomain { n: m, m });
    }
    let len = (m - 1) as usize;
    let mut table = vec![0i64; len];
    table[len - 1] = 1;
    for n in (2..m).rev() {
        let next = table[(n + 1 - 2) as usize] as i128;
        let num = i128::from(n + 1) * next;
        let den = i128::from(n - 1);
        let c = (num + den - 1) / den;
        table[(n - 2) as usize] = i64::try_from(c).map_err(|_| GraphError::CostOverflow)?;
    }
    Ok(table)
}

/// `c_m(n)` for a single observing-frame count.
pub fn connectivity_cost(n: u64, m: u64) -> Result<i64, GraphError> {
    if n < 2 || n > m {
        return Err(GraphError::ConnectivityDomain { n, m });
    }
    Ok(connectivity_table(m)?[(n - 2) as usize])
}

/// Source-edge capacity: the number of frame pairs observing the point.
pub fn point_capacity(n: u64) -> i64 {
    (n * n.saturating_sub(1) / 2) as i64
}

/// `⌊log10(n_j·n_k + 1)⌋`, i.e. the number of decimal digits of
/// `n_j·n_k + 1` minus one.
pub fn spatial_cost(n_j: u64, n_k: u64) -> i64 {
    let mut x = u128::from(n_j) * u128::from(n_k) + 1;
    let mut digits = 0;
    while x >= 10 {
        x /= 10;
        digits += 1;
    }
    digits
}

/// `⌈10 / (0.1·d + 1)⌉`, evaluated as `⌈100 / (d + 10)⌉`. Lies in `1..=10`
/// for any finite `d ≥ 0`.
pub fn baseline_cost(d: f64) -> i64 {
    debug_assert!(d >= 0.0 && d.is_finite());
    let c = (100.0 / (d.max(0.0) + 10.0)).ceil() as i64;
    c.clamp(1, 10)
}
