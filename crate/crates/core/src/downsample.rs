//! Largest-triangle-three-buckets downsampling for display, with gaps.
//!
//! Runs of missing values collapse to a single marker index so the caller
//! can emit an explicit null. The marker is the run's first index, or its
//! last when the run ends the series. Each contiguous run of present values gets a
//! share of the remaining budget proportional to its length and is reduced
//! with LTTB, which always keeps a run's first and last points.

use alloc::vec::Vec;

/// Indices to keep so that at most `max_points` remain. `xs` must be
/// non-decreasing. `max_points` below 2 is treated as 2.
pub fn lttb_indices(xs: &[f64], ys: &[Option<f64>], max_points: usize) -> Vec<usize> {
    assert_eq!(xs.len(), ys.len(), "x and y lengths differ");
    let n = xs.len();
    let max_points = max_points.max(2);
    if n <= max_points {
        return (0..n).collect();
    }

    let mut runs: Vec<(usize, usize, bool)> = Vec::new();
    let mut i = 0;
    while i < n {
        let present = ys[i].is_some();
        let start = i;
        while i < n && ys[i].is_some() == present {
            i += 1;
        }
        runs.push((start, i, present));
    }
    let gaps = runs.iter().filter(|r| !r.2).count();
    let segments: Vec<(usize, usize)> = runs.iter().filter(|r| r.2).map(|r| (r.0, r.1)).collect();
    let floor_need: usize = gaps + segments.iter().map(|&(a, b)| (b - a).min(2)).sum::<usize>();
    if floor_need > max_points {
        return strided(n, max_points);
    }

    let available = max_points - gaps;
    let present_total: usize = segments.iter().map(|&(a, b)| b - a).sum();
    let mut budgets: Vec<usize> = segments
        .iter()
        .map(|&(a, b)| {
            let len = b - a;
            (available * len / present_total).clamp(len.min(2), len)
        })
        .collect();
    while budgets.iter().sum::<usize>() > available {
        let (k, _) = budgets.iter().enumerate().max_by_key(|&(k, &b)| (b, core::cmp::Reverse(k))).expect("non-empty");
        budgets[k] -= 1;
    }

    let mut out = Vec::with_capacity(max_points);
    let mut seg = segments.iter().zip(&budgets);
    for &(start, end, present) in &runs {
        if present {
            let (_, &budget) = seg.next().expect("one budget per segment");
            let values: Vec<f64> = ys[start..end].iter().map(|v| v.expect("present run")).collect();
            out.extend(lttb(&xs[start..end], &values, budget).into_iter().map(|k| k + start));
        } else if end == n {
            out.push(end - 1);
        } else {
            out.push(start);
        }
    }
    out
}

fn strided(n: usize, m: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..m).map(|k| k * (n - 1) / (m - 1)).collect();
    out.dedup();
    out
}

/// Classic LTTB on one gap-free run.
fn lttb(xs: &[f64], ys: &[f64], threshold: usize) -> Vec<usize> {
    let n = xs.len();
    if threshold >= n {
        return (0..n).collect();
    }
    if threshold <= 1 {
        return alloc::vec![0];
    }
    if threshold == 2 {
        return alloc::vec![0, n - 1];
    }
    let mut out = Vec::with_capacity(threshold);
    out.push(0);
    let every = (n - 2) as f64 / (threshold - 2) as f64;
    let mut a = 0usize;
    for bucket in 0..threshold - 2 {
        let lo = (bucket as f64 * every) as usize + 1;
        let hi = (((bucket + 1) as f64 * every) as usize + 1).min(n - 1);
        let next_lo = hi;
        let next_hi = (((bucket + 2) as f64 * every) as usize + 1).min(n);
        let (avg_x, avg_y) = if next_lo < next_hi && bucket + 3 < threshold {
            let len = (next_hi - next_lo) as f64;
            (xs[next_lo..next_hi].iter().sum::<f64>() / len, ys[next_lo..next_hi].iter().sum::<f64>() / len)
        } else {
            (xs[n - 1], ys[n - 1])
        };
        let (ax, ay) = (xs[a], ys[a]);
        let mut best = lo;
        let mut best_area = -1.0;
        for k in lo..hi.max(lo + 1) {
            let area = libm::fabs((ax - avg_x) * (ys[k] - ay) - (ax - xs[k]) * (avg_y - ay));
            if area > best_area {
                best_area = area;
                best = k;
            }
        }
        out.push(best);
        a = best;
    }
    out.push(n - 1);
    out
}
