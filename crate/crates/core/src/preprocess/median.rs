//! Running median with reflection padding.

/// Index into `0..n` by reflecting about the end samples (edge not repeated).
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - j;
    }
    j as usize
}

/// Centered median filter of odd `width`. Output has the input length.
pub fn median_filter(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 || width <= 1 {
        return x.to_vec();
    }
    let half = (width / 2) as isize;
    let at = |i: isize| x[reflect(i, n)];

    let mut window: Vec<f64> = (-half..=half).map(at).collect();
    window.sort_by(f64::total_cmp);
    let mid = window.len() / 2;

    let mut out = Vec::with_capacity(n);
    out.push(window[mid]);
    for i in 1..n as isize {
        let leaving = at(i - 1 - half);
        let entering = at(i + half);
        let pos = window.partition_point(|v| v.total_cmp(&leaving).is_lt());
        window.remove(pos);
        let pos = window.partition_point(|v| v.total_cmp(&entering).is_lt());
        window.insert(pos, entering);
        out.push(window[mid]);
    }
    out
}
