/// Bessel functions `J_0 … J_nmax` at `x ≥ 0` by Miller's backward recurrence,
/// normalised with `J_0 + 2 Σ J_2k = 1`.
pub fn bessel_j(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let x = x.abs();
    let start = 2 * ((nmax.max(x as usize) + 20 + (40.0 * (nmax.max(x as usize) as f64)).sqrt() as usize) / 2 + 1);
    let mut j_next = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / x * j - j_next;
        j_next = j;
        j = j_prev;
        if k - 1 <= nmax {
            out[k - 1] = j;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * j;
        }
        // rescale to avoid overflow
        if j.abs() > 1e250 {
            j *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    norm += j;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// `J_n²(α)` for `n = 0 … N`, with `N` the smallest order such that
/// `J_0² + 2 Σ_{n=1}^{N} J_n² > 1 − tol`.
pub fn bessel_j_squared_weights(alpha: f64, tol: f64) -> Vec<f64> {
    let mut nmax = (alpha.abs() as usize + 8).max(8);
    loop {
        let j = bessel_j(nmax, alpha);
        let mut total = j[0] * j[0];
        for n in 0..=nmax {
            if n > 0 {
                total += 2.0 * j[n] * j[n];
            }
            if total > 1.0 - tol {
                return j[..=n].iter().map(|v| v * v).collect();
            }
        }
        nmax *= 2;
    }
}
