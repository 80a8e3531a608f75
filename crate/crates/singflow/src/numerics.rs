//! Small numerical kernels shared by the modules: Gauss-Kronrod quadrature,
//! bracketed root finding and a 6x6-sized dense solver.

/// Kronrod abscissae for the 15-point rule on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
/// Returns (integral, error estimate).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = h * x;
        let s = f(c - dx) + f(c + dx);
        kron += w * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// A converged panel of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub value: f64,
}

/// Adaptive bisection of Kronrod panels until every panel meets its share
/// of `abs_tol` or `rel_tol * |panel|`. Panels are returned left to right.
pub fn adaptive_panels<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Vec<Panel> {
    let mut out = Vec::new();
    let mut stack = vec![(a, b, 0u32)];
    let width = (b - a).abs().max(f64::MIN_POSITIVE);
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(f, lo, hi);
        let share = abs_tol * ((hi - lo).abs() / width).max(1e-3);
        let tol = share.max(rel_tol * v.abs());
        let mid = 0.5 * (lo + hi);
        if e <= tol || depth >= 60 || mid <= lo || mid >= hi {
            out.push(Panel { a: lo, b: hi, value: v });
        } else {
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    out
}

/// Adaptive integral of `f` over [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    adaptive_panels(f, a, b, abs_tol, rel_tol)
        .iter()
        .map(|p| p.value)
        .sum()
}

/// Bisection for an increasing function on a bracket with `f(lo) <= 0 <= f(hi)`.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= x_tol {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `phi(s) = target` for increasing `phi` by expanding a bracket
/// around `seed` geometrically and then bisecting. Returns `None` when no
/// bracket is found within the expansion budget.
pub fn invert_increasing<F: Fn(f64) -> f64>(phi: F, target: f64, seed: f64) -> Option<f64> {
    let h = |s: f64| phi(s) - target;
    let mut step = seed.abs().max(1.0);
    let (mut lo, mut hi) = (seed - step, seed + step);
    let mut tries = 0;
    while h(lo) > 0.0 {
        hi = lo;
        step *= 2.0;
        lo = seed - step;
        tries += 1;
        if tries > 2100 || !lo.is_finite() {
            return None;
        }
    }
    tries = 0;
    while h(hi) < 0.0 {
        lo = hi;
        step *= 2.0;
        hi = seed + step;
        tries += 1;
        if tries > 2100 || !hi.is_finite() {
            return None;
        }
    }
    Some(bisect_increasing(h, lo, hi, 0.0))
}

/// Dense Gaussian elimination with partial pivoting for small systems.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            let (top, bottom) = a.split_at_mut(row);
            for (t, p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *t -= m * p;
            }
            rhs[row] -= m * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / a[row][row];
    }
    Some(x)
}

/// Log-spaced samples of `count` points between `lo` and `hi` (both > 0).
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (count.max(2) - 1) as f64).exp())
        .collect()
}
