//! Globally adaptive Gauss-Kronrod (7/15) quadrature for complex integrands.

use num_complex::Complex64;

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

/// Gauss weights for the odd-indexed Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn kronrod15(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = r * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        k += pair * WGK[j];
        if j % 2 == 1 {
            g += pair * WG[j / 2];
        }
    }
    let value = k * r;
    Panel {
        a,
        b,
        value,
        error: ((k - g) * r).norm(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
}

/// Integrates `f` over `[a, b]` split at `breaks`, refining the panel with
/// the largest error estimate until the summed estimate is at most
/// `max(abs_tol, rel_tol * |I|)` or `max_panels` is reached.
pub fn integrate(
    f: impl Fn(f64) -> Complex64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> QuadResult {
    let mut panels: Vec<Panel> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod15(&f, w[0], w[1]))
        .collect();
    loop {
        let value: Complex64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= abs_tol.max(rel_tol * value.norm()) || panels.len() >= max_panels {
            return QuadResult {
                value,
                error,
                panels: panels.len(),
            };
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| {
                if p.error > best.1 {
                    (i, p.error)
                } else {
                    best
                }
            });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval exhausted at machine resolution
            panels.push(Panel { error: 0.0, ..p });
            continue;
        }
        panels.push(kronrod15(&f, p.a, mid));
        panels.push(kronrod15(&f, mid, p.b));
    }
}

/// Trapezoid weights for (possibly nonuniform) increasing nodes.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let half = 0.5 * (times[k + 1] - times[k]);
        w[k] += half;
        w[k + 1] += half;
    }
    w
}
