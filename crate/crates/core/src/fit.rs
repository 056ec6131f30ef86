//! Least-squares Gaussian fitting of sampled pulse shapes.
//!
//! The model is amplitude * exp(-((x - center)/width)^2). The amplitude is
//! linear in the model, so it is projected out analytically and a Nelder-Mead
//! simplex searches only over (center, width).

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl Gaussian {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        self.amplitude * (-u * u).exp()
    }
}

/// Best amplitude for fixed (center, width) and the resulting sum of squared
/// residuals.
fn projected_ssr(xs: &[f64], ys: &[f64], center: f64, width: f64) -> (f64, f64) {
    let mut gy = 0.0;
    let mut gg = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let u = (x - center) / width;
        let g = (-u * u).exp();
        gy += g * y;
        gg += g * g;
    }
    if gg < 1e-300 {
        let ssr: f64 = ys.iter().map(|y| y * y).sum();
        return (0.0, ssr);
    }
    let amp = gy / gg;
    let ssr = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let u = (x - center) / width;
            let r = amp * (-u * u).exp() - y;
            r * r
        })
        .sum();
    (amp, ssr)
}

/// Unweighted least-squares fit over the given samples. Returns the fitted
/// Gaussian and the relative residual sqrt(SSR / sum y^2).
pub fn fit_gaussian(xs: &[f64], ys: &[f64]) -> (Gaussian, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 4);

    // initial guess: signed peak, argmax, half-width at 1/e of the peak
    let mut i_peak = 0;
    for (i, y) in ys.iter().enumerate() {
        if y.abs() > ys[i_peak].abs() {
            i_peak = i;
        }
    }
    let peak = ys[i_peak];
    let center0 = xs[i_peak];
    let cutoff = peak.abs() / std::f64::consts::E;
    let mut lo = i_peak;
    while lo > 0 && ys[lo - 1].abs() > cutoff {
        lo -= 1;
    }
    let mut hi = i_peak;
    while hi + 1 < ys.len() && ys[hi + 1].abs() > cutoff {
        hi += 1;
    }
    let width0 = (0.5 * (xs[hi] - xs[lo])).max(2.0 * (xs[1] - xs[0]).abs());

    let cost = |p: [f64; 2]| projected_ssr(xs, ys, p[0], p[1].abs()).1;

    // Nelder-Mead on (center, width)
    let mut simplex = [
        [center0, width0],
        [center0 + 0.1 * width0, width0],
        [center0, 1.15 * width0],
    ];
    let mut f: Vec<f64> = simplex.iter().map(|p| cost(*p)).collect();
    let y_sq: f64 = ys.iter().map(|y| y * y).sum();

    for _ in 0..2000 {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| f[a].total_cmp(&f[b]));
        let (best, mid, worst) = (order[0], order[1], order[2]);
        let diameter = (0..2)
            .map(|k| {
                let lo = simplex.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
                let hi = simplex
                    .iter()
                    .map(|p| p[k])
                    .fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0, f64::max);
        if diameter <= 1e-13 * (1.0 + center0.abs() + width0.abs()) {
            break;
        }
        let centroid = [
            0.5 * (simplex[best][0] + simplex[mid][0]),
            0.5 * (simplex[best][1] + simplex[mid][1]),
        ];
        let reflect = [
            2.0 * centroid[0] - simplex[worst][0],
            2.0 * centroid[1] - simplex[worst][1],
        ];
        let fr = cost(reflect);
        if fr < f[best] {
            let expand = [
                3.0 * centroid[0] - 2.0 * simplex[worst][0],
                3.0 * centroid[1] - 2.0 * simplex[worst][1],
            ];
            let fe = cost(expand);
            if fe < fr {
                simplex[worst] = expand;
                f[worst] = fe;
            } else {
                simplex[worst] = reflect;
                f[worst] = fr;
            }
        } else if fr < f[mid] {
            simplex[worst] = reflect;
            f[worst] = fr;
        } else {
            let contract = [
                0.5 * (centroid[0] + simplex[worst][0]),
                0.5 * (centroid[1] + simplex[worst][1]),
            ];
            let fc = cost(contract);
            if fc < f[worst] {
                simplex[worst] = contract;
                f[worst] = fc;
            } else {
                for k in [mid, worst] {
                    simplex[k] = [
                        0.5 * (simplex[k][0] + simplex[best][0]),
                        0.5 * (simplex[k][1] + simplex[best][1]),
                    ];
                    f[k] = cost(simplex[k]);
                }
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| f[a].total_cmp(&f[b]));
    let p = simplex[order[0]];
    let (amp, ssr) = projected_ssr(xs, ys, p[0], p[1].abs());
    let gauss = Gaussian {
        amplitude: amp,
        center: p[0],
        width: p[1].abs(),
    };
    (gauss, (ssr / y_sq.max(1e-300)).sqrt())
}
