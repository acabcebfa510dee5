//! Dormand-Prince 8(5,3) with the error estimator and step control of
//! Hairer's DOP853. No dense output: steps are clipped to land on the
//! requested output abscissae.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const N_STAGES: usize = 12;

const C: [f64; N_STAGES] = [
    0.0,
    0.05260015195876773,
    0.0789002279381516,
    0.1183503419072274,
    0.2816496580927726,
    0.3333333333333333,
    0.25,
    0.3076923076923077,
    0.6512820512820513,
    0.6,
    0.8571428571428571,
    1.0,
];

const B: [f64; N_STAGES] = [
    0.054293734116568765,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450312892752409,
    1.8915178993145003,
    -5.801203960010585,
    0.3111643669578199,
    -0.1521609496625161,
    0.20136540080403034,
    0.04471061572777259,
];

// The last entries multiply the derivative at the new point (FSAL stage).
const E3: [f64; N_STAGES + 1] = [
    -0.18980075407240762,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450312892752409,
    1.8915178993145003,
    -5.801203960010585,
    -0.4226823213237919,
    -0.1521609496625161,
    0.20136540080403034,
    0.02265179219836082,
    0.0,
];

const E5: [f64; N_STAGES + 1] = [
    0.01312004499419488,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.2251564463762044,
    -0.4957589496572502,
    1.6643771824549864,
    -0.35032884874997366,
    0.3341791187130175,
    0.08192320648511571,
    -0.022355307863886294,
    0.0,
];

const A: [&[f64]; N_STAGES] = [
    &[],
    &[0.05260015195876773],
    &[0.0197250569845379, 0.0591751709536137],
    &[0.02958758547680685, 0.0, 0.08876275643042054],
    &[0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792],
    &[0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242],
    &[0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125],
    &[
        0.03709200011850479,
        0.0,
        0.0,
        0.17038392571223998,
        0.10726203044637328,
        -0.015319437748624402,
        0.008273789163814023,
    ],
    &[
        0.6241109587160757,
        0.0,
        0.0,
        -3.3608926294469414,
        -0.868219346841726,
        27.59209969944671,
        20.154067550477894,
        -43.48988418106996,
    ],
    &[
        0.47766253643826434,
        0.0,
        0.0,
        -2.4881146199716677,
        -0.590290826836843,
        21.230051448181193,
        15.279233632882423,
        -33.28821096898486,
        -0.020331201708508627,
    ],
    &[
        -0.9371424300859873,
        0.0,
        0.0,
        5.186372428844064,
        1.0914373489967295,
        -8.149787010746927,
        -18.52006565999696,
        22.739487099350505,
        2.4936055526796523,
        -3.0467644718982196,
    ],
    &[
        2.273310147516538,
        0.0,
        0.0,
        -10.53449546673725,
        -2.0008720582248625,
        -17.9589318631188,
        27.94888452941996,
        -2.8589982771350235,
        -8.87285693353063,
        12.360567175794303,
        0.6433927460157636,
    ],
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dop853 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on `|h|`; infinite by default.
    pub h_max: f64,
    /// First trial step; estimated from the problem when absent.
    pub h_init: Option<f64>,
    /// Only the leading components enter the error norm; `None` means all.
    pub error_components: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl Dop853 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Dop853 { rtol, atol, max_steps: 50_000_000, h_max: f64::INFINITY, h_init: None, error_components: None }
    }

    /// Integrates `y' = f(t, y)` from `(t0, y0)` through the monotone list
    /// `outputs` (all on the same side of `t0`) and returns `y` at each.
    pub fn solve<F>(&self, mut f: F, t0: f64, y0: &[f64], outputs: &[f64]) -> Result<(Vec<Vec<f64>>, StepStats)>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y0.len();
        let mut stats = StepStats::default();
        let mut out = Vec::with_capacity(outputs.len());
        if outputs.is_empty() {
            return Ok((out, stats));
        }
        let dir = if outputs[outputs.len() - 1] >= t0 { 1.0 } else { -1.0 };
        if outputs.iter().any(|&x| (x - t0) * dir < 0.0) || outputs.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) {
            return Err(Error::InvalidParameter("output points must be monotone away from the start".into()));
        }

        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; N_STAGES + 1];
        f(t, &y, &mut k[0]);
        stats.evaluations += 1;
        let mut h = match self.h_init {
            Some(h) => h.abs(),
            None => self.initial_step(&mut f, t, &y, &k[0], dir, &mut stats),
        };
        let mut ytmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut next = 0;
        let mut last_rejected = false;

        while next < outputs.len() && (outputs[next] - t) * dir <= 0.0 {
            out.push(y.clone());
            next += 1;
        }
        while next < outputs.len() {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::TooManySteps(self.max_steps));
            }
            let target = outputs[next];
            let min_h = 10.0 * f64::EPSILON * t.abs().max(1.0);
            let mut h_abs = h.abs().min(self.h_max);
            let mut clipped = false;
            if h_abs >= (target - t).abs() {
                h_abs = (target - t).abs();
                clipped = true;
            }
            if h_abs < min_h && !clipped {
                return Err(Error::StepUnderflow { t, h: h_abs });
            }
            let hs = h_abs * dir;

            for s in 1..N_STAGES {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, &a) in A[s].iter().enumerate() {
                        acc += a * k[j][i];
                    }
                    ytmp[i] = y[i] + hs * acc;
                }
                f(t + C[s] * hs, &ytmp, &mut k[s]);
            }
            for i in 0..n {
                let mut acc = 0.0;
                for s in 0..N_STAGES {
                    acc += B[s] * k[s][i];
                }
                ynew[i] = y[i] + hs * acc;
            }
            let t_new = if clipped { target } else { t + hs };
            f(t_new, &ynew, &mut k[N_STAGES]);
            stats.evaluations += N_STAGES;

            let n_err = self.error_components.unwrap_or(n).min(n);
            let mut e5 = 0.0;
            let mut e3 = 0.0;
            for i in 0..n_err {
                let scale = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                let mut a5 = 0.0;
                let mut a3 = 0.0;
                for s in 0..=N_STAGES {
                    a5 += E5[s] * k[s][i];
                    a3 += E3[s] * k[s][i];
                }
                e5 += (a5 / scale).powi(2);
                e3 += (a3 / scale).powi(2);
            }
            let err = if e5 == 0.0 && e3 == 0.0 {
                0.0
            } else {
                h_abs * e5 / ((e5 + 0.01 * e3) * n_err as f64).sqrt()
            };

            if err <= 1.0 {
                stats.accepted += 1;
                t = t_new;
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, N_STAGES);
                let mut factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-1.0 / 8.0)).min(MAX_FACTOR) };
                if last_rejected {
                    factor = factor.min(1.0);
                }
                last_rejected = false;
                if !clipped {
                    h = h_abs * factor;
                }
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonConvergence { what: "integration produced non-finite values", iterations: stats.accepted });
                }
                while next < outputs.len() && (outputs[next] - t) * dir <= 0.0 {
                    out.push(y.clone());
                    next += 1;
                }
            } else {
                stats.rejected += 1;
                last_rejected = true;
                h = h_abs * (SAFETY * err.powf(-1.0 / 8.0)).max(MIN_FACTOR);
            }
        }
        Ok((out, stats))
    }

    fn initial_step<F>(&self, f: &mut F, t0: f64, y0: &[f64], f0: &[f64], dir: f64, stats: &mut StepStats) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n_err = self.error_components.unwrap_or(y0.len()).min(y0.len());
        let n = n_err as f64;
        let scale: Vec<f64> = y0[..n_err].iter().map(|v| self.atol + v.abs() * self.rtol).collect();
        let rms = |v: &[f64]| (v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n).sqrt();
        let d0 = rms(&y0[..n_err]);
        let d1 = rms(&f0[..n_err]);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, d)| y + h0 * dir * d).collect();
        let mut f1 = vec![0.0; y0.len()];
        f(t0 + h0 * dir, &y1, &mut f1);
        stats.evaluations += 1;
        let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = rms(&diff[..n_err]) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(self.h_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_consistency() {
        for s in 1..N_STAGES {
            let row: f64 = A[s].iter().sum();
            assert!((row - C[s]).abs() < 1e-13, "stage {s}");
        }
        assert!((B.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        assert!(E5.iter().sum::<f64>().abs() < 1e-13);
        assert!(E3.iter().sum::<f64>().abs() < 1e-13);
    }

    #[test]
    fn exponential_decay() {
        let solver = Dop853::new(1e-12, 1e-14);
        let (ys, stats) = solver.solve(|_, y, dy| dy[0] = -y[0], 0.0, &[1.0], &[1.0, 5.0]).unwrap();
        assert!((ys[0][0] - (-1.0f64).exp()).abs() < 1e-12);
        assert!((ys[1][0] - (-5.0f64).exp()).abs() < 1e-13);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let solver = Dop853::new(1e-11, 1e-13);
        let (ys, _) = solver
            .solve(|_, y, dy| { dy[0] = y[1]; dy[1] = -y[0]; }, 10.0, &[10f64.cos(), -10f64.sin()], &[0.0])
            .unwrap();
        assert!((ys[0][0] - 1.0).abs() < 1e-9);
        assert!(ys[0][1].abs() < 1e-9);
    }

    #[test]
    fn eighth_order_convergence() {
        // fixed steps via h_max, loose tolerance so no step is rejected
        let run = |h: f64| {
            let mut s = Dop853::new(1.0, 1.0);
            s.h_max = h;
            s.h_init = Some(h);
            let (ys, _) = s.solve(|t, y, dy| dy[0] = y[0] * t.cos(), 0.0, &[1.0], &[2.0]).unwrap();
            (ys[0][0] - 2f64.sin().exp()).abs()
        };
        let (e1, e2) = (run(0.4), run(0.2));
        let order = (e1 / e2).log2();
        assert!(order > 7.0, "order {order}");
    }

    #[test]
    fn rejects_bad_outputs() {
        let s = Dop853::new(1e-8, 1e-10);
        assert!(s.solve(|_, _, dy| dy[0] = 0.0, 0.0, &[1.0], &[1.0, 0.5]).is_err());
        assert!(s.solve(|_, _, dy| dy[0] = 0.0, 0.0, &[1.0], &[-1.0, 1.0]).is_err());
    }

    #[test]
    fn output_at_start() {
        let s = Dop853::new(1e-8, 1e-10);
        let (ys, _) = s.solve(|_, y, dy| dy[0] = y[0], 0.0, &[2.0], &[0.0, 1.0]).unwrap();
        assert_eq!(ys[0][0], 2.0);
    }

    #[test]
    fn step_budget() {
        let mut s = Dop853::new(1e-12, 1e-14);
        s.max_steps = 5;
        let r = s.solve(|_, y, dy| { dy[0] = 50.0 * y[1]; dy[1] = -50.0 * y[0]; }, 0.0, &[1.0, 0.0], &[100.0]);
        assert!(matches!(r, Err(Error::TooManySteps(5))));
    }
}
