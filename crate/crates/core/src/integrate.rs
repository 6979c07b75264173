//! Explicit embedded Runge-Kutta integration with the Dormand-Prince 8(5,3)
//! pair and Hairer's step-size controller.

use alloc::vec::Vec;

use libm::{pow, sqrt};

use crate::error::{Error, IntegrationFailure, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Dop853,
}

impl Method {
    pub fn order(self) -> u32 {
        match self {
            Method::Dop853 => 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Starting step; `None` selects it from derivative magnitudes.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
    pub method: Method,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 5e-13,
            atol: 1e-12,
            initial_step: None,
            max_steps: 2_000_000,
            method: Method::Dop853,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument("integrator tolerances must be positive"));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument("initial step must be positive"));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;
const UROUND: f64 = 2.3e-16;

/// Reusable DOP853 integrator. Stage buffers are allocated once per system
/// size.
pub struct Dop853 {
    cfg: IntegratorConfig,
    k: [Vec<f64>; 12],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    stats: IntegrationStats,
}

impl Dop853 {
    pub fn new(cfg: IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Dop853 {
            cfg,
            k: Default::default(),
            ytmp: Vec::new(),
            ynew: Vec::new(),
            stats: IntegrationStats::default(),
        })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.cfg
    }

    fn resize(&mut self, n: usize) {
        for k in self.k.iter_mut() {
            k.resize(n, 0.0);
        }
        self.ytmp.resize(n, 0.0);
        self.ynew.resize(n, 0.0);
    }

    fn call<F>(&mut self, f: &mut F, t: f64, which: usize, from_tmp: bool, y: &[f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        self.stats.evaluations += 1;
        let src: &[f64] = if from_tmp { &self.ytmp } else { y };
        f(t, src, &mut self.k[which])
    }

    // ytmp = y + h * sum(coef * k[idx])
    fn combine(&mut self, y: &[f64], h: f64, terms: &[(f64, usize)]) {
        let n = y.len();
        for i in 0..n {
            let mut acc = 0.0;
            for &(a, j) in terms {
                acc += a * self.k[j][i];
            }
            self.ytmp[i] = y[i] + h * acc;
        }
    }

    // Stages 2..12 given k[0] = f(t, y). Leaves the 8th-order update in ynew
    // and returns the scaled error norm.
    fn stages<F>(&mut self, f: &mut F, t: f64, y: &[f64], h: f64) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        self.combine(y, h, &[(A21, 0)]);
        self.call(f, t + C2 * h, 1, true, y)?;
        self.combine(y, h, &[(A31, 0), (A32, 1)]);
        self.call(f, t + C3 * h, 2, true, y)?;
        self.combine(y, h, &[(A41, 0), (A43, 2)]);
        self.call(f, t + C4 * h, 3, true, y)?;
        self.combine(y, h, &[(A51, 0), (A53, 2), (A54, 3)]);
        self.call(f, t + C5 * h, 4, true, y)?;
        self.combine(y, h, &[(A61, 0), (A64, 3), (A65, 4)]);
        self.call(f, t + C6 * h, 5, true, y)?;
        self.combine(y, h, &[(A71, 0), (A74, 3), (A75, 4), (A76, 5)]);
        self.call(f, t + C7 * h, 6, true, y)?;
        self.combine(y, h, &[(A81, 0), (A84, 3), (A85, 4), (A86, 5), (A87, 6)]);
        self.call(f, t + C8 * h, 7, true, y)?;
        self.combine(y, h, &[(A91, 0), (A94, 3), (A95, 4), (A96, 5), (A97, 6), (A98, 7)]);
        self.call(f, t + C9 * h, 8, true, y)?;
        self.combine(
            y,
            h,
            &[
                (A101, 0),
                (A104, 3),
                (A105, 4),
                (A106, 5),
                (A107, 6),
                (A108, 7),
                (A109, 8),
            ],
        );
        self.call(f, t + C10 * h, 9, true, y)?;
        self.combine(
            y,
            h,
            &[
                (A111, 0),
                (A114, 3),
                (A115, 4),
                (A116, 5),
                (A117, 6),
                (A118, 7),
                (A119, 8),
                (A1110, 9),
            ],
        );
        self.call(f, t + C11 * h, 10, true, y)?;
        self.combine(
            y,
            h,
            &[
                (A121, 0),
                (A124, 3),
                (A125, 4),
                (A126, 5),
                (A127, 6),
                (A128, 7),
                (A129, 8),
                (A1210, 9),
                (A1211, 10),
            ],
        );
        self.call(f, t + h, 11, true, y)?;

        let n = y.len();
        let (rtol, atol) = (self.cfg.rtol, self.cfg.atol);
        let mut err5 = 0.0;
        let mut err3 = 0.0;
        let k = &self.k;
        for i in 0..n {
            let incr = B1 * k[0][i]
                + B6 * k[5][i]
                + B7 * k[6][i]
                + B8 * k[7][i]
                + B9 * k[8][i]
                + B10 * k[9][i]
                + B11 * k[10][i]
                + B12 * k[11][i];
            let yn = y[i] + h * incr;
            self.ynew[i] = yn;
            let sk = atol + rtol * y[i].abs().max(yn.abs());
            let e3 = (incr - BHH1 * k[0][i] - BHH2 * k[8][i] - BHH3 * k[11][i]) / sk;
            let e5 = (ER1 * k[0][i]
                + ER6 * k[5][i]
                + ER7 * k[6][i]
                + ER8 * k[7][i]
                + ER9 * k[8][i]
                + ER10 * k[9][i]
                + ER11 * k[10][i]
                + ER12 * k[11][i])
                / sk;
            err3 += e3 * e3;
            err5 += e5 * e5;
        }
        let mut deno = err5 + 0.01 * err3;
        if deno <= 0.0 {
            deno = 1.0;
        }
        Ok(h.abs() * err5 * sqrt(1.0 / (n as f64 * deno)))
    }

    fn initial_step<F>(&mut self, f: &mut F, t: f64, y: &[f64], span: f64) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let (rtol, atol) = (self.cfg.rtol, self.cfg.atol);
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for (yi, fi) in y.iter().zip(&self.k[0]) {
            let sk = atol + rtol * yi.abs();
            dnf += (fi / sk) * (fi / sk);
            dny += (yi / sk) * (yi / sk);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            0.01 * sqrt(dny / dnf)
        };
        h = h.min(span);
        for i in 0..y.len() {
            self.ytmp[i] = y[i] + h * self.k[0][i];
        }
        self.call(f, t + h, 1, true, y)?;
        let mut der2 = 0.0;
        for i in 0..y.len() {
            let sk = atol + rtol * y[i].abs();
            let d = (self.k[1][i] - self.k[0][i]) / sk;
            der2 += d * d;
        }
        let der2 = sqrt(der2) / h;
        let der12 = der2.max(sqrt(dnf));
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            pow(0.01 / der12, 1.0 / 8.0)
        };
        Ok((100.0 * h).min(h1).min(span))
    }

    /// Advances `y` in place from `t0` to exactly `t1`. On failure `y` holds
    /// the last accepted state and the error carries its time.
    pub fn integrate<F>(&mut self, mut f: F, y: &mut [f64], t0: f64, t1: f64) -> Result<IntegrationStats>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        if !(t1 > t0) {
            return Err(Error::InvalidArgument("integration end must follow start"));
        }
        self.stats = IntegrationStats::default();
        self.resize(y.len());
        let span = t1 - t0;
        let mut t = t0;
        self.call(&mut f, t, 0, false, y)?;
        let mut h = match self.cfg.initial_step {
            Some(h) => h.min(span),
            None => self.initial_step(&mut f, t, y, span)?,
        };
        let mut last_rejected = false;
        let fail = |reason, t, stats: &IntegrationStats| Error::Integration {
            reason,
            t,
            steps: stats.accepted,
        };

        loop {
            if self.stats.accepted + self.stats.rejected >= self.cfg.max_steps {
                return Err(fail(IntegrationFailure::MaxSteps, t, &self.stats));
            }
            if 0.1 * h.abs() <= t.abs() * UROUND {
                return Err(fail(IntegrationFailure::StepUnderflow, t, &self.stats));
            }
            let last = t + 1.01 * h >= t1;
            if last {
                h = t1 - t;
            }
            let err = self.stages(&mut f, t, y, h)?;
            if !err.is_finite() {
                self.stats.rejected += 1;
                last_rejected = true;
                h *= 0.1;
                if h < span * 1e-300 {
                    return Err(fail(IntegrationFailure::NonFinite, t, &self.stats));
                }
                continue;
            }
            let fac11 = pow(err, 1.0 / 8.0);
            let fac = (fac11 / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut hnew = h / fac;
            if err <= 1.0 {
                self.stats.accepted += 1;
                y.copy_from_slice(&self.ynew);
                t = if last { t1 } else { t + h };
                if last {
                    return Ok(self.stats);
                }
                self.call(&mut f, t, 0, false, y)?;
                if last_rejected {
                    hnew = hnew.min(h);
                }
                last_rejected = false;
                h = hnew;
            } else {
                self.stats.rejected += 1;
                last_rejected = true;
                h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            }
        }
    }

    /// One step of size `h` from (t, y) without error control; returns the
    /// scaled error estimate. Used to verify the order of the pair.
    pub fn single_step<F>(&mut self, mut f: F, y: &[f64], t: f64, h: f64, out: &mut [f64]) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        self.resize(y.len());
        self.call(&mut f, t, 0, false, y)?;
        let err = self.stages(&mut f, t, y, h)?;
        out.copy_from_slice(&self.ynew);
        Ok(err)
    }
}

/// Convenience wrapper around [`Dop853::integrate`].
pub fn integrate<F>(f: F, y: &mut [f64], t0: f64, t1: f64, cfg: &IntegratorConfig) -> Result<IntegrationStats>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    Dop853::new(*cfg)?.integrate(f, y, t0, t1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::{cos, exp, log, sin};

    #[test]
    fn exponential_decay() {
        let mut y = [1.0];
        let stats = integrate(
            |_, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            &mut y,
            0.0,
            1.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!((y[0] - exp(-1.0)).abs() < 1e-12, "{}", y[0] - exp(-1.0));
        assert!(stats.accepted > 0);
    }

    #[test]
    fn antisymmetric_flow_conserves_norm() {
        let n = 10;
        let mut a = alloc::vec![0.0; n * n];
        let mut seed = 12345u64;
        for i in 0..n {
            for j in (i + 1)..n {
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                a[i * n + j] = v;
                a[j * n + i] = -v;
            }
        }
        let mut y: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
        let norm0: f64 = y.iter().map(|v| v * v).sum();
        integrate(
            |_, y, dy| {
                for i in 0..n {
                    dy[i] = (0..n).map(|j| a[i * n + j] * y[j]).sum();
                }
                Ok(())
            },
            &mut y,
            0.0,
            10.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let norm: f64 = y.iter().map(|v| v * v).sum();
        assert!((sqrt(norm) - sqrt(norm0)).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_phase() {
        let periods = 10.0;
        let t1 = periods * 2.0 * core::f64::consts::PI;
        let mut y = [1.0, 0.0];
        integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            &mut y,
            0.0,
            t1,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!((y[0] - cos(t1)).abs() < 1e-9 && (y[1] + sin(t1)).abs() < 1e-9);
    }

    #[test]
    fn ends_exactly_at_target() {
        let mut calls_at_end = 0;
        let mut y = [0.0];
        integrate(
            |t, _, dy| {
                if t == 0.7 {
                    calls_at_end += 1;
                }
                dy[0] = 1.0;
                Ok(())
            },
            &mut y,
            0.0,
            0.7,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(calls_at_end > 0);
        assert!((y[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn one_step_order_is_at_least_seven() {
        // y' = -y^2 + sin(t) y, smooth and nonlinear
        let f = |t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0] * y[0] + sin(t) * y[0];
            dy[1] = y[0] - 0.5 * y[1];
            Ok(())
        };
        let mut solver = Dop853::new(IntegratorConfig::default()).unwrap();
        let y0 = [1.0, 0.5];
        let reference = |h: f64, solver: &mut Dop853| {
            // same interval in 64 substeps
            let mut y = y0;
            let mut out = [0.0; 2];
            let sub = h / 64.0;
            for s in 0..64 {
                solver.single_step(f, &y, s as f64 * sub, sub, &mut out).unwrap();
                y = out;
            }
            y
        };
        let mut errors = Vec::new();
        for &h in &[0.2, 0.1] {
            let mut out = [0.0; 2];
            solver.single_step(f, &y0, 0.0, h, &mut out).unwrap();
            let r = reference(h, &mut solver);
            errors.push(((out[0] - r[0]).abs()).max((out[1] - r[1]).abs()));
        }
        let slope = log(errors[0] / errors[1]) / log(2.0);
        assert!(slope >= 7.0, "slope {slope} errors {errors:?}");
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let run = |rtol: f64| {
            let mut y = [1.0];
            let cfg = IntegratorConfig {
                rtol,
                atol: rtol * 1e-3,
                ..Default::default()
            };
            integrate(
                |_, y, dy| {
                    dy[0] = -y[0];
                    Ok(())
                },
                &mut y,
                0.0,
                5.0,
                &cfg,
            )
            .unwrap();
            (y[0] - exp(-5.0)).abs()
        };
        let loose = run(1e-6);
        let tight = run(1e-8);
        assert!(tight * 10.0 <= loose, "loose {loose} tight {tight}");
    }

    #[test]
    fn failures_are_reported() {
        let cfg = IntegratorConfig {
            max_steps: 3,
            initial_step: Some(1e-3),
            ..Default::default()
        };
        let mut y = [1.0];
        let r = integrate(
            |_, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            &mut y,
            0.0,
            1.0,
            &cfg,
        );
        match r {
            Err(Error::Integration {
                reason: IntegrationFailure::MaxSteps,
                t,
                steps,
            }) => {
                assert!(t > 0.0 && steps == 3);
                assert!((y[0] - exp(-t)).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(IntegratorConfig {
            rtol: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        let mut y = [1.0];
        assert!(integrate(|_, _, _| Ok(()), &mut y, 1.0, 1.0, &IntegratorConfig::default()).is_err());
    }
}
