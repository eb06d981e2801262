//! Figures of merit over sweep samples: pH sensitivity and temperature
//! coefficient.

use alloc::vec::Vec;

use super::{AnalysisError, Sample};

/// Reference temperature for the headline sensitivity, °C.
pub const SENSITIVITY_TEMP_C: f64 = 25.0;

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

/// Sorted distinct values, merging those within 1 ppm of each other.
pub fn distinct(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| same(*a, *b));
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
///
/// `r2` is 1 when the ys are constant, since the line then fits exactly.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::Degenerate("x and y lengths differ"));
    }
    if distinct(xs.iter().copied()).len() < 2 {
        return Err(AnalysisError::Degenerate(
            "need at least two distinct x values",
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
    })
}

/// Magnitude of the V_O-vs-pH slope at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    pub temp_c: f64,
    /// |dV_O/dpH|, V/pH.
    pub volts_per_ph: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares pH sensitivity over the converged samples at `at_temp` °C.
pub fn sensitivity(samples: &[Sample], at_temp: f64) -> Result<Sensitivity, AnalysisError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|s| s.converged && same(s.temp_c, at_temp))
        .filter_map(|s| s.ph.map(|ph| (ph, s.vo)))
        .unzip();
    if distinct(xs.iter().copied()).len() < 2 {
        return Err(AnalysisError::MissingAxis("ph"));
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(Sensitivity {
        temp_c: at_temp,
        volts_per_ph: fit.slope.abs(),
        r2: fit.r2,
        points: xs.len(),
    })
}

/// `(max − min) / (|mean| · ΔT) · 1e6` over `(temp_c, vo)` pairs.
fn tc_ppm(pairs: &[(f64, f64)]) -> Result<f64, AnalysisError> {
    let temps = distinct(pairs.iter().map(|p| p.0));
    if temps.len() < 2 {
        return Err(AnalysisError::MissingAxis("temp"));
    }
    let span = temps[temps.len() - 1] - temps[0];
    let (lo, hi, sum) = pairs.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, 0.0),
        |(lo, hi, sum), &(_, v)| (lo.min(v), hi.max(v), sum + v),
    );
    let mean = sum / pairs.len() as f64;
    if mean == 0.0 {
        return Err(AnalysisError::ZeroMean);
    }
    Ok((hi - lo) / (mean.abs() * span) * 1e6)
}

/// Temperature coefficient of the fixed-pH slice at `at_ph`, ppm/°C.
pub fn temperature_coefficient(samples: &[Sample], at_ph: f64) -> Result<f64, AnalysisError> {
    let pairs: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.converged && s.ph.is_some_and(|p| same(p, at_ph)))
        .map(|s| (s.temp_c, s.vo))
        .collect();
    tc_ppm(&pairs)
}

/// Temperature coefficient with max, min and mean taken over every
/// converged sample of the grid, ppm/°C.
pub fn tc_joint(samples: &[Sample]) -> Result<f64, AnalysisError> {
    let pairs: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.converged)
        .map(|s| (s.temp_c, s.vo))
        .collect();
    tc_ppm(&pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub points: usize,
    pub failures: usize,
    pub ph_values: Vec<f64>,
    pub temp_values: Vec<f64>,
    /// Headline sensitivity: the 25 °C slice if present, else the lowest
    /// temperature. `None` without a pH axis.
    pub sensitivity: Option<Sensitivity>,
    pub sensitivity_by_temp: Vec<Sensitivity>,
    /// `(ph, tc)`; `None` where the slice mean is zero.
    pub tc_by_ph: Vec<(f64, Option<f64>)>,
    pub tc_per_ph_worst: Option<(f64, f64)>,
    pub tc_per_ph_best: Option<(f64, f64)>,
    pub tc_joint: Option<f64>,
    pub vo_min: f64,
    pub vo_max: f64,
    pub vo_mean: f64,
}

impl MetricsReport {
    pub fn from_samples(samples: &[Sample]) -> Result<Self, AnalysisError> {
        let ok: Vec<&Sample> = samples.iter().filter(|s| s.converged).collect();
        if ok.is_empty() {
            return Err(AnalysisError::NoData);
        }
        let ph_values = distinct(ok.iter().filter_map(|s| s.ph));
        let temp_values = distinct(ok.iter().map(|s| s.temp_c));

        let sensitivity_by_temp: Vec<Sensitivity> = if ph_values.len() >= 2 {
            temp_values
                .iter()
                .filter_map(|&t| sensitivity(samples, t).ok())
                .collect()
        } else {
            Vec::new()
        };
        let sensitivity = sensitivity_by_temp
            .iter()
            .find(|s| same(s.temp_c, SENSITIVITY_TEMP_C))
            .or_else(|| sensitivity_by_temp.first())
            .copied();

        let mut tc_by_ph = Vec::new();
        if temp_values.len() >= 2 {
            for &ph in &ph_values {
                match temperature_coefficient(samples, ph) {
                    Ok(tc) => tc_by_ph.push((ph, Some(tc))),
                    Err(AnalysisError::ZeroMean) => tc_by_ph.push((ph, None)),
                    Err(_) => {}
                }
            }
        }
        let defined = || tc_by_ph.iter().filter_map(|&(p, t)| t.map(|t| (p, t)));
        let tc_per_ph_worst = defined().fold(None, |acc: Option<(f64, f64)>, cur| match acc {
            Some(a) if a.1 >= cur.1 => Some(a),
            _ => Some(cur),
        });
        let tc_per_ph_best = defined().fold(None, |acc: Option<(f64, f64)>, cur| match acc {
            Some(a) if a.1 <= cur.1 => Some(a),
            _ => Some(cur),
        });

        let vos = ok.iter().map(|s| s.vo);
        let vo_min = vos.clone().fold(f64::INFINITY, f64::min);
        let vo_max = vos.clone().fold(f64::NEG_INFINITY, f64::max);
        let vo_mean = (vos.sum::<f64>() / ok.len() as f64).clamp(vo_min, vo_max);

        Ok(Self {
            points: samples.len(),
            failures: samples.len() - ok.len(),
            ph_values,
            temp_values,
            sensitivity,
            sensitivity_by_temp,
            tc_per_ph_worst,
            tc_per_ph_best,
            tc_by_ph,
            tc_joint: tc_joint(samples).ok(),
            vo_min,
            vo_max,
            vo_mean,
        })
    }
}
