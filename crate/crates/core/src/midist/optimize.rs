use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curve::MiCurve;
use super::mi::{maxwell_boltzmann, mutual_information_with, noise_std_for_snr, Quadrature};
use crate::constellation::{induced_distribution, Constellation, ShapingProfile};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStrategy {
    /// Full tensor grid over every profile parameter, then nested local
    /// refinement.
    TensorGrid,
    /// Cyclic brute-force line search, one parameter at a time.
    CoordinateLineSearch,
}

/// Nested grid refinement schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub coarse_step: f64,
    pub final_step: f64,
    pub refinements: usize,
    pub lower: f64,
    pub upper: f64,
    /// `None` picks the tensor grid whenever it has at most
    /// `tensor_limit` coarse points.
    pub strategy: Option<SearchStrategy>,
    pub tensor_limit: usize,
    pub max_sweeps: usize,
    /// Sweep-to-sweep MI improvement below which line search stops.
    pub tolerance: f64,
    pub quadrature: Quadrature,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            coarse_step: 0.02,
            final_step: 0.0025,
            refinements: 2,
            lower: 0.0,
            upper: 1.0,
            strategy: None,
            tensor_limit: 10_000,
            max_sweeps: 60,
            tolerance: 1e-10,
            quadrature: Quadrature::default(),
        }
    }
}

impl GridOptions {
    fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lower && self.lower < self.upper && self.upper <= 1.0) {
            return Err(Error::param("search box must satisfy 0 <= lower < upper <= 1"));
        }
        if !(self.coarse_step > 0.0 && self.final_step > 0.0 && self.final_step <= self.coarse_step) {
            return Err(Error::param("grid steps must be positive with final <= coarse"));
        }
        Ok(())
    }

    /// Step used at each stage: coarse, then geometric refinements ending
    /// at `final_step`.
    fn steps(&self) -> Vec<f64> {
        let ratio = self.final_step / self.coarse_step;
        (0..=self.refinements)
            .map(|r| {
                if self.refinements == 0 {
                    self.coarse_step
                } else {
                    self.coarse_step * ratio.powf(r as f64 / self.refinements as f64)
                }
            })
            .collect()
    }

    fn axis(&self, center: Option<f64>, half_width: f64, step: f64) -> Vec<f64> {
        let (lo, hi) = match center {
            Some(c) => ((c - half_width).max(self.lower), (c + half_width).min(self.upper)),
            None => (self.lower, self.upper),
        };
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let mut axis: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
        if let Some(c) = center {
            axis.push(c);
        }
        if hi - axis[count - 1] > 1e-12 {
            axis.push(hi);
        }
        axis.sort_by(f64::total_cmp);
        axis.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        axis
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchMetadata {
    pub strategy: SearchStrategy,
    pub coarse_step: f64,
    pub final_step: f64,
    pub refinements: usize,
    pub evaluations: usize,
    pub sweeps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub profile: ShapingProfile,
    pub mi_bpcu: f64,
    pub snr_db: f64,
    pub noise_std: f64,
    pub search: SearchMetadata,
}

impl OptimizationResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// MI of a profile at a fixed SNR, the noise level following the shaped
/// energy.
pub fn profile_mi_at_snr(profile: &ShapingProfile, snr_db: f64, quadrature: Quadrature) -> Result<f64> {
    let constellation = Constellation::build_ask(profile.bits_per_symbol())?;
    let dist = induced_distribution(profile);
    let sigma = noise_std_for_snr(dist.average_energy(), snr_db);
    mutual_information_with(&dist, &constellation, sigma, quadrature)
}

struct Objective<'a> {
    m: u32,
    snr_db: f64,
    options: &'a GridOptions,
    evaluations: usize,
}

impl Objective<'_> {
    /// Evaluates candidates in parallel; returns the first best one.
    fn best_of(&mut self, candidates: Vec<Vec<f64>>) -> Result<(Vec<f64>, f64)> {
        self.evaluations += candidates.len();
        let (m, snr, quad) = (self.m, self.snr_db, self.options.quadrature);
        let values = candidates
            .par_iter()
            .map(|probs| {
                let profile = ShapingProfile::new(m, probs.clone())?;
                profile_mi_at_snr(&profile, snr, quad)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            if *v > values[best] {
                best = i;
            }
        }
        Ok((candidates[best].clone(), values[best]))
    }
}

fn tensor(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect()
    })
}

/// Profile with `num_distinct` parameters maximizing `I(X;Y)` at `snr_db`.
///
/// The power constraint is met with equality by scaling the noise to the
/// candidate's own energy, which makes the constrained problem an
/// unconstrained search over the probability box.
pub fn optimize_profile(
    m: u32,
    num_distinct: usize,
    snr_db: f64,
    options: &GridOptions,
) -> Result<OptimizationResult> {
    options.validate()?;
    // validates m and the divisibility of M/4
    ShapingProfile::uniform(m, num_distinct)?;

    let steps = options.steps();
    let coarse_points = options.axis(None, 0.0, steps[0]).len();
    let strategy = options.strategy.unwrap_or_else(|| {
        let tensor_size = (coarse_points as f64).powi(num_distinct as i32);
        if tensor_size <= options.tensor_limit as f64 {
            SearchStrategy::TensorGrid
        } else {
            SearchStrategy::CoordinateLineSearch
        }
    });

    let mut objective = Objective { m, snr_db, options, evaluations: 0 };
    let (probs, mi, sweeps) = match strategy {
        SearchStrategy::TensorGrid => {
            let axes = vec![options.axis(None, 0.0, steps[0]); num_distinct];
            let (mut best, mut best_mi) = objective.best_of(tensor(&axes))?;
            for pair in steps.windows(2) {
                let axes: Vec<Vec<f64>> =
                    best.iter().map(|&c| options.axis(Some(c), pair[0], pair[1])).collect();
                (best, best_mi) = objective.best_of(tensor(&axes))?;
            }
            (best, best_mi, 1)
        }
        SearchStrategy::CoordinateLineSearch => coordinate_search(&mut objective, num_distinct, &steps)?,
    };

    let profile = ShapingProfile::new(m, probs)?;
    let dist = induced_distribution(&profile);
    Ok(OptimizationResult {
        noise_std: noise_std_for_snr(dist.average_energy(), snr_db),
        profile,
        mi_bpcu: mi,
        snr_db,
        search: SearchMetadata {
            strategy,
            coarse_step: options.coarse_step,
            final_step: options.final_step,
            refinements: options.refinements,
            evaluations: objective.evaluations,
            sweeps,
        },
    })
}

fn coordinate_search(
    objective: &mut Objective<'_>,
    num_distinct: usize,
    steps: &[f64],
) -> Result<(Vec<f64>, f64, usize)> {
    let options = objective.options;
    let starts = vec![vec![0.5; num_distinct], mb_start(objective, num_distinct)?];
    let (mut current, mut current_mi) = objective.best_of(starts)?;
    let mut sweeps = 0;
    while sweeps < options.max_sweeps {
        sweeps += 1;
        let before = current_mi;
        for i in 0..num_distinct {
            // the first sweep scans the whole box, later sweeps stay local
            let mut axis = if sweeps == 1 {
                options.axis(None, 0.0, steps[0])
            } else {
                options.axis(Some(current[i]), 3.0 * steps[0], steps[0])
            };
            for stage in 0..steps.len() {
                if stage > 0 {
                    axis = options.axis(Some(current[i]), steps[stage - 1], steps[stage]);
                }
                let candidates = axis
                    .iter()
                    .map(|&v| {
                        let mut c = current.clone();
                        c[i] = v;
                        c
                    })
                    .collect();
                let (best, best_mi) = objective.best_of(candidates)?;
                if best_mi > current_mi {
                    current = best;
                    current_mi = best_mi;
                }
            }
        }
        if current_mi - before <= options.tolerance {
            break;
        }
    }
    Ok((current, current_mi, sweeps))
}

/// Profile closest to the best Maxwell-Boltzmann input at the objective's
/// SNR: each parameter is the MB probability of the outer symbol of its
/// sign-bit pair, conditioned on the pair and averaged over the group.
fn mb_start(objective: &mut Objective<'_>, num_distinct: usize) -> Result<Vec<f64>> {
    let (m, snr, quad) = (objective.m, objective.snr_db, objective.options.quadrature);
    let constellation = Constellation::build_ask(m)?;
    let scale = f64::from(constellation.max_symbol()).powi(2);
    let mi_at = |t: f64| -> Result<f64> {
        let dist = maxwell_boltzmann(&constellation, t / scale)?;
        let sigma = noise_std_for_snr(dist.average_energy(), snr);
        mutual_information_with(&dist, &constellation, sigma, quad)
    };

    // t = lambda * max_symbol^2, scanned on [0, 10] and refined twice
    let mut best_t = 0.0;
    let mut step = 0.1;
    let mut grid: Vec<f64> = (0..=100).map(|i| i as f64 * step).collect();
    for _ in 0..3 {
        objective.evaluations += grid.len();
        let values = grid.par_iter().map(|&t| mi_at(t)).collect::<Result<Vec<_>>>()?;
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            if *v > values[best] {
                best = i;
            }
        }
        best_t = grid[best];
        let lo = (best_t - step).max(0.0);
        step /= 10.0;
        grid = (0..=20).map(|i| lo + i as f64 * step).collect();
    }

    let dist = maxwell_boltzmann(&constellation, best_t / scale)?;
    let q = dist.probabilities();
    let half = constellation.size() / 2;
    let group = half / 2 / num_distinct;
    Ok((0..num_distinct)
        .map(|s| {
            let sum: f64 = (s * group..(s + 1) * group)
                .map(|j| q[j] / (q[j] + q[half - 1 - j]))
                .sum();
            (sum / group as f64).clamp(objective.options.lower, objective.options.upper)
        })
        .collect())
}

/// Optimized MI against SNR for one parameter count.
pub fn optimized_curve(
    m: u32,
    num_distinct: usize,
    snrs_db: &[f64],
    options: &GridOptions,
) -> Result<(MiCurve, Vec<OptimizationResult>)> {
    let results = snrs_db
        .iter()
        .map(|&snr| optimize_profile(m, num_distinct, snr, options))
        .collect::<Result<Vec<_>>>()?;
    let label = format!("{}-ASK optimized P = {num_distinct}", 1usize << m);
    let curve = MiCurve::new(label, results.iter().map(|r| (r.snr_db, r.mi_bpcu)).collect())?;
    Ok((curve, results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn result_is_reproducible() {
        let options = GridOptions::default();
        let result = optimize_profile(3, 2, 12.0, &options).unwrap();
        let again = profile_mi_at_snr(&result.profile, 12.0, options.quadrature).unwrap();
        assert!((again - result.mi_bpcu).abs() < 1e-6);
        assert_eq!(result.search.strategy, SearchStrategy::TensorGrid);
        assert!(result.search.evaluations > 51 * 51);
    }

    #[test]
    fn never_below_uniform() {
        let options = GridOptions::default();
        for snr in [0.0, 8.0, 16.0] {
            let result = optimize_profile(4, 2, snr, &options).unwrap();
            let uniform = ShapingProfile::uniform(4, 2).unwrap();
            let base = profile_mi_at_snr(&uniform, snr, options.quadrature).unwrap();
            assert!(result.mi_bpcu >= base - 1e-12);
        }
    }

    #[test]
    fn rejects_non_dividing_parameter_count() {
        assert!(matches!(
            optimize_profile(5, 3, 10.0, &GridOptions::default()),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn high_snr_optimum_is_uniform() {
        let result = optimize_profile(3, 2, 45.0, &GridOptions::default()).unwrap();
        for &p in result.profile.probs() {
            assert!((p - 0.5).abs() < 0.03, "{:?}", result.profile.probs());
        }
    }

    #[test]
    fn strategies_agree_in_two_dimensions() {
        let tensor = optimize_profile(4, 2, 14.0, &GridOptions::default()).unwrap();
        let options = GridOptions {
            strategy: Some(SearchStrategy::CoordinateLineSearch),
            ..GridOptions::default()
        };
        let line = optimize_profile(4, 2, 14.0, &options).unwrap();
        assert!((tensor.mi_bpcu - line.mi_bpcu).abs() < 1e-5);
        for (a, b) in tensor.profile.probs().iter().zip(line.profile.probs()) {
            assert!((a - b).abs() < 0.01);
        }
    }

    #[test]
    fn refinement_schedule() {
        let steps = GridOptions::default().steps();
        assert_eq!(steps.len(), 3);
        assert!((steps[0] - 0.02).abs() < 1e-15);
        assert!((steps[2] - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn tensor_product() {
        let grid = tensor(&[vec![0.0, 1.0], vec![2.0, 3.0, 4.0]]);
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[4], vec![1.0, 3.0]);
    }
}
