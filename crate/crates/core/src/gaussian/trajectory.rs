use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::Result;
use crate::scalar::Real;

use super::measure::{discard_light, light_x_moments, measure_light_x_in_place, MeasurementRecord};
use super::{GaussianState, Propagator, StepOperators};

/// Snapshot of the first moments and selected variances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample<T = f64> {
    pub time: T,
    pub mean: Vec<T>,
    pub variances: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord<T = f64> {
    pub seed: u64,
    pub samples: Vec<Sample<T>>,
    pub records: Vec<MeasurementRecord<T>>,
}

/// Named columns sampled on a common time axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries<T = f64> {
    pub times: Vec<T>,
    pub columns: Vec<(String, Vec<T>)>,
}

impl<T: Real> TimeSeries<T> {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Self {
            times: Vec::new(),
            columns: names.into_iter().map(|n| (n.into(), Vec::new())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn column(&self, name: &str) -> Option<&[T]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// Appends one row; `values` follow column order.
    pub fn push_row(&mut self, time: T, values: &[T]) {
        assert_eq!(values.len(), self.columns.len());
        self.times.push(time);
        for ((_, col), &v) in self.columns.iter_mut().zip(values) {
            col.push(v);
        }
    }
}

/// A single stochastic realization of the measured system.
///
/// The measurement deviation `chi` is drawn from `N(0, B(1,1)/2)`, the
/// predictive distribution of `x_ph`, using `ChaCha8Rng` seeded from a
/// `u64` and the ziggurat standard normal of `rand_distr`.
#[derive(Debug, Clone)]
pub struct Trajectory<T = f64> {
    pub state: GaussianState<T>,
    pub time: T,
    rng: ChaCha8Rng,
    propagator: Propagator<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(state: GaussianState<T>, seed: u64) -> Self {
        Self {
            state,
            time: T::zero(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            propagator: Propagator::new(),
        }
    }

    /// Applies the operators of one segment in order and advances the clock.
    pub fn advance(&mut self, ops: &[StepOperators<T>], duration: T) -> Result<()> {
        for op in ops {
            self.propagator.apply(&mut self.state, op)?;
        }
        self.time = self.time + duration;
        Ok(())
    }

    pub fn standard_normal(&mut self) -> T {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        T::lit(z)
    }

    /// Draws a readout from the predictive distribution and conditions on it.
    pub fn measure(&mut self) -> Result<MeasurementRecord<T>> {
        let (_, b11) = light_x_moments(&self.state)?;
        let z = self.standard_normal();
        let chi = z * (b11 * T::lit(0.5)).max(T::zero()).sqrt();
        self.measure_with(chi)
    }

    pub fn measure_with(&mut self, chi: T) -> Result<MeasurementRecord<T>> {
        measure_light_x_in_place(&mut self.state, chi, self.time)
    }

    pub fn discard_light(&mut self) -> Result<()> {
        discard_light(&mut self.state)
    }
}

/// Runs an explicit list of steps, reading out the light after each one
/// (or tracing it out when `measure_after_each` is false).
///
/// `watch` lists variable indices whose variances are sampled after every
/// step, in addition to the initial sample.
pub fn run_sequence<T: Real>(
    state: GaussianState<T>,
    steps: &[StepOperators<T>],
    measure_after_each: bool,
    seed: u64,
    watch: &[usize],
) -> Result<(GaussianState<T>, TrajectoryRecord<T>, TimeSeries<T>)> {
    let names: Vec<String> = watch.iter().map(|i| format!("var[{i}]")).collect();
    let mut series = TimeSeries::new(names);
    let mut record = TrajectoryRecord {
        seed,
        samples: Vec::new(),
        records: Vec::new(),
    };
    if steps.is_empty() {
        return Ok((state, record, series));
    }
    for s in steps {
        s.validate()?;
    }

    let has_light = state.light_indices().is_some();
    let mut traj = Trajectory::new(state, seed);
    let snapshot = |traj: &Trajectory<T>, record: &mut TrajectoryRecord<T>, series: &mut TimeSeries<T>| {
        let vars: Vec<T> = watch.iter().map(|&i| traj.state.variance(i)).collect();
        series.push_row(traj.time, &vars);
        record.samples.push(Sample {
            time: traj.time,
            mean: traj.state.mean().to_vec(),
            variances: vars,
        });
    };
    snapshot(&traj, &mut record, &mut series);
    for step in steps {
        traj.advance(std::slice::from_ref(step), step.tau)?;
        if has_light {
            if measure_after_each {
                record.records.push(traj.measure()?);
            } else {
                traj.discard_light()?;
            }
        }
        snapshot(&traj, &mut record, &mut series);
    }
    Ok((traj.state, record, series))
}
