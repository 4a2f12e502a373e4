use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::gaussian::{
    light_x_moments, NoiseBlock, squeezing_minimum, variance_of, Coupling, GaussianState, NoiseEntry, Sample, StepOperators,
    TimeSeries, Trajectory, TrajectoryRecord, Transform,
};
use crate::scalar::Real;

use super::{Observable, Phase, ProbeSpec, Propagation, RotationSpec, Scenario};

/// Variable indices of a state, resolved once per run.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    dim: usize,
    x: Vec<usize>,
    p: Vec<usize>,
    light: Option<(usize, usize)>,
    theta: Option<usize>,
}

impl Layout {
    pub(crate) fn of<T: Real>(s: &GaussianState<T>) -> Self {
        let n = s.atom_slices();
        Self {
            dim: s.dim(),
            x: (0..n).filter_map(|i| s.atom_x(i)).collect(),
            p: (0..n).filter_map(|i| s.atom_p(i)).collect(),
            light: s.light_indices(),
            theta: s.parameter_index(),
        }
    }
}

/// Operators of one slice group meeting the segment at exposure step `k`.
///
/// Couplings decay as `κ_i² (1−η_iτ)^k` while the atomic noise prefactor
/// grows as `2/(1−η_iτ)^k`; both are frozen over the step.
#[allow(clippy::too_many_arguments)]
fn slice_group_op<T: Real>(
    p: &ProbeSpec<T>,
    layout: &Layout,
    slices: std::ops::Range<usize>,
    light_eps: T,
    light_prefactor: T,
    k: usize,
) -> Result<StepOperators<T>> {
    let (xl, pl) = layout
        .light
        .ok_or_else(|| Error::config("probe phase needs a light mode"))?;
    let tau = p.tau;
    let kk = T::from_usize_lossy(k);
    let two = T::lit(2.0);
    let mut couplings: SmallVec<[Coupling<T>; 4]> = SmallVec::new();
    let mut loss: SmallVec<[(usize, T); 4]> = SmallVec::new();
    let mut atom_noise: SmallVec<[NoiseEntry<T>; 4]> = SmallVec::new();
    for i in slices {
        let eta_tau = p.slices.etas[i] * tau;
        let keep = if eta_tau > T::zero() {
            (kk * (-eta_tau).ln_1p()).exp()
        } else {
            T::one()
        };
        let kt = (p.slices.kappas_sq[i] * tau * keep).sqrt();
        let (x, pa) = (layout.x[i], layout.p[i]);
        couplings.push(Coupling {
            row: x,
            col: pl,
            value: kt,
        });
        couplings.push(Coupling {
            row: xl,
            col: pa,
            value: kt,
        });
        if eta_tau > T::zero() {
            let l = (T::one() - eta_tau).sqrt();
            loss.push((x, l));
            loss.push((pa, l));
            for idx in [x, pa] {
                atom_noise.push(NoiseEntry {
                    index: idx,
                    probability: eta_tau,
                    prefactor: two / keep,
                });
            }
        }
    }
    let mut light_noise: SmallVec<[NoiseEntry<T>; 2]> = SmallVec::new();
    if light_eps > T::zero() {
        let l = (T::one() - light_eps).sqrt();
        loss.push((xl, l));
        loss.push((pl, l));
        for idx in [xl, pl] {
            light_noise.push(NoiseEntry {
                index: idx,
                probability: light_eps,
                prefactor: light_prefactor,
            });
        }
    }
    Ok(StepOperators {
        dim: layout.dim,
        transform: Transform::Sparse(couplings),
        loss,
        atom_noise,
        light_noise,
        correlated_noise: None,
        tau,
    })
}

/// Operators applied during local step `k` of a probe phase, in order.
pub(crate) fn probe_ops<T: Real>(p: &ProbeSpec<T>, layout: &Layout, k: usize) -> Result<Vec<StepOperators<T>>> {
    let n = p.slices.n_slices();
    let clock = p.clock_offset + k;
    match p.propagation {
        Propagation::Collective => Ok(vec![slice_group_op(
            p,
            layout,
            0..n,
            p.slices.total_epsilon(),
            T::one(),
            clock,
        )?]),
        Propagation::Sequential if n == 1 => Ok(vec![slice_group_op(
            p,
            layout,
            0..1,
            p.slices.epsilons[0],
            T::one(),
            clock,
        )?]),
        Propagation::Sequential => Ok(vec![segment_pass_op(p, layout, clock)?]),
    }
}

/// Per-slice operators of one segment crossing the slices in beam order.
///
/// Slice `i` sees the light noise prefactor `e^{A_i}`, `A_i` the absorption
/// of the slices before it.
#[cfg(test)]
pub(crate) fn sequential_slice_ops<T: Real>(
    p: &ProbeSpec<T>,
    layout: &Layout,
    clock: usize,
) -> Result<Vec<StepOperators<T>>> {
    let n = p.slices.n_slices();
    let mut ops = Vec::with_capacity(n);
    let mut absorbed = T::zero();
    for i in 0..n {
        let eps = p.slices.epsilons[i];
        ops.push(slice_group_op(p, layout, i..i + 1, eps, absorbed.exp(), clock)?);
        absorbed = absorbed + eps;
    }
    Ok(ops)
}

/// The product of [`sequential_slice_ops`] as a single operator.
///
/// With `κ_i` the per-slice couplings, `b_i = √(1−ε_i)` and
/// `B_i = Π_{m<i} b_m`, the composite map is
/// `x_i += κ_i B_i p_ph`, `x_ph += Σ κ_i/B_i · p_i`, followed by the atomic
/// losses and `B_n` on the light. Light noise injected at slice `j`
/// propagates into every later slice, giving with
/// `C_i = Σ_{j<i} v_j / B_{j+1}²` and `e_i = a_i κ_i B_i`, `e_n = B_n` the
/// correlated block `Q[x_i, x_l] = e_i e_l C_min(i,l)` over
/// `(x_0, …, x_{n−1}, p_ph)` plus `Q[x_ph, x_ph] = B_n² C_n`.
fn segment_pass_op<T: Real>(p: &ProbeSpec<T>, layout: &Layout, clock: usize) -> Result<StepOperators<T>> {
    let (xl, pl) = layout
        .light
        .ok_or_else(|| Error::config("probe phase needs a light mode"))?;
    let n = p.slices.n_slices();
    let tau = p.tau;
    let kk = T::from_usize_lossy(clock);
    let two = T::lit(2.0);

    let mut couplings: SmallVec<[Coupling<T>; 4]> = SmallVec::with_capacity(2 * n);
    let mut loss: SmallVec<[(usize, T); 4]> = SmallVec::with_capacity(2 * n + 2);
    let mut atom_noise: SmallVec<[NoiseEntry<T>; 4]> = SmallVec::with_capacity(2 * n);
    let mut e = Vec::with_capacity(n + 1);
    let mut c = Vec::with_capacity(n + 1);
    let mut big_b = T::one();
    let mut cum = T::zero();
    let mut absorbed = T::zero();
    for i in 0..n {
        let eta_tau = p.slices.etas[i] * tau;
        let keep = if eta_tau > T::zero() {
            (kk * (-eta_tau).ln_1p()).exp()
        } else {
            T::one()
        };
        let kt = (p.slices.kappas_sq[i] * tau * keep).sqrt();
        let (x, pa) = (layout.x[i], layout.p[i]);
        couplings.push(Coupling {
            row: x,
            col: pl,
            value: kt * big_b,
        });
        couplings.push(Coupling {
            row: xl,
            col: pa,
            value: kt / big_b,
        });
        let mut a = T::one();
        if eta_tau > T::zero() {
            a = (T::one() - eta_tau).sqrt();
            loss.push((x, a));
            loss.push((pa, a));
            for idx in [x, pa] {
                atom_noise.push(NoiseEntry {
                    index: idx,
                    probability: eta_tau,
                    prefactor: two / keep,
                });
            }
        }
        e.push(a * kt * big_b);
        c.push(cum);

        let eps = p.slices.epsilons[i];
        let v = absorbed.exp() * eps;
        absorbed = absorbed + eps;
        big_b = big_b * (T::one() - eps).sqrt();
        cum = cum + v / (big_b * big_b);
    }
    e.push(big_b);
    c.push(cum);
    if big_b != T::one() {
        loss.push((xl, big_b));
        loss.push((pl, big_b));
    }

    let mut indices: Vec<usize> = layout.x.clone();
    indices.push(pl);
    indices.push(xl);
    let k = n + 2;
    let mut values = vec![T::zero(); k * k];
    for i in 0..=n {
        for l in i..=n {
            let q = e[i] * e[l] * c[i];
            values[i * k + l] = q;
            values[l * k + i] = q;
        }
    }
    values[(n + 1) * k + (n + 1)] = big_b * big_b * cum;

    Ok(StepOperators {
        dim: layout.dim,
        transform: Transform::Sparse(couplings),
        loss,
        atom_noise,
        light_noise: SmallVec::new(),
        correlated_noise: Some(NoiseBlock { indices, values }),
        tau,
    })
}

fn rotation_op<T: Real>(r: &RotationSpec<T>, layout: &Layout) -> Result<StepOperators<T>> {
    let theta = layout
        .theta
        .ok_or_else(|| Error::config("rotation needs a parameter variable"))?;
    let couplings: SmallVec<[Coupling<T>; 4]> = r
        .alphas
        .iter()
        .zip(&layout.p)
        .filter(|(a, _)| **a != T::zero())
        .map(|(&a, &p)| Coupling {
            row: p,
            col: theta,
            value: a,
        })
        .collect();
    Ok(StepOperators {
        dim: layout.dim,
        transform: Transform::Sparse(couplings),
        loss: SmallVec::new(),
        atom_noise: SmallVec::new(),
        light_noise: SmallVec::new(),
        correlated_noise: None,
        tau: r.duration,
    })
}

fn evaluate<T: Real>(state: &GaussianState<T>, layout: &Layout, observables: &[Observable<T>]) -> Result<Vec<T>> {
    let mut eig = None;
    let mut out = Vec::with_capacity(observables.len());
    let first = |v: &[usize]| {
        v.first()
            .copied()
            .ok_or_else(|| Error::config("observable needs an atomic slice"))
    };
    let theta = || {
        layout
            .theta
            .ok_or_else(|| Error::config("observable needs a parameter variable"))
    };
    for o in observables {
        let v = match o {
            Observable::VarP => state.variance(first(&layout.p)?),
            Observable::VarX => state.variance(first(&layout.x)?),
            Observable::MinEig | Observable::EigenOverlap(_) => {
                if eig.is_none() {
                    eig = Some(squeezing_minimum(state)?);
                }
                let (val, dir) = eig.as_ref().expect("computed above");
                match o {
                    Observable::EigenOverlap(v) => dir.overlap(v).abs(),
                    _ => *val,
                }
            }
            Observable::Collective { variable, .. } => variance_of(state, variable)?,
            Observable::VarTheta => state.variance(theta()?),
            Observable::MeanTheta => state.mean()[theta()?],
        };
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RunOutput<T = f64> {
    pub series: TimeSeries<T>,
    pub record: TrajectoryRecord<T>,
    pub final_state: GaussianState<T>,
}

/// Executes the scenario with readouts drawn from a generator seeded by
/// `seed`.
pub fn run<T: Real>(s: &Scenario<T>, seed: u64) -> Result<(TimeSeries<T>, TrajectoryRecord<T>)> {
    let out = run_detailed(s, seed)?;
    Ok((out.series, out.record))
}

/// [`run`], also returning the final conditional state.
pub fn run_detailed<T: Real>(s: &Scenario<T>, seed: u64) -> Result<RunOutput<T>> {
    s.validate()?;
    let layout = Layout::of(&s.initial_state);
    let mut series = TimeSeries::new(s.observables.iter().map(|o| o.name()));
    let mut record = TrajectoryRecord {
        seed,
        samples: Vec::new(),
        records: Vec::new(),
    };

    let mut est = Trajectory::new(s.initial_state.clone(), seed);
    // With a known angle, readouts come from the filter that knows it.
    let mut truth = match (s.theta_true, layout.theta) {
        (Some(theta), Some(_)) => Some(Trajectory::new(
            s.initial_state.clone().with_parameter_prior(T::zero(), theta)?,
            seed,
        )),
        _ => None,
    };

    let take_sample = |state: &GaussianState<T>, time: T, series: &mut TimeSeries<T>, record: &mut TrajectoryRecord<T>| -> Result<()> {
        let values = evaluate(state, &layout, &s.observables)?;
        series.push_row(time, &values);
        record.samples.push(Sample {
            time,
            mean: state.mean().to_vec(),
            variances: values,
        });
        Ok(())
    };

    if s.total_steps() > 0 {
        take_sample(&est.state, est.time, &mut series, &mut record)?;
    }
    let mut global = 0usize;
    for phase in &s.phases {
        match phase {
            Phase::Probe(p) => {
                let start = est.time;
                for k in 0..p.steps {
                    let ops = probe_ops(p, &layout, k)?;
                    let now = start + T::from_usize_lossy(k + 1) * p.tau;
                    est.advance(&ops, p.tau)?;
                    est.time = now;
                    if let Some(tr) = truth.as_mut() {
                        tr.advance(&ops, p.tau)?;
                        tr.time = now;
                    }
                    if p.measure {
                        let rec = match truth.as_mut() {
                            None => est.measure()?,
                            Some(tr) => {
                                let observed = tr.measure()?;
                                let (predicted, _) = light_x_moments(&est.state)?;
                                let mut rec = est.measure_with(observed.outcome - predicted)?;
                                rec.outcome = observed.outcome;
                                rec
                            }
                        };
                        if s.record_measurements {
                            record.records.push(rec);
                        }
                    } else {
                        est.discard_light()?;
                        if let Some(tr) = truth.as_mut() {
                            tr.discard_light()?;
                        }
                    }
                    global += 1;
                    if global.is_multiple_of(s.sample_every) {
                        take_sample(&est.state, est.time, &mut series, &mut record)?;
                    }
                }
            }
            Phase::Rotate(r) => {
                let op = rotation_op(r, &layout)?;
                est.advance(std::slice::from_ref(&op), r.duration)?;
                if let Some(tr) = truth.as_mut() {
                    tr.advance(std::slice::from_ref(&op), r.duration)?;
                }
            }
        }
    }
    Ok(RunOutput {
        series,
        record,
        final_state: est.state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::Propagator;
    use crate::numerics::SymMatrix;
    use crate::scenarios::SliceConfig;

    /// State with γ = A Aᵀ for a fixed dense `A`, and a nonzero mean.
    fn correlated_state(n: usize) -> GaussianState<f64> {
        let base = GaussianState::<f64>::atoms_and_light(n).unwrap();
        let d = base.dim();
        let raw: Vec<f64> = (0..d * d)
            .map(|k| ((k / d * 7 + k % d * 3) % 11) as f64 * 0.01 + if k / d == k % d { 1.0 } else { 0.0 })
            .collect();
        let a = SymMatrix::from_raw(d, raw);
        let mut g = a.matmul(&a.transpose());
        g.symmetrize();
        let mean: Vec<f64> = (0..d).map(|i| 0.1 * i as f64 - 0.3).collect();
        GaussianState::from_moments(base.modes(), mean, g).unwrap()
    }

    #[test]
    fn segment_pass_matches_slice_by_slice() {
        for n in [2usize, 3, 7] {
            let eps: Vec<f64> = (0..n).map(|i| 0.01 + 0.005 * i as f64).collect();
            let slices = SliceConfig::thick(1.83e6, 1.7577e3, &eps, 1e12).unwrap();
            let p = ProbeSpec {
                slices,
                propagation: Propagation::Sequential,
                tau: 2e-8,
                steps: 10,
                measure: true,
                clock_offset: 0,
            };
            let state = correlated_state(n);
            let layout = Layout::of(&state);
            for clock in [0usize, 5000] {
                let mut a = state.clone();
                let mut b = state.clone();
                let mut prop = Propagator::new();
                for op in sequential_slice_ops(&p, &layout, clock).unwrap() {
                    op.validate().unwrap();
                    prop.apply(&mut a, &op).unwrap();
                }
                let ops = probe_ops(&p, &layout, clock).unwrap();
                assert_eq!(ops.len(), 1);
                ops[0].validate().unwrap();
                prop.apply(&mut b, &ops[0]).unwrap();
                let scale = a.cov().max_abs();
                for i in 0..a.dim() {
                    assert!((a.mean()[i] - b.mean()[i]).abs() < 1e-13, "mean {i}");
                    for j in 0..a.dim() {
                        let diff = (a.cov().get(i, j) - b.cov().get(i, j)).abs();
                        assert!(diff < 1e-13 * scale, "n={n} ({i},{j}) {diff}");
                    }
                }
                assert_eq!(b.cov().asymmetry(), 0.0);
            }
        }
    }

    #[test]
    fn single_slice_pass_is_the_collective_step() {
        let slices = SliceConfig::thick(1.83e6, 1.7577, &[0.028], 2e12).unwrap();
        let mut p = ProbeSpec {
            slices,
            propagation: Propagation::Sequential,
            tau: 1e-8,
            steps: 3,
            measure: true,
            clock_offset: 0,
        };
        let state = GaussianState::<f64>::atoms_and_light(1).unwrap();
        let layout = Layout::of(&state);
        let seq = probe_ops(&p, &layout, 2).unwrap();
        p.propagation = Propagation::Collective;
        assert_eq!(seq, probe_ops(&p, &layout, 2).unwrap());
    }
}
