use serde::Serialize;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::numerics::SymMatrix;
use crate::scalar::Real;

use super::GaussianState;

/// Off-diagonal entry of a transform `S = 1 + Σ value · e_row e_colᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coupling<T = f64> {
    pub row: usize,
    pub col: usize,
    pub value: T,
}

/// Linear map applied to the state vector in one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Transform<T = f64> {
    Identity,
    /// Identity plus a few off-diagonal entries.
    Sparse(SmallVec<[Coupling<T>; 4]>),
    /// Full row-major matrix.
    Dense(Vec<T>),
}

/// Diagonal noise injection `prefactor · probability` on one variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseEntry<T = f64> {
    pub index: usize,
    pub probability: T,
    pub prefactor: T,
}

/// Symmetric noise covariance on a subset of variables (factor-two
/// convention), row-major over `indices`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseBlock<T = f64> {
    pub indices: Vec<usize>,
    pub values: Vec<T>,
}

/// One coarse-grained step:
/// `γ → L S γ Sᵀ L + Σ_atom prefactor·M + Σ_light prefactor·N`,
/// `⟨y⟩ → L S ⟨y⟩`.
///
/// `loss`, `atom_noise` and `light_noise` list only the diagonal entries that
/// differ from the identity (for `L`) or from zero (for `M`, `N`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepOperators<T = f64> {
    pub dim: usize,
    pub transform: Transform<T>,
    pub loss: SmallVec<[(usize, T); 4]>,
    pub atom_noise: SmallVec<[NoiseEntry<T>; 4]>,
    pub light_noise: SmallVec<[NoiseEntry<T>; 2]>,
    /// Noise correlated across variables, added after the diagonal terms.
    pub correlated_noise: Option<NoiseBlock<T>>,
    pub tau: T,
}

impl<T: Real> StepOperators<T> {
    pub fn identity(dim: usize, tau: T) -> Self {
        Self {
            dim,
            transform: Transform::Identity,
            loss: SmallVec::new(),
            atom_noise: SmallVec::new(),
            light_noise: SmallVec::new(),
            correlated_noise: None,
            tau,
        }
    }

    /// Dense transform matrix `S`.
    pub fn transform_matrix(&self) -> Vec<T> {
        let d = self.dim;
        match &self.transform {
            Transform::Dense(s) => s.clone(),
            Transform::Identity | Transform::Sparse(_) => {
                let mut s = vec![T::zero(); d * d];
                for i in 0..d {
                    s[i * d + i] = T::one();
                }
                if let Transform::Sparse(entries) = &self.transform {
                    for e in entries {
                        s[e.row * d + e.col] = s[e.row * d + e.col] + e.value;
                    }
                }
                s
            }
        }
    }

    pub fn loss_diagonal(&self) -> Vec<T> {
        let mut l = vec![T::one(); self.dim];
        for &(i, v) in &self.loss {
            l[i] = v;
        }
        l
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        match &self.transform {
            Transform::Identity => {}
            Transform::Sparse(entries) => {
                for e in entries {
                    if e.row >= d || e.col >= d || e.row == e.col {
                        return Err(Error::invalid(format!(
                            "transform entry ({}, {}) invalid for dimension {d}",
                            e.row, e.col
                        )));
                    }
                    if !e.value.is_finite() {
                        return Err(Error::invalid("transform entry is not finite"));
                    }
                }
            }
            Transform::Dense(s) => {
                if s.len() != d * d {
                    return Err(Error::invalid("dense transform has wrong size"));
                }
            }
        }
        for &(i, l) in &self.loss {
            if i >= d || !(l > T::zero() && l <= T::one()) {
                return Err(Error::invalid(format!(
                    "loss entry {l} at {i} outside (0, 1]"
                )));
            }
        }
        for (entries, min_pref, what) in [
            (&self.atom_noise[..], T::lit(2.0), "atomic"),
            (&self.light_noise[..], T::one(), "light"),
        ] {
            for n in entries {
                if n.index >= d || !(n.probability >= T::zero() && n.probability < T::one()) {
                    return Err(Error::invalid(format!(
                        "{what} noise probability {} at {} outside [0, 1)",
                        n.probability, n.index
                    )));
                }
                // Prefactors only grow from their initial value.
                if !(n.prefactor >= min_pref * (T::one() - T::structural_eps())) {
                    return Err(Error::invalid(format!(
                        "{what} noise prefactor {} below {min_pref}",
                        n.prefactor
                    )));
                }
            }
        }
        if let Some(b) = &self.correlated_noise {
            let k = b.indices.len();
            if b.values.len() != k * k || b.indices.iter().any(|&i| i >= d) {
                return Err(Error::invalid("correlated noise block has inconsistent shape"));
            }
            for a in 0..k {
                if !(b.values[a * k + a] >= T::zero()) {
                    return Err(Error::invalid("correlated noise has a negative variance"));
                }
                for c in 0..a {
                    if b.values[a * k + c] != b.values[c * k + a] {
                        return Err(Error::invalid("correlated noise block is not symmetric"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Reusable scratch space for applying steps without reallocating.
#[derive(Debug, Default, Clone)]
pub struct Propagator<T = f64> {
    rows: Vec<T>,
    targets: Vec<usize>,
    /// Position of each variable in `targets`, or `usize::MAX`.
    slot: Vec<usize>,
    /// Entries grouped by target row: `(col, value)` with offsets.
    grouped: Vec<(usize, T)>,
    offsets: Vec<usize>,
    factors: Vec<T>,
}

const NOT_TARGET: usize = usize::MAX;

impl<T: Real> Propagator<T> {
    pub fn new() -> Self {
        Self {
            rows: Vec::new(),
            targets: Vec::new(),
            slot: Vec::new(),
            grouped: Vec::new(),
            offsets: Vec::new(),
            factors: Vec::new(),
        }
    }

    /// Applies `step` to `state` in place.
    pub fn apply(&mut self, state: &mut GaussianState<T>, step: &StepOperators<T>) -> Result<()> {
        if step.dim != state.dim() {
            return Err(Error::invalid(format!(
                "step dimension {} does not match state dimension {}",
                step.dim,
                state.dim()
            )));
        }
        match &step.transform {
            Transform::Identity => {}
            Transform::Sparse(entries) => self.sparse_congruence(state, entries),
            Transform::Dense(s) => dense_congruence(state, s),
        }
        self.apply_loss(state, &step.loss);
        for n in step.atom_noise.iter().chain(step.light_noise.iter()) {
            let i = n.index;
            let v = state.cov.get(i, i) + n.prefactor * n.probability;
            state.cov.set(i, i, v);
        }
        if let Some(b) = &step.correlated_noise {
            let k = b.indices.len();
            for (a, &i) in b.indices.iter().enumerate() {
                for (c, &j) in b.indices.iter().enumerate() {
                    let v = state.cov.get(i, j) + b.values[a * k + c];
                    state.cov.set(i, j, v);
                }
            }
        }
        Ok(())
    }

    /// `γ → (1+E) γ (1+E)ᵀ` touching only the rows named in `E`.
    fn sparse_congruence(&mut self, state: &mut GaussianState<T>, entries: &[Coupling<T>]) {
        if entries.is_empty() {
            return;
        }
        let d = state.dim();
        self.slot.clear();
        self.slot.resize(d, NOT_TARGET);
        self.targets.clear();
        for e in entries {
            if self.slot[e.row] == NOT_TARGET {
                self.slot[e.row] = self.targets.len();
                self.targets.push(e.row);
            }
        }
        let k = self.targets.len();
        self.offsets.clear();
        self.offsets.resize(k + 1, 0);
        for e in entries {
            self.offsets[self.slot[e.row] + 1] += 1;
        }
        for a in 0..k {
            self.offsets[a + 1] += self.offsets[a];
        }
        self.grouped.clear();
        self.grouped.resize(entries.len(), (0, T::zero()));
        let mut fill = self.offsets.clone();
        for e in entries {
            let a = self.slot[e.row];
            self.grouped[fill[a]] = (e.col, e.value);
            fill[a] += 1;
        }

        // Y = (1+E) γ on the target rows, from the original γ.
        // Every target row is overwritten below.
        self.rows.resize(k * d, T::zero());
        for a in 0..k {
            let r = self.targets[a];
            let dst = &mut self.rows[a * d..(a + 1) * d];
            dst.copy_from_slice(state.cov.row(r));
            for &(col, value) in &self.grouped[self.offsets[a]..self.offsets[a + 1]] {
                let src = state.cov.row(col);
                for (y, &g) in dst.iter_mut().zip(src) {
                    *y = *y + value * g;
                }
            }
        }

        // Mean follows the same map.
        let mut new_mean: SmallVec<[T; 8]> = SmallVec::with_capacity(k);
        for a in 0..k {
            let mut m = state.mean[self.targets[a]];
            for &(col, value) in &self.grouped[self.offsets[a]..self.offsets[a + 1]] {
                m = m + value * state.mean[col];
            }
            new_mean.push(m);
        }
        for a in 0..k {
            state.mean[self.targets[a]] = new_mean[a];
        }

        // γ' = Y (1+E)ᵀ. Outside the target block this equals Y by symmetry.
        for a in 0..k {
            let r = self.targets[a];
            let y = &self.rows[a * d..(a + 1) * d];
            let row = state.cov.row_mut(r);
            for j in 0..d {
                if self.slot[j] == NOT_TARGET {
                    row[j] = y[j];
                }
            }
        }
        for a in 0..k {
            let r = self.targets[a];
            for b in a..k {
                let s = self.targets[b];
                let y = &self.rows[a * d..(a + 1) * d];
                let mut v = y[s];
                for &(col, value) in &self.grouped[self.offsets[b]..self.offsets[b + 1]] {
                    v = v + value * y[col];
                }
                state.cov.set_sym(r, s, v);
            }
        }
        // Mirror the updated target rows into the columns.
        for j in 0..d {
            if self.slot[j] != NOT_TARGET {
                continue;
            }
            for &r in &self.targets {
                let v = state.cov.get(r, j);
                state.cov.set(j, r, v);
            }
        }
    }

    /// `γ → L γ L`, `⟨y⟩ → L ⟨y⟩` for diagonal `L`.
    fn apply_loss(&mut self, state: &mut GaussianState<T>, loss: &[(usize, T)]) {
        if loss.is_empty() {
            return;
        }
        let d = state.dim();
        self.factors.clear();
        self.factors.resize(d, T::one());
        for &(i, l) in loss {
            self.factors[i] = self.factors[i] * l;
        }
        // Only rows and columns with a factor differ from the identity.
        self.targets.clear();
        self.targets
            .extend((0..d).filter(|&i| self.factors[i] != T::one()));
        if self.targets.len() * 4 >= d {
            for i in 0..d {
                let li = self.factors[i];
                let row = state.cov.row_mut(i);
                for (x, &lj) in row.iter_mut().zip(&self.factors) {
                    *x = *x * (li * lj);
                }
            }
        } else {
            for &i in &self.targets {
                let li = self.factors[i];
                for j in 0..d {
                    let lj = self.factors[j];
                    // Pairs of scaled indices are handled once, from the smaller.
                    if lj != T::one() && j < i {
                        continue;
                    }
                    let v = state.cov.get(i, j) * (li * lj);
                    state.cov.set(i, j, v);
                    state.cov.set(j, i, v);
                }
            }
        }
        for i in 0..d {
            state.mean[i] = state.mean[i] * self.factors[i];
        }
    }
}

fn dense_congruence<T: Real>(state: &mut GaussianState<T>, s: &[T]) {
    let d = state.dim();
    let sm = SymMatrix::from_raw(d, s.to_vec());
    let mut out = sm.matmul(&state.cov).matmul(&sm.transpose());
    out.symmetrize();
    state.cov = out;
    state.mean = sm.mul_vec(&state.mean);
}

/// Returns the state after one step; the input is left untouched.
pub fn apply_step<T: Real>(state: &GaussianState<T>, step: &StepOperators<T>) -> Result<GaussianState<T>> {
    step.validate()?;
    let mut out = state.clone();
    Propagator::new().apply(&mut out, step)?;
    Ok(out)
}
