use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::analytic::{CollectiveKind, CollectiveVariable};
use crate::error::{Error, Result};
use crate::numerics::{sym_eig_min, SymMatrix};
use crate::scalar::Real;

/// Identifier of a mode in the joint state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Mode {
    /// Collective spin of atomic slice `i` (zero-based): `(x_at,i, p_at,i)`.
    Atom(usize),
    /// The current beam segment: `(x_ph, p_ph)`.
    Light,
    /// A classical parameter such as a rotation angle, one variable.
    Parameter,
}

impl Mode {
    fn quadratures(self) -> &'static [Quadrature] {
        match self {
            Mode::Atom(_) | Mode::Light => &[Quadrature::X, Quadrature::P],
            Mode::Parameter => &[Quadrature::Value],
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Atom(i) => write!(f, "atom[{i}]"),
            Mode::Light => f.write_str("light"),
            Mode::Parameter => f.write_str("theta"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Quadrature {
    X,
    P,
    Value,
}

/// One canonical (or classical) variable of the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Variable {
    pub mode: Mode,
    pub quadrature: Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianState<T = f64> {
    modes: Vec<Mode>,
    variables: Vec<Variable>,
    pub(crate) mean: Vec<T>,
    pub(crate) cov: SymMatrix<T>,
}

/// Vacuum / coherent-spin state: zero mean, `γ = 1`.
pub fn vacuum_state<T: Real>(modes: &[Mode]) -> Result<GaussianState<T>> {
    if modes.is_empty() {
        return Err(Error::invalid("state needs at least one mode"));
    }
    let mut seen = HashSet::new();
    for m in modes {
        if !seen.insert(*m) {
            return Err(Error::invalid(format!("duplicate mode label {m}")));
        }
    }
    let variables: Vec<Variable> = modes
        .iter()
        .flat_map(|&mode| {
            mode.quadratures()
                .iter()
                .map(move |&quadrature| Variable { mode, quadrature })
        })
        .collect();
    let dim = variables.len();
    Ok(GaussianState {
        modes: modes.to_vec(),
        variables,
        mean: vec![T::zero(); dim],
        cov: SymMatrix::identity(dim),
    })
}

impl<T: Real> GaussianState<T> {
    /// `n` atomic slices followed by one light pair.
    pub fn atoms_and_light(n: usize) -> Result<Self> {
        let mut modes: Vec<Mode> = (0..n).map(Mode::Atom).collect();
        modes.push(Mode::Light);
        vacuum_state(&modes)
    }

    /// Builds a state from explicit moments; `cov` must be symmetric.
    pub fn from_moments(modes: &[Mode], mean: Vec<T>, cov: SymMatrix<T>) -> Result<Self> {
        let mut s = vacuum_state::<T>(modes)?;
        if mean.len() != s.dim() || cov.dim() != s.dim() {
            return Err(Error::invalid(format!(
                "moments have dimension {}/{}, modes need {}",
                mean.len(),
                cov.dim(),
                s.dim()
            )));
        }
        cov.check_symmetric()?;
        s.mean = mean;
        s.cov = cov;
        Ok(s)
    }

    /// Sets the prior of the parameter variable (variance in physical units).
    pub fn with_parameter_prior(mut self, variance: T, mean: T) -> Result<Self> {
        let idx = self
            .parameter_index()
            .ok_or_else(|| Error::invalid("state has no parameter variable"))?;
        if !(variance >= T::zero()) {
            return Err(Error::invalid("parameter prior variance must be >= 0"));
        }
        for j in 0..self.dim() {
            self.cov.set_sym(idx, j, T::zero());
        }
        self.cov.set(idx, idx, T::lit(2.0) * variance);
        self.mean[idx] = mean;
        Ok(self)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    /// Covariance in the factor-two convention.
    pub fn cov(&self) -> &SymMatrix<T> {
        &self.cov
    }

    pub fn index_of(&self, v: Variable) -> Option<usize> {
        self.variables.iter().position(|&w| w == v)
    }

    pub fn atom_x(&self, slice: usize) -> Option<usize> {
        self.index_of(Variable {
            mode: Mode::Atom(slice),
            quadrature: Quadrature::X,
        })
    }

    pub fn atom_p(&self, slice: usize) -> Option<usize> {
        self.index_of(Variable {
            mode: Mode::Atom(slice),
            quadrature: Quadrature::P,
        })
    }

    pub fn parameter_index(&self) -> Option<usize> {
        self.variables.iter().position(|v| v.mode == Mode::Parameter)
    }

    /// `(x_ph, p_ph)` indices if a light pair is present.
    pub fn light_indices(&self) -> Option<(usize, usize)> {
        let x = self.index_of(Variable {
            mode: Mode::Light,
            quadrature: Quadrature::X,
        })?;
        Some((x, x + 1))
    }

    pub fn atom_slices(&self) -> usize {
        self.modes
            .iter()
            .filter(|m| matches!(m, Mode::Atom(_)))
            .count()
    }

    /// Indices of all atomic variables in state order.
    pub fn atom_indices(&self) -> Vec<usize> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| matches!(v.mode, Mode::Atom(_)))
            .map(|(i, _)| i)
            .collect()
    }

    /// Covariance block of the atomic variables (γ convention).
    pub fn atomic_block(&self) -> SymMatrix<T> {
        self.cov.submatrix(&self.atom_indices())
    }

    /// Physical variance `γ_ii / 2` of variable `i`.
    pub fn variance(&self, i: usize) -> T {
        self.cov.get(i, i) * T::lit(0.5)
    }

    /// Physical covariance `γ_ij / 2`.
    pub fn covariance(&self, i: usize, j: usize) -> T {
        self.cov.get(i, j) * T::lit(0.5)
    }
}

/// Smallest physical variance over all atomic directions and the direction
/// achieving it.
pub fn squeezing_minimum<T: Real>(state: &GaussianState<T>) -> Result<(T, CollectiveVariable<T>)> {
    if state.atom_slices() == 0 {
        return Err(Error::invalid("state has no atomic mode"));
    }
    let (lambda, vector) = sym_eig_min(&state.atomic_block())?;
    let direction = CollectiveVariable::new(vector, CollectiveKind::Eigen)?;
    Ok((lambda * T::lit(0.5), direction))
}

/// Physical variance `vᵀ A v / 2` of a collective atomic variable.
pub fn variance_of<T: Real>(state: &GaussianState<T>, v: &CollectiveVariable<T>) -> Result<T> {
    let idx = state.atom_indices();
    if v.coefficients().len() != idx.len() {
        return Err(Error::invalid(format!(
            "collective variable spans {} variables, state has {} atomic variables",
            v.coefficients().len(),
            idx.len()
        )));
    }
    let c = v.coefficients();
    let mut acc = T::zero();
    for (a, &i) in idx.iter().enumerate() {
        if c[a] == T::zero() {
            continue;
        }
        let row = state.cov.row(i);
        let inner: T = idx
            .iter()
            .zip(c)
            .map(|(&j, &cj)| row[j] * cj)
            .sum();
        acc = acc + c[a] * inner;
    }
    Ok(acc * T::lit(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_single_pair_and_light() {
        let s = GaussianState::<f64>::atoms_and_light(1).unwrap();
        assert_eq!(s.dim(), 4);
        assert_eq!(s.cov(), &SymMatrix::identity(4));
        assert!(s.mean().iter().all(|&m| m == 0.0));
        assert_eq!(s.light_indices(), Some((2, 3)));
    }

    #[test]
    fn vacuum_ten_slices() {
        let s = GaussianState::<f64>::atoms_and_light(10).unwrap();
        assert_eq!(s.dim(), 22);
        assert_eq!(s.cov(), &SymMatrix::identity(22));
        assert_eq!(s.atom_indices().len(), 20);
    }

    #[test]
    fn parameter_prior_uses_factor_two() {
        let s = vacuum_state::<f64>(&[Mode::Parameter, Mode::Atom(0), Mode::Light])
            .unwrap()
            .with_parameter_prior(0.3, 0.1)
            .unwrap();
        assert_eq!(s.dim(), 5);
        assert_eq!(s.cov().get(0, 0), 0.6);
        assert_eq!(s.mean()[0], 0.1);
        assert_eq!(s.variance(0), 0.3);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let err = vacuum_state::<f64>(&[Mode::Atom(0), Mode::Atom(0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert!(vacuum_state::<f64>(&[]).is_err());
    }

    #[test]
    fn squeezing_minimum_vacuum_and_diagonal() {
        let s = GaussianState::<f64>::atoms_and_light(3).unwrap();
        let (v, dir) = squeezing_minimum(&s).unwrap();
        assert_eq!(v, 0.5);
        assert_eq!(dir.coefficients().len(), 6);

        let s = GaussianState::from_moments(
            &[Mode::Atom(0)],
            vec![0.0f64, 0.0],
            SymMatrix::from_diagonal(&[2.0, 0.5]),
        )
        .unwrap();
        let (v, dir) = squeezing_minimum(&s).unwrap();
        assert_eq!(v, 0.25);
        assert!((dir.coefficients()[1].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn squeezing_minimum_needs_atoms() {
        let s = vacuum_state::<f64>(&[Mode::Light]).unwrap();
        assert!(squeezing_minimum(&s).is_err());
    }

    #[test]
    fn variance_of_read_off() {
        let s = GaussianState::<f64>::atoms_and_light(2).unwrap();
        let v = CollectiveVariable::from_weights(vec![0.3, -1.0, 2.0, 0.1], CollectiveKind::Custom)
            .unwrap();
        assert!((variance_of(&s, &v).unwrap() - 0.5).abs() < 1e-15);

        // γ_pp = 1/(1+k²) with k = 1.
        let s = GaussianState::from_moments(
            &[Mode::Atom(0)],
            vec![0.0, 0.0],
            SymMatrix::from_diagonal(&[2.0, 0.5]),
        )
        .unwrap();
        let p = CollectiveVariable::new(vec![0.0, 1.0], CollectiveKind::Custom).unwrap();
        assert_eq!(variance_of(&s, &p).unwrap(), 0.25);

        let wrong = CollectiveVariable::new(vec![1.0, 0.0, 0.0, 0.0], CollectiveKind::Custom).unwrap();
        assert!(variance_of(&s, &wrong).is_err());
    }
}
