//! Transverse-field Ising and Heisenberg Hamiltonians on periodic chains and
//! square lattices, their connected elements, and a dense exact
//! diagonalization oracle.

use std::collections::BTreeSet;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VmcError};
use crate::linalg::sym_eigen_desc;
use crate::spins::{config_from_index, SpinConfiguration};
use crate::wavefunction::Wavefunction;

/// Largest system accepted by [`exact_ground_state`] and [`dense_hamiltonian`].
pub const MAX_ED_SITES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tfi,
    Heisenberg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Chain,
    Square,
}

/// One nonzero entry `⟨x|H|target⟩` of a Hamiltonian row.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectedElement {
    pub target: SpinConfiguration,
    pub amplitude: f64,
}

/// How a connected element's target differs from the source configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Diagonal,
    Flip(usize),
    Exchange(usize, usize),
}

impl Move {
    pub fn apply(self, x: &mut [i8]) {
        match self {
            Move::Diagonal => {}
            Move::Flip(i) => x[i] = -x[i],
            Move::Exchange(i, j) => x.swap(i, j),
        }
    }

    /// Basis index of the target given the source index.
    pub fn target_index(self, index: usize) -> usize {
        match self {
            Move::Diagonal => index,
            Move::Flip(i) => index ^ (1 << i),
            // only anti-aligned pairs are exchanged, so both bits flip
            Move::Exchange(i, j) => index ^ (1 << i) ^ (1 << j),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeModel {
    kind: ModelKind,
    geometry: Geometry,
    length: usize,
    periodic: bool,
    field_h: f64,
    marshall_sign: bool,
    bonds: Vec<(usize, usize)>,
}

impl LatticeModel {
    /// `length` is `L` for a chain and the side of the `L × L` square lattice.
    ///
    /// `field_h` is only read for TFI and `marshall_sign` only for Heisenberg.
    pub fn new(
        kind: ModelKind,
        geometry: Geometry,
        length: usize,
        periodic: bool,
        field_h: f64,
        marshall_sign: bool,
    ) -> Result<Self> {
        if length < 2 {
            return Err(VmcError::InvalidModel(format!(
                "lattice extent must be at least 2, got {length}"
            )));
        }
        if kind == ModelKind::Tfi && !(field_h.is_finite() && field_h >= 0.0) {
            return Err(VmcError::InvalidModel(format!(
                "transverse field must be finite and nonnegative, got {field_h}"
            )));
        }
        let bonds = build_bonds(geometry, length, periodic);
        let marshall_sign = kind == ModelKind::Heisenberg && marshall_sign;
        let model = Self {
            kind,
            geometry,
            length,
            periodic,
            field_h: if kind == ModelKind::Tfi { field_h } else { 0.0 },
            marshall_sign,
            bonds,
        };
        if marshall_sign && !model.is_bipartite() {
            return Err(VmcError::InvalidModel(
                "Marshall sign rule requires a bipartite lattice".into(),
            ));
        }
        Ok(model)
    }

    pub fn tfi_chain(length: usize, field_h: f64) -> Result<Self> {
        Self::new(ModelKind::Tfi, Geometry::Chain, length, true, field_h, false)
    }

    pub fn heisenberg_chain(length: usize, marshall_sign: bool) -> Result<Self> {
        Self::new(
            ModelKind::Heisenberg,
            Geometry::Chain,
            length,
            true,
            0.0,
            marshall_sign,
        )
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn field_h(&self) -> f64 {
        self.field_h
    }

    pub fn marshall_sign(&self) -> bool {
        self.marshall_sign
    }

    pub fn n_sites(&self) -> usize {
        match self.geometry {
            Geometry::Chain => self.length,
            Geometry::Square => self.length * self.length,
        }
    }

    /// Unordered nearest-neighbour pairs `(i, j)` with `i < j`, each once.
    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    pub fn is_bipartite(&self) -> bool {
        !self.periodic || self.length.is_multiple_of(2)
    }

    fn check_len(&self, x: &[i8]) -> Result<()> {
        if x.len() != self.n_sites() {
            return Err(VmcError::DimensionMismatch {
                expected: self.n_sites(),
                actual: x.len(),
                context: "spin configuration length",
            });
        }
        Ok(())
    }

    pub fn diagonal(&self, x: &[i8]) -> f64 {
        let zz: f64 = self
            .bonds
            .iter()
            .map(|&(i, j)| f64::from(x[i] * x[j]))
            .sum();
        match self.kind {
            ModelKind::Tfi => -zz,
            ModelKind::Heisenberg => zz,
        }
    }

    /// Visits the diagonal element and every off-diagonal coupling of row `x`.
    pub fn for_each_move(&self, x: &[i8], mut visit: impl FnMut(Move, f64)) {
        visit(Move::Diagonal, self.diagonal(x));
        match self.kind {
            ModelKind::Tfi => {
                if self.field_h != 0.0 {
                    for i in 0..x.len() {
                        visit(Move::Flip(i), -self.field_h);
                    }
                }
            }
            ModelKind::Heisenberg => {
                let amp = if self.marshall_sign { -2.0 } else { 2.0 };
                for &(i, j) in &self.bonds {
                    if x[i] != x[j] {
                        visit(Move::Exchange(i, j), amp);
                    }
                }
            }
        }
    }

    pub fn connected_elements(&self, x: &[i8]) -> Result<Vec<ConnectedElement>> {
        self.check_len(x)?;
        let mut out = Vec::with_capacity(x.len() + 1);
        self.for_each_move(x, |mv, amplitude| {
            let mut target = x.to_vec();
            mv.apply(&mut target);
            out.push(ConnectedElement { target, amplitude });
        });
        Ok(out)
    }
}

fn build_bonds(geometry: Geometry, length: usize, periodic: bool) -> Vec<(usize, usize)> {
    let mut set = BTreeSet::new();
    let mut add = |a: usize, b: usize| {
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    };
    match geometry {
        Geometry::Chain => {
            for i in 0..length {
                if i + 1 < length {
                    add(i, i + 1);
                } else if periodic {
                    add(i, 0);
                }
            }
        }
        Geometry::Square => {
            let site = |r: usize, c: usize| r * length + c;
            for r in 0..length {
                for c in 0..length {
                    if c + 1 < length {
                        add(site(r, c), site(r, c + 1));
                    } else if periodic {
                        add(site(r, c), site(r, 0));
                    }
                    if r + 1 < length {
                        add(site(r, c), site(r + 1, c));
                    } else if periodic {
                        add(site(r, c), site(0, c));
                    }
                }
            }
        }
    }
    set.into_iter().collect()
}

/// Dense `2^N × 2^N` Hamiltonian in basis-index order.
pub fn dense_hamiltonian(model: &LatticeModel) -> Result<Mat<f64>> {
    let n = model.n_sites();
    if n > MAX_ED_SITES {
        return Err(VmcError::TooLarge {
            operation: "dense Hamiltonian",
            n_sites: n,
            limit: MAX_ED_SITES,
        });
    }
    let dim = 1usize << n;
    let mut h = Mat::<f64>::zeros(dim, dim);
    for row in 0..dim {
        let x = config_from_index(row, n);
        model.for_each_move(&x, |mv, amp| {
            h[(row, mv.target_index(row))] += amp;
        });
    }
    Ok(h)
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    /// Unit-norm amplitudes in basis-index order; first nonzero entry positive.
    pub amplitudes: Vec<f64>,
}

pub fn exact_ground_state(model: &LatticeModel) -> Result<GroundState> {
    let h = dense_hamiltonian(model)?;
    let (values, vectors) = sym_eigen_desc(h.as_ref())?;
    let last = values.len() - 1;
    let mut amplitudes: Vec<f64> = (0..values.len()).map(|i| vectors[(i, last)]).collect();
    let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
    let first = amplitudes
        .iter()
        .copied()
        .find(|a| a.abs() > 1e-12 * norm)
        .unwrap_or(1.0);
    let scale = first.signum() / norm;
    amplitudes.iter_mut().for_each(|a| *a *= scale);
    Ok(GroundState {
        energy: values[last],
        amplitudes,
    })
}

/// `⟨x|H|ψ⟩ / ψ(x)`, accumulated through log-amplitude ratios.
pub fn local_energy<W: Wavefunction + ?Sized>(
    model: &LatticeModel,
    psi: &W,
    x: &[i8],
) -> Result<f64> {
    model.check_len(x)?;
    let log_x = psi.log_abs_psi(x);
    if log_x == f64::NEG_INFINITY {
        return Err(VmcError::NodeHit(x.to_vec()));
    }
    let sign_x = psi.sign(x);
    let mut total = 0.0;
    let mut target = x.to_vec();
    let mut overflow = false;
    model.for_each_move(x, |mv, amp| {
        if mv == Move::Diagonal {
            total += amp;
            return;
        }
        mv.apply(&mut target);
        let log_t = psi.log_abs_psi(&target);
        if log_t != f64::NEG_INFINITY {
            let ratio = (log_t - log_x).exp() * psi.sign(&target) * sign_x;
            if !ratio.is_finite() {
                overflow = true;
            }
            total += amp * ratio;
        }
        mv.apply(&mut target);
    });
    if overflow || !total.is_finite() {
        return Err(VmcError::NonFinite("local energy ratio"));
    }
    Ok(total)
}

/// Local energies of every basis state from a table of `log|ψ|` (and signs).
///
/// Entries where `ψ` vanishes are `NaN`; they carry zero probability.
pub fn local_energies_from_table(
    model: &LatticeModel,
    log_abs: &[f64],
    signs: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let n = model.n_sites();
    if log_abs.len() != 1usize << n {
        return Err(VmcError::DimensionMismatch {
            expected: 1 << n,
            actual: log_abs.len(),
            context: "log-amplitude table",
        });
    }
    let sign = |i: usize| signs.map_or(1.0, |s| s[i]);
    let mut out = vec![f64::NAN; log_abs.len()];
    let mut x = vec![1i8; n];
    for (idx, slot) in out.iter_mut().enumerate() {
        let log_x = log_abs[idx];
        if log_x == f64::NEG_INFINITY {
            continue;
        }
        for (j, s) in x.iter_mut().enumerate() {
            *s = if (idx >> j) & 1 == 1 { -1 } else { 1 };
        }
        let mut total = 0.0;
        model.for_each_move(&x, |mv, amp| {
            let t = mv.target_index(idx);
            if t == idx {
                total += amp;
            } else if log_abs[t] != f64::NEG_INFINITY {
                total += amp * (log_abs[t] - log_x).exp() * sign(t) * sign(idx);
            }
        });
        if !total.is_finite() {
            return Err(VmcError::NonFinite("local energy ratio"));
        }
        *slot = total;
    }
    Ok(out)
}
