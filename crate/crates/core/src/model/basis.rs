//! Enumeration of the truncated Hilbert space.
//!
//! A basis state is written `(atom_L, n1, n2 | atom_R, n3, n4)`: the left
//! atom, the photon numbers of the two left-cavity modes (mode 1 propagates
//! toward the right system, mode 2 toward detector b), then the same three
//! slots for the right system (mode 3 toward detector a, mode 4 toward the
//! left system).

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use crate::{Error, Result};

/// Two-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomState {
    Ground,
    Excited,
}

impl AtomState {
    fn symbol(self) -> char {
        match self {
            AtomState::Ground => 'g',
            AtomState::Excited => 'e',
        }
    }

    fn excitations(self) -> u8 {
        match self {
            AtomState::Ground => 0,
            AtomState::Excited => 1,
        }
    }
}

/// One of the four intra-cavity modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    A1,
    A2,
    A3,
    A4,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::A1, Mode::A2, Mode::A3, Mode::A4];
}

/// Left or right atom-cavity system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// A single atom ⊗ Fock configuration of the two systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub atom_l: AtomState,
    pub n1: u8,
    pub n2: u8,
    pub atom_r: AtomState,
    pub n3: u8,
    pub n4: u8,
}

impl BasisState {
    pub fn new(atom_l: AtomState, n1: u8, n2: u8, atom_r: AtomState, n3: u8, n4: u8) -> Self {
        Self { atom_l, n1, n2, atom_r, n3, n4 }
    }

    /// Ground state of everything.
    pub fn vacuum() -> Self {
        Self::new(AtomState::Ground, 0, 0, AtomState::Ground, 0, 0)
    }

    /// Both atoms excited, all modes empty: the initial state of every run.
    pub fn both_atoms_excited() -> Self {
        Self::new(AtomState::Excited, 0, 0, AtomState::Excited, 0, 0)
    }

    /// Total excitation number (atomic + photonic).
    pub fn excitations(&self) -> u8 {
        self.atom_l.excitations() + self.atom_r.excitations() + self.n1 + self.n2 + self.n3 + self.n4
    }

    pub fn photon_count(&self, mode: Mode) -> u8 {
        match mode {
            Mode::A1 => self.n1,
            Mode::A2 => self.n2,
            Mode::A3 => self.n3,
            Mode::A4 => self.n4,
        }
    }

    pub fn with_photon_count(mut self, mode: Mode, n: u8) -> Self {
        match mode {
            Mode::A1 => self.n1 = n,
            Mode::A2 => self.n2 = n,
            Mode::A3 => self.n3 = n,
            Mode::A4 => self.n4 = n,
        }
        self
    }

    pub fn atom(&self, side: Side) -> AtomState {
        match side {
            Side::Left => self.atom_l,
            Side::Right => self.atom_r,
        }
    }

    pub fn with_atom(mut self, side: Side, a: AtomState) -> Self {
        match side {
            Side::Left => self.atom_l = a,
            Side::Right => self.atom_r = a,
        }
        self
    }

    /// Sort key implementing the documented ordering: excitation sector
    /// first, then lexicographic in (atom_L, n1, n2, atom_R, n3, n4) with
    /// g < e.
    fn sort_key(&self) -> (u8, u8, u8, u8, u8, u8, u8) {
        (
            self.excitations(),
            self.atom_l.excitations(),
            self.n1,
            self.n2,
            self.atom_r.excitations(),
            self.n3,
            self.n4,
        )
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}|{}{}{}",
            self.atom_l.symbol(),
            self.n1,
            self.n2,
            self.atom_r.symbol(),
            self.n3,
            self.n4
        )
    }
}

/// The truncated Hilbert space: all configurations with at most
/// `max_excitations` total excitations, sector-sorted.
#[derive(Debug, Clone)]
pub struct HilbertSpace {
    max_excitations: u8,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
    sectors: Vec<Range<usize>>,
}

impl HilbertSpace {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn max_excitations(&self) -> u8 {
        self.max_excitations
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> BasisState {
        self.states[index]
    }

    /// Contiguous index of a basis state; `None` if it is not in the space.
    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Index range of the given excitation-number sector.
    pub fn sector(&self, excitations: u8) -> Range<usize> {
        self.sectors[excitations as usize].clone()
    }

    pub fn sector_sizes(&self) -> Vec<usize> {
        self.sectors.iter().map(|r| r.len()).collect()
    }
}

/// Enumerate all basis states with at most `max_excitations` excitations.
///
/// The ordering is deterministic (sector, then lexicographic with g < e),
/// so indices are stable across calls and across processes.
pub fn enumerate_basis(max_excitations: u8) -> Result<HilbertSpace> {
    if !(1..=2).contains(&max_excitations) {
        return Err(Error::InvalidParams(format!(
            "max_excitations must be 1 or 2, got {max_excitations}"
        )));
    }
    let atoms = [AtomState::Ground, AtomState::Excited];
    let mut states = Vec::new();
    for &atom_l in &atoms {
        for n1 in 0..=max_excitations {
            for n2 in 0..=max_excitations {
                for &atom_r in &atoms {
                    for n3 in 0..=max_excitations {
                        for n4 in 0..=max_excitations {
                            let s = BasisState::new(atom_l, n1, n2, atom_r, n3, n4);
                            if s.excitations() <= max_excitations {
                                states.push(s);
                            }
                        }
                    }
                }
            }
        }
    }
    states.sort_by_key(|s| s.sort_key());

    let mut sectors = Vec::with_capacity(max_excitations as usize + 1);
    let mut start = 0;
    for exc in 0..=max_excitations {
        let end = start + states.iter().filter(|s| s.excitations() == exc).count();
        sectors.push(start..end);
        start = end;
    }

    let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    Ok(HilbertSpace { max_excitations, states, index, sectors })
}
