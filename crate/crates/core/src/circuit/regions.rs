//! Initial-state regions of the injection patch.
//!
//! Apart from the magic qubit, every data qubit is on the *row side*
//! (prepared so that the top-row logical is fixed) or the *column side*
//! (fixing the left-column logical). The top row is always row side and the
//! left column always column side; the four methods differ in how the
//! interior is split:
//!
//! * triangles cut along the main diagonal; the diagonal itself goes to the
//!   row side for `DownTriangle` and to the column side for `RightTriangle`;
//! * `RightSquare` puts the first two lattice rows (sites `i <= 2`) on the row
//!   side and everything below on the column side; `DownSquare` is the
//!   transposed cut (sites `j <= 2` on the column side).
//!
//! "Down" methods enlarge the row side (regions I and III) and "Right"
//! methods the column side (II and IV). Qubits inside the `d1` patch are in
//! I/II, the extension in III/IV.
//!
//! In surface-code terms the row side is prepared in `|+>` and the column side
//! in `|0>`; the XZZX and ZXXZ codes are Hadamard twists of the surface code,
//! so their bases are swapped on the twisted sublattice.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::RunBasis;
use crate::error::{Error, Result};
use crate::layout::{validate_distance, CodeLayout, CodeType, QubitId};
use crate::pauli::Basis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InitMethod {
    RightTriangle,
    DownTriangle,
    RightSquare,
    DownSquare,
}

impl InitMethod {
    pub const ALL: [InitMethod; 4] =
        [InitMethod::RightTriangle, InitMethod::DownTriangle, InitMethod::RightSquare, InitMethod::DownSquare];

    pub fn name(self) -> &'static str {
        match self {
            InitMethod::RightTriangle => "right-triangle",
            InitMethod::DownTriangle => "down-triangle",
            InitMethod::RightSquare => "right-square",
            InitMethod::DownSquare => "down-square",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        InitMethod::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn is_right(self) -> bool {
        matches!(self, InitMethod::RightTriangle | InitMethod::RightSquare)
    }

    /// Image under the diagonal reflection.
    pub fn reflected(self) -> Self {
        match self {
            InitMethod::RightTriangle => InitMethod::DownTriangle,
            InitMethod::DownTriangle => InitMethod::RightTriangle,
            InitMethod::RightSquare => InitMethod::DownSquare,
            InitMethod::DownSquare => InitMethod::RightSquare,
        }
    }

    /// Whether lattice site `(i, j)` (not the magic qubit) is on the row side.
    fn row_side(self, i: i32, j: i32) -> bool {
        if i == 0 {
            return true;
        }
        if j == 0 {
            return false;
        }
        match self {
            InitMethod::RightTriangle => j > i,
            InitMethod::DownTriangle => j >= i,
            InitMethod::RightSquare => i <= 2,
            InitMethod::DownSquare => j > 2,
        }
    }
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
    IV,
    MagicQubit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InitState {
    ZeroState,
    PlusState,
    MagicProxy,
}

impl InitState {
    /// Preparation (and final measurement) basis; the magic proxy follows
    /// the run.
    pub fn basis(self, run: RunBasis) -> Basis {
        match self {
            InitState::ZeroState => Basis::Z,
            InitState::PlusState => Basis::X,
            InitState::MagicProxy => run.basis(),
        }
    }

    fn of_basis(b: Basis) -> Self {
        match b {
            Basis::Z => InitState::ZeroState,
            Basis::X => InitState::PlusState,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionAssignment {
    pub code_type: CodeType,
    pub method: InitMethod,
    pub d1: usize,
    pub d2: usize,
    pub regions: BTreeMap<QubitId, Region>,
    pub init_basis: BTreeMap<QubitId, InitState>,
}

impl RegionAssignment {
    pub fn count(&self, region: Region) -> usize {
        self.regions.values().filter(|r| **r == region).count()
    }

    pub fn basis(&self, q: QubitId, run: RunBasis) -> Option<Basis> {
        self.init_basis.get(&q).map(|s| s.basis(run))
    }
}

/// Assign every data qubit of the `d2` layout to a region and initial state.
pub fn assign_regions(layout: &CodeLayout, method: InitMethod, d1: usize, d2: usize) -> Result<RegionAssignment> {
    validate_distance(d1)?;
    validate_distance(d2)?;
    if d1 > d2 {
        return Err(Error::DistanceOrder { d1, d2 });
    }
    if layout.distance != d2 {
        return Err(Error::InconsistentLayouts(format!("layout distance {} but d2 = {d2}", layout.distance)));
    }
    let inner = 2 * d1 as i32 - 2;
    let mut regions = BTreeMap::new();
    let mut init_basis = BTreeMap::new();
    for q in layout.data_qubits() {
        let (i, j) = layout.coord(q).site();
        if q == layout.magic_qubit {
            regions.insert(q, Region::MagicQubit);
            init_basis.insert(q, InitState::MagicProxy);
            continue;
        }
        let row = method.row_side(i, j);
        let legacy = i <= inner && j <= inner;
        let region = match (row, legacy) {
            (true, true) => Region::I,
            (false, true) => Region::II,
            (true, false) => Region::III,
            (false, false) => Region::IV,
        };
        let surface_basis = if row { Basis::X } else { Basis::Z };
        let basis = if layout.code_type.twisted(i, j) { surface_basis.flip() } else { surface_basis };
        regions.insert(q, region);
        init_basis.insert(q, InitState::of_basis(basis));
    }
    Ok(RegionAssignment { code_type: layout.code_type, method, d1, d2, regions, init_basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{build_layout, Coord, Structure};

    #[test]
    fn partition_and_extension_counts() {
        let l = build_layout(CodeType::Surface, Structure::Lattice, 5).unwrap();
        for m in InitMethod::ALL {
            let r = assign_regions(&l, m, 3, 5).unwrap();
            assert_eq!(r.regions.len(), l.data_qubits().count());
            assert_eq!(r.count(Region::MagicQubit), 1);
            let d1_data = 9 + 4;
            assert_eq!(r.count(Region::I) + r.count(Region::II) + 1, d1_data);
            assert_eq!(r.count(Region::III) + r.count(Region::IV), l.data_qubits().count() - d1_data);
        }
    }

    #[test]
    fn down_methods_enlarge_row_side() {
        let l = build_layout(CodeType::Surface, Structure::Lattice, 3).unwrap();
        for m in InitMethod::ALL {
            let r = assign_regions(&l, m, 3, 3).unwrap();
            assert_eq!(r.count(Region::III) + r.count(Region::IV), 0);
            assert!(r.count(Region::I) > 0 && r.count(Region::II) > 0, "{m}");
        }
        let right = assign_regions(&l, InitMethod::RightTriangle, 3, 3).unwrap();
        let down = assign_regions(&l, InitMethod::DownTriangle, 3, 3).unwrap();
        assert!(down.count(Region::I) > right.count(Region::I));
    }

    #[test]
    fn boundary_rows_forced() {
        let l = build_layout(CodeType::Surface, Structure::Lattice, 3).unwrap();
        let r = assign_regions(&l, InitMethod::DownTriangle, 3, 3).unwrap();
        for q in l.data_qubits() {
            let (i, j) = l.coord(q).site();
            let s = r.init_basis[&q];
            if (i, j) == (0, 0) {
                assert_eq!(s, InitState::MagicProxy);
            } else if i == 0 {
                assert_eq!(s, InitState::PlusState);
            } else if j == 0 {
                assert_eq!(s, InitState::ZeroState);
            }
        }
        let diag = l.qubit_at(Coord::from_site(2, 2)).unwrap();
        assert_eq!(r.regions[&diag], Region::I);
    }

    #[test]
    fn zxxz_swaps_bases_on_even_sublattice() {
        let s = build_layout(CodeType::Surface, Structure::Lattice, 3).unwrap();
        let z = build_layout(CodeType::ZxxzType, Structure::Lattice, 3).unwrap();
        let rs = assign_regions(&s, InitMethod::RightSquare, 3, 3).unwrap();
        let rz = assign_regions(&z, InitMethod::RightSquare, 3, 3).unwrap();
        for q in s.data_qubits() {
            let (i, j) = s.coord(q).site();
            if q == s.magic_qubit {
                continue;
            }
            let flipped = rs.init_basis[&q] != rz.init_basis[&q];
            assert_eq!(flipped, i % 2 == 0 && j % 2 == 0);
        }
    }

    #[test]
    fn rejects_bad_order() {
        let l = build_layout(CodeType::Surface, Structure::Lattice, 3).unwrap();
        assert_eq!(assign_regions(&l, InitMethod::DownSquare, 5, 3), Err(Error::DistanceOrder { d1: 5, d2: 3 }));
    }
}
