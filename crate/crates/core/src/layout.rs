//! Code patches: qubit placement, stabilizer legs, flag routing and logical
//! operators for the surface, XZZX-type and ZXXZ-type codes on the lattice
//! and heavy-hexagon structures.
//!
//! Patches are planar with `d` data qubits along every boundary. Data and
//! syndrome qubits sit on a `(2d-1) x (2d-1)` grid of lattice sites; a site
//! `(i, j)` holds a data qubit when `i + j` is even and a syndrome otherwise,
//! so every syndrome sees its data neighbours to the north, west, east and
//! south. Coordinates are stored doubled, `Coord { row: 2i, col: 2j }`, which
//! leaves odd coordinates free for flag qubits.
//!
//! On the heavy-hexagon structure each syndrome owns a *hub* flag (doubled
//! coordinate `(2i+1, 2j+1)`) that serves both of its vertical legs, and each
//! data qubit owns a *bridge* flag (`(2i-1, 2j-1)`) shared by the stabilizers
//! directly above and below it. A vertical leg is routed `syndrome -> hub ->
//! bridge -> data`; horizontal legs couple directly. Every qubit then has at
//! most three partners.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Basis, Pauli};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QubitId(pub usize);

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Doubled grid coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub row: i32,
    pub col: i32,
}

impl Coord {
    pub const fn new(row: i32, col: i32) -> Self {
        Coord { row, col }
    }

    /// Lattice site `(i, j)` of a data/syndrome coordinate.
    pub fn site(self) -> (i32, i32) {
        (self.row / 2, self.col / 2)
    }

    pub fn from_site(i: i32, j: i32) -> Self {
        Coord::new(2 * i, 2 * j)
    }

    pub fn transpose(self) -> Self {
        Coord::new(self.col, self.row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QubitRole {
    Data,
    SyndromeX,
    SyndromeZ,
    SyndromeMixed,
    Flag,
}

impl QubitRole {
    pub fn is_syndrome(self) -> bool {
        matches!(self, QubitRole::SyndromeX | QubitRole::SyndromeZ | QubitRole::SyndromeMixed)
    }

    pub fn name(self) -> &'static str {
        match self {
            QubitRole::Data => "data",
            QubitRole::SyndromeX => "syndrome-x",
            QubitRole::SyndromeZ => "syndrome-z",
            QubitRole::SyndromeMixed => "syndrome-mixed",
            QubitRole::Flag => "flag",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CodeType {
    Surface,
    XzzxType,
    ZxxzType,
}

impl CodeType {
    pub const ALL: [CodeType; 3] = [CodeType::Surface, CodeType::XzzxType, CodeType::ZxxzType];

    pub fn name(self) -> &'static str {
        match self {
            CodeType::Surface => "surface",
            CodeType::XzzxType => "xzzx",
            CodeType::ZxxzType => "zxxz",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "surface" => Some(CodeType::Surface),
            "xzzx" => Some(CodeType::XzzxType),
            "zxxz" => Some(CodeType::ZxxzType),
            _ => None,
        }
    }

    /// Image under reflection about the top-left to bottom-right diagonal.
    pub fn reflected(self) -> Self {
        match self {
            CodeType::Surface => CodeType::Surface,
            CodeType::XzzxType => CodeType::ZxxzType,
            CodeType::ZxxzType => CodeType::XzzxType,
        }
    }

    /// Whether a data qubit at site `(i, j)` carries a Hadamard twist relative
    /// to the surface code (XZZX twists the odd-odd sublattice, ZXXZ the
    /// even-even one).
    pub fn twisted(self, i: i32, j: i32) -> bool {
        match self {
            CodeType::Surface => false,
            CodeType::XzzxType => i % 2 == 1 && j % 2 == 1,
            CodeType::ZxxzType => i % 2 == 0 && j % 2 == 0,
        }
    }
}

impl fmt::Display for CodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Structure {
    Lattice,
    HeavyHexagon,
}

impl Structure {
    pub const ALL: [Structure; 2] = [Structure::Lattice, Structure::HeavyHexagon];

    pub fn name(self) -> &'static str {
        match self {
            Structure::Lattice => "lattice",
            Structure::HeavyHexagon => "heavy-hex",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lattice" => Some(Structure::Lattice),
            "heavy-hex" | "heavy-hexagon" => Some(Structure::HeavyHexagon),
            _ => None,
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    N,
    W,
    E,
    S,
}

impl Direction {
    pub fn offset(self) -> (i32, i32) {
        match self {
            Direction::N => (-1, 0),
            Direction::W => (0, -1),
            Direction::E => (0, 1),
            Direction::S => (1, 0),
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Direction::N | Direction::S)
    }

    pub fn reflected(self) -> Self {
        match self {
            Direction::N => Direction::W,
            Direction::W => Direction::N,
            Direction::E => Direction::S,
            Direction::S => Direction::E,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Direction::N => 'N',
            Direction::W => 'W',
            Direction::E => 'E',
            Direction::S => 'S',
        }
    }

    pub fn parse(c: char) -> Option<Self> {
        match c {
            'N' => Some(Direction::N),
            'W' => Some(Direction::W),
            'E' => Some(Direction::E),
            'S' => Some(Direction::S),
            _ => None,
        }
    }
}

/// One syndrome-to-data coupling. `route` lists the flags between syndrome
/// and data, nearest to the syndrome first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Leg {
    pub direction: Direction,
    pub data: QubitId,
    pub pauli: Basis,
    pub route: Vec<QubitId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StabilizerSpec {
    pub syndrome: QubitId,
    /// Legs in schedule order.
    pub legs: Vec<Leg>,
}

impl StabilizerSpec {
    pub fn pauli_on(&self, q: QubitId) -> Option<Basis> {
        self.legs.iter().find(|l| l.data == q).map(|l| l.pauli)
    }

    pub fn is_uniform(&self, basis: Basis) -> bool {
        self.legs.iter().all(|l| l.pauli == basis)
    }

    pub fn has_routes(&self) -> bool {
        self.legs.iter().any(|l| !l.route.is_empty())
    }

    /// Hub flag shared by the routed legs, if any.
    pub fn hub(&self) -> Option<QubitId> {
        self.legs.iter().find_map(|l| l.route.first().copied())
    }

    pub fn data_support(&self) -> BTreeSet<QubitId> {
        self.legs.iter().map(|l| l.data).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalOperatorSpec {
    pub pauli: Basis,
    pub support: Vec<QubitId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qubit {
    pub id: QubitId,
    pub coord: Coord,
    pub role: QubitRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeLayout {
    pub code_type: CodeType,
    pub structure: Structure,
    pub distance: usize,
    pub qubits: Vec<Qubit>,
    pub stabilizers: Vec<StabilizerSpec>,
    pub logical_x: LogicalOperatorSpec,
    pub logical_z: LogicalOperatorSpec,
    pub magic_qubit: QubitId,
    #[serde(skip)]
    index: HashMap<Coord, QubitId>,
}

pub fn validate_distance(distance: usize) -> Result<()> {
    if distance < 3 || distance % 2 == 0 {
        return Err(Error::InvalidDistance(distance));
    }
    Ok(())
}

/// Pauli a stabilizer at site `(i, j)` applies on its leg in `dir`.
fn leg_pauli(code: CodeType, i: i32, dir: Direction) -> Basis {
    match code {
        // X checks on rows with odd i, Z checks on even rows.
        CodeType::Surface => {
            if i % 2 == 1 {
                Basis::X
            } else {
                Basis::Z
            }
        }
        CodeType::XzzxType => {
            if dir.is_vertical() {
                Basis::X
            } else {
                Basis::Z
            }
        }
        CodeType::ZxxzType => {
            if dir.is_vertical() {
                Basis::Z
            } else {
                Basis::X
            }
        }
    }
}

/// Schedule order of legs: the two legs facing the magic corner first, the
/// leg on the code's X axis leading, mirrored for the far pair.
pub(crate) fn leg_order(code: CodeType) -> [Direction; 4] {
    match code {
        CodeType::Surface | CodeType::XzzxType => [Direction::N, Direction::W, Direction::E, Direction::S],
        CodeType::ZxxzType => [Direction::W, Direction::N, Direction::S, Direction::E],
    }
}

fn hub_coord(syndrome: Coord) -> Coord {
    Coord::new(syndrome.row + 1, syndrome.col + 1)
}

fn bridge_coord(data: Coord) -> Coord {
    Coord::new(data.row - 1, data.col - 1)
}

pub fn build_layout(code_type: CodeType, structure: Structure, distance: usize) -> Result<CodeLayout> {
    validate_distance(distance)?;
    let n = 2 * distance as i32 - 1;
    let in_grid = |i: i32, j: i32| (0..n).contains(&i) && (0..n).contains(&j);
    let heavy = structure == Structure::HeavyHexagon;

    let mut roles: BTreeMap<Coord, QubitRole> = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            let c = Coord::from_site(i, j);
            if (i + j) % 2 == 0 {
                roles.insert(c, QubitRole::Data);
                continue;
            }
            let role = match code_type {
                CodeType::Surface if i % 2 == 1 => QubitRole::SyndromeX,
                CodeType::Surface => QubitRole::SyndromeZ,
                _ => QubitRole::SyndromeMixed,
            };
            roles.insert(c, role);
            if heavy {
                roles.insert(hub_coord(c), QubitRole::Flag);
                for dir in [Direction::N, Direction::S] {
                    let (di, dj) = dir.offset();
                    if in_grid(i + di, j + dj) {
                        roles.insert(bridge_coord(Coord::from_site(i + di, j + dj)), QubitRole::Flag);
                    }
                }
            }
        }
    }

    let qubits: Vec<Qubit> = roles
        .iter()
        .enumerate()
        .map(|(k, (&coord, &role))| Qubit { id: QubitId(k), coord, role })
        .collect();
    let index: HashMap<Coord, QubitId> = qubits.iter().map(|q| (q.coord, q.id)).collect();

    let mut stabilizers = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if (i + j) % 2 == 0 {
                continue;
            }
            let sc = Coord::from_site(i, j);
            let mut legs = Vec::new();
            for dir in leg_order(code_type) {
                let (di, dj) = dir.offset();
                if !in_grid(i + di, j + dj) {
                    continue;
                }
                let dc = Coord::from_site(i + di, j + dj);
                let route = if heavy && dir.is_vertical() {
                    vec![index[&hub_coord(sc)], index[&bridge_coord(dc)]]
                } else {
                    Vec::new()
                };
                legs.push(Leg { direction: dir, data: index[&dc], pauli: leg_pauli(code_type, i, dir), route });
            }
            stabilizers.push(StabilizerSpec { syndrome: index[&sc], legs });
        }
    }

    let column: Vec<QubitId> = (0..distance as i32).map(|r| index[&Coord::from_site(2 * r, 0)]).collect();
    let row: Vec<QubitId> = (0..distance as i32).map(|c| index[&Coord::from_site(0, 2 * c)]).collect();
    let (logical_x, logical_z) = match code_type {
        CodeType::Surface | CodeType::XzzxType => (
            LogicalOperatorSpec { pauli: Basis::X, support: row },
            LogicalOperatorSpec { pauli: Basis::Z, support: column },
        ),
        CodeType::ZxxzType => (
            LogicalOperatorSpec { pauli: Basis::X, support: column },
            LogicalOperatorSpec { pauli: Basis::Z, support: row },
        ),
    };

    Ok(CodeLayout {
        code_type,
        structure,
        distance,
        magic_qubit: index[&Coord::new(0, 0)],
        qubits,
        stabilizers,
        logical_x,
        logical_z,
        index,
    })
}

/// `(Z_L, X_L)` of the layout.
pub fn logical_supports(layout: &CodeLayout) -> (LogicalOperatorSpec, LogicalOperatorSpec) {
    (layout.logical_z.clone(), layout.logical_x.clone())
}

/// Reflect the layout about the top-left to bottom-right diagonal. Qubit ids
/// are reassigned in coordinate order, XZZX and ZXXZ labels swap, and leg
/// directions follow the reflection.
pub fn diagonal_reflect(layout: &CodeLayout) -> CodeLayout {
    let mut by_coord: BTreeMap<Coord, (QubitId, QubitRole)> = BTreeMap::new();
    for q in &layout.qubits {
        by_coord.insert(q.coord.transpose(), (q.id, q.role));
    }
    let mut remap = vec![QubitId(0); layout.qubits.len()];
    let mut qubits = Vec::with_capacity(layout.qubits.len());
    for (k, (coord, (old, role))) in by_coord.into_iter().enumerate() {
        remap[old.0] = QubitId(k);
        qubits.push(Qubit { id: QubitId(k), coord, role });
    }
    let m = |q: QubitId| remap[q.0];
    let stabilizers = layout
        .stabilizers
        .iter()
        .map(|s| StabilizerSpec {
            syndrome: m(s.syndrome),
            legs: s
                .legs
                .iter()
                .map(|l| Leg {
                    direction: l.direction.reflected(),
                    data: m(l.data),
                    pauli: l.pauli,
                    route: l.route.iter().map(|&f| m(f)).collect(),
                })
                .collect(),
        })
        .collect();
    let map_logical = |l: &LogicalOperatorSpec| LogicalOperatorSpec {
        pauli: l.pauli,
        support: l.support.iter().map(|&q| m(q)).collect(),
    };
    let index = qubits.iter().map(|q| (q.coord, q.id)).collect();
    CodeLayout {
        code_type: layout.code_type.reflected(),
        structure: layout.structure,
        distance: layout.distance,
        logical_x: map_logical(&layout.logical_x),
        logical_z: map_logical(&layout.logical_z),
        magic_qubit: m(layout.magic_qubit),
        qubits,
        stabilizers,
        index,
    }
}

impl CodeLayout {
    pub fn qubit(&self, id: QubitId) -> &Qubit {
        &self.qubits[id.0]
    }

    pub fn qubit_at(&self, coord: Coord) -> Option<QubitId> {
        if self.index.is_empty() {
            return self.qubits.iter().find(|q| q.coord == coord).map(|q| q.id);
        }
        self.index.get(&coord).copied()
    }

    pub fn coord(&self, id: QubitId) -> Coord {
        self.qubits[id.0].coord
    }

    pub fn role(&self, id: QubitId) -> QubitRole {
        self.qubits[id.0].role
    }

    pub fn data_qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.qubits.iter().filter(|q| q.role == QubitRole::Data).map(|q| q.id)
    }

    pub fn flag_qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.qubits.iter().filter(|q| q.role == QubitRole::Flag).map(|q| q.id)
    }

    pub fn syndrome_qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.qubits.iter().filter(|q| q.role.is_syndrome()).map(|q| q.id)
    }

    pub fn logical(&self, basis: Basis) -> &LogicalOperatorSpec {
        match basis {
            Basis::X => &self.logical_x,
            Basis::Z => &self.logical_z,
        }
    }

    /// Distinct two-qubit interaction partners of every qubit, as generated by
    /// the leg routes.
    pub fn interaction_graph(&self) -> Vec<BTreeSet<QubitId>> {
        let mut adj = vec![BTreeSet::new(); self.qubits.len()];
        let mut link = |a: QubitId, b: QubitId| {
            adj[a.0].insert(b);
            adj[b.0].insert(a);
        };
        for s in &self.stabilizers {
            for leg in &s.legs {
                let mut prev = s.syndrome;
                for &f in &leg.route {
                    link(prev, f);
                    prev = f;
                }
                link(prev, leg.data);
            }
        }
        adj
    }

    pub fn max_degree(&self) -> usize {
        self.interaction_graph().iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    /// Pauli operator of a stabilizer as a map from data qubit to Pauli.
    pub fn stabilizer_pauli(&self, s: &StabilizerSpec) -> BTreeMap<QubitId, Pauli> {
        s.legs.iter().map(|l| (l.data, l.pauli.as_pauli())).collect()
    }

    pub fn logical_pauli(&self, l: &LogicalOperatorSpec) -> BTreeMap<QubitId, Pauli> {
        l.support.iter().map(|&q| (q, l.pauli.as_pauli())).collect()
    }
}

/// Symplectic commutation of two sparse Pauli operators.
pub fn commutes(a: &BTreeMap<QubitId, Pauli>, b: &BTreeMap<QubitId, Pauli>) -> bool {
    let anti = a.iter().filter(|(q, p)| b.get(q).is_some_and(|o| p.anticommutes(*o))).count();
    anti % 2 == 0
}

/// Find the coordinate-preserving relabeling that maps `a` onto `b`,
/// returning `perm[a_id] = b_id` when the layouts agree on roles,
/// stabilizer legs (in order), routes, logical operators and magic qubit.
pub fn isomorphism(a: &CodeLayout, b: &CodeLayout) -> Option<Vec<QubitId>> {
    if a.qubits.len() != b.qubits.len() || a.stabilizers.len() != b.stabilizers.len() {
        return None;
    }
    let mut perm = vec![QubitId(0); a.qubits.len()];
    for q in &a.qubits {
        let target = b.qubit_at(q.coord)?;
        if b.role(target) != q.role {
            return None;
        }
        perm[q.id.0] = target;
    }
    let m = |q: QubitId| perm[q.0];
    let b_stabs: HashMap<QubitId, &StabilizerSpec> = b.stabilizers.iter().map(|s| (s.syndrome, s)).collect();
    for s in &a.stabilizers {
        let t = b_stabs.get(&m(s.syndrome))?;
        if t.legs.len() != s.legs.len() {
            return None;
        }
        for (l, k) in s.legs.iter().zip(&t.legs) {
            let route: Vec<QubitId> = l.route.iter().map(|&f| m(f)).collect();
            if m(l.data) != k.data || l.pauli != k.pauli || l.direction != k.direction || route != k.route {
                return None;
            }
        }
    }
    let same_logical = |x: &LogicalOperatorSpec, y: &LogicalOperatorSpec| {
        let xs: BTreeSet<QubitId> = x.support.iter().map(|&q| m(q)).collect();
        let ys: BTreeSet<QubitId> = y.support.iter().copied().collect();
        x.pauli == y.pauli && xs == ys
    };
    if !same_logical(&a.logical_x, &b.logical_x) || !same_logical(&a.logical_z, &b.logical_z) {
        return None;
    }
    (m(a.magic_qubit) == b.magic_qubit).then_some(perm)
}

/// Plain-text dump: qubits, then stabilizers, then logical operators.
pub fn dump_layout(layout: &CodeLayout) -> String {
    let mut out = String::new();
    for q in &layout.qubits {
        let _ = writeln!(out, "{} {} {} {}", q.id, q.role.name(), q.coord.row, q.coord.col);
    }
    let mut stabs: Vec<&StabilizerSpec> = layout.stabilizers.iter().collect();
    stabs.sort_by_key(|s| s.syndrome);
    for s in stabs {
        let _ = write!(out, "S {}", s.syndrome);
        for l in &s.legs {
            let route: Vec<String> = l.route.iter().map(|f| f.to_string()).collect();
            let _ = write!(out, " {}:{}:{}:{}", l.direction.symbol(), l.data, l.pauli, route.join(","));
        }
        out.push('\n');
    }
    for (name, l) in [("LX", &layout.logical_x), ("LZ", &layout.logical_z)] {
        let mut support = l.support.clone();
        support.sort();
        let ids: Vec<String> = support.iter().map(|q| q.to_string()).collect();
        let _ = writeln!(out, "{} {} {}", name, l.pauli, ids.join(" "));
    }
    out
}
