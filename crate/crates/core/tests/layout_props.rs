use std::collections::{BTreeMap, BTreeSet};

use hexinject::layout::{build_layout, diagonal_reflect, dump_layout, isomorphism, CodeLayout, QubitId, QubitRole};
use hexinject::pauli::{Basis, Pauli};
use hexinject::{CodeType, Structure};
use proptest::prelude::*;

fn code() -> impl Strategy<Value = CodeType> {
    prop::sample::select(CodeType::ALL.to_vec())
}
fn structure() -> impl Strategy<Value = Structure> {
    prop::sample::select(Structure::ALL.to_vec())
}
fn distance() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![3usize, 5, 7, 9])
}

// Independent symplectic check: count positions where both operators act
// with different non-identity Paulis.
fn overlap_parity(a: &BTreeMap<QubitId, Pauli>, b: &BTreeMap<QubitId, Pauli>) -> bool {
    let sym = |p: Pauli| match p {
        Pauli::I => (0u8, 0u8),
        Pauli::X => (1, 0),
        Pauli::Z => (0, 1),
        Pauli::Y => (1, 1),
    };
    a.iter()
        .filter_map(|(q, &p)| b.get(q).map(|&r| (sym(p), sym(r))))
        .fold(false, |acc, ((ax, az), (bx, bz))| acc ^ ((ax & bz ^ az & bx) == 1))
}

fn ops(l: &CodeLayout) -> (Vec<BTreeMap<QubitId, Pauli>>, BTreeMap<QubitId, Pauli>, BTreeMap<QubitId, Pauli>) {
    let stabs = l.stabilizers.iter().map(|s| l.stabilizer_pauli(s)).collect();
    (stabs, l.logical_pauli(&l.logical_x), l.logical_pauli(&l.logical_z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stabilizers_and_logicals_commute(c in code(), s in structure(), d in distance()) {
        let l = build_layout(c, s, d).unwrap();
        let (stabs, lx, lz) = ops(&l);
        for a in &stabs {
            for b in &stabs {
                prop_assert!(!overlap_parity(a, b));
            }
            prop_assert!(!overlap_parity(a, &lx));
            prop_assert!(!overlap_parity(a, &lz));
        }
        prop_assert!(overlap_parity(&lx, &lz));
    }

    #[test]
    fn qubit_counts(c in code(), s in structure(), d in distance()) {
        let l = build_layout(c, s, d).unwrap();
        prop_assert_eq!(l.data_qubits().count(), d * d + (d - 1) * (d - 1));
        prop_assert_eq!(l.stabilizers.len(), 2 * d * (d - 1));
        prop_assert_eq!(l.syndrome_qubits().count(), 2 * d * (d - 1));
        match s {
            Structure::Lattice => prop_assert_eq!(l.flag_qubits().count(), 0),
            Structure::HeavyHexagon => prop_assert!(l.flag_qubits().count() > 0),
        }
        // every qubit has a distinct coordinate
        let coords: BTreeSet<_> = l.qubits.iter().map(|q| q.coord).collect();
        prop_assert_eq!(coords.len(), l.qubits.len());
    }

    #[test]
    fn connectivity_degree(c in code(), s in structure(), d in distance()) {
        let l = build_layout(c, s, d).unwrap();
        let mut deg: BTreeMap<QubitId, BTreeSet<QubitId>> = BTreeMap::new();
        for st in &l.stabilizers {
            for leg in &st.legs {
                let mut path = vec![st.syndrome];
                path.extend(leg.route.iter().copied());
                path.push(leg.data);
                for w in path.windows(2) {
                    deg.entry(w[0]).or_default().insert(w[1]);
                    deg.entry(w[1]).or_default().insert(w[0]);
                }
            }
        }
        let max = deg.values().map(|n| n.len()).max().unwrap();
        let bound = match s { Structure::Lattice => 4, Structure::HeavyHexagon => 3 };
        prop_assert!(max <= bound, "degree {max}");
        prop_assert_eq!(max, l.max_degree());
        if s == Structure::HeavyHexagon {
            for q in l.flag_qubits() {
                prop_assert!(deg[&q].len() <= 3);
            }
        }
    }

    #[test]
    fn logicals_have_weight_d_and_meet_at_magic(c in code(), s in structure(), d in distance()) {
        let l = build_layout(c, s, d).unwrap();
        let x: BTreeSet<_> = l.logical_x.support.iter().copied().collect();
        let z: BTreeSet<_> = l.logical_z.support.iter().copied().collect();
        prop_assert_eq!(x.len(), d);
        prop_assert_eq!(z.len(), d);
        let meet: Vec<_> = x.intersection(&z).copied().collect();
        prop_assert_eq!(meet, vec![l.magic_qubit]);
        prop_assert_eq!(l.coord(l.magic_qubit).site(), (0, 0));
        for q in x.iter().chain(&z) {
            prop_assert_eq!(l.role(*q), QubitRole::Data);
        }
        prop_assert_eq!(l.logical(Basis::X).support.len(), d);
    }

    #[test]
    fn reflection_is_an_involution(c in code(), d in distance()) {
        let l = build_layout(c, Structure::Lattice, d).unwrap();
        let twice = diagonal_reflect(&diagonal_reflect(&l));
        prop_assert!(isomorphism(&l, &twice).is_some());
        let once = diagonal_reflect(&l);
        let built = build_layout(c.reflected(), Structure::Lattice, d).unwrap();
        if c == CodeType::Surface {
            // X and Z checks trade places under the reflection
            let leg_paulis = |l: &CodeLayout| -> BTreeMap<_, Basis> {
                l.stabilizers.iter().flat_map(|s| s.legs.iter().map(move |g| ((l.coord(s.syndrome), l.coord(g.data)), g.pauli))).collect()
            };
            let (a, b) = (leg_paulis(&once), leg_paulis(&built));
            prop_assert_eq!(a.len(), b.len());
            for (k, p) in &a {
                prop_assert_eq!(b[k], p.flip());
            }
        } else {
            prop_assert!(isomorphism(&once, &built).is_some(), "{c} reflected");
        }
    }

    #[test]
    fn dump_is_deterministic(c in code(), s in structure(), d in distance()) {
        let a = build_layout(c, s, d).unwrap();
        let b = build_layout(c, s, d).unwrap();
        prop_assert_eq!(dump_layout(&a), dump_layout(&b));
    }
}

#[test]
fn zxxz_x_logical_is_left_column() {
    for d in [3, 5, 7] {
        let l = build_layout(CodeType::ZxxzType, Structure::Lattice, d).unwrap();
        let cols: BTreeSet<i32> = l.logical_x.support.iter().map(|q| l.coord(*q).site().1).collect();
        assert_eq!(cols, BTreeSet::from([0]), "d={d}");
        let rows: BTreeSet<i32> = l.logical_z.support.iter().map(|q| l.coord(*q).site().0).collect();
        assert_eq!(rows, BTreeSet::from([0]), "d={d}");
    }
}

#[test]
fn xzzx_and_zxxz_are_reflections() {
    for d in [3, 5] {
        let x = build_layout(CodeType::XzzxType, Structure::Lattice, d).unwrap();
        let z = build_layout(CodeType::ZxxzType, Structure::Lattice, d).unwrap();
        assert!(isomorphism(&diagonal_reflect(&x), &z).is_some());
        assert!(isomorphism(&x, &z).is_none());
    }
}

#[test]
fn bad_distances_are_rejected() {
    for d in [0, 1, 2, 4, 10] {
        assert!(build_layout(CodeType::Surface, Structure::Lattice, d).is_err(), "d={d}");
    }
}

#[test]
fn d3_surface_example() {
    let l = build_layout(CodeType::Surface, Structure::Lattice, 3).unwrap();
    assert_eq!(l.qubits.len(), 25);
    // every weight-3 check sits on the boundary, weight-4 checks inside
    let weights: Vec<usize> = l.stabilizers.iter().map(|s| s.legs.len()).collect();
    assert_eq!(weights.iter().filter(|&&w| w == 3).count(), 8);
    assert_eq!(weights.iter().filter(|&&w| w == 4).count(), 4);
}
