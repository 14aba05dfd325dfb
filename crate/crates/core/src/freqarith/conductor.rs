//! Conductors of the integer ladders `{k·k(n) : k ∈ Z₊^d}`.
//!
//! The conductor is the least `N₀ ≥ 0` such that every `N ≥ N₀` is of the
//! form `k′·k = σN` with `k′ ∈ Z₊^d`. For two coprime positive generators
//! `a, b` this is the classical Frobenius number plus one, `ab − a − b + 1`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use num_integer::Integer;

use crate::error::{Error, Result};

/// Largest residue table the positive-sign Dijkstra is allowed to build.
const MAX_RESIDUES: u64 = 10_000_000;

pub fn conductor(k: &[i64], sigma: i8) -> Result<u64> {
    if sigma != 1 && sigma != -1 {
        return Err(Error::Domain(format!("sigma must be ±1, got {sigma}")));
    }
    let signed: Vec<i64> = k
        .iter()
        .filter(|&&x| x != 0)
        .map(|&x| x * i64::from(sigma))
        .collect();
    if signed.is_empty() {
        return Err(Error::Domain("conductor of the zero vector".into()));
    }
    let g = signed.iter().fold(0i64, |acc, &x| acc.gcd(&x));
    if g != 1 {
        return Err(Error::Domain(format!(
            "entries of {k:?} are not relatively prime (gcd {g})"
        )));
    }
    let positive: Vec<u64> = signed.iter().filter(|&&x| x > 0).map(|&x| x as u64).collect();
    let has_negative = signed.iter().any(|&x| x < 0);
    match (positive.is_empty(), has_negative) {
        (true, _) => Err(Error::Domain(format!(
            "no conductor: every entry of {k:?} has sign opposite to σ = {sigma}"
        ))),
        (false, false) => semigroup_conductor(&positive),
        (false, true) => mixed_sign_conductor(&signed).map(|_| 0),
    }
}

/// Conductor of the numerical semigroup generated by coprime positive
/// integers, via shortest paths over residues modulo the smallest generator
/// (the Apéry set).
fn semigroup_conductor(gens: &[u64]) -> Result<u64> {
    let a = *gens.iter().min().expect("nonempty generators");
    if a > MAX_RESIDUES {
        return Err(Error::Resource(format!(
            "residue table of size {a} exceeds {MAX_RESIDUES}"
        )));
    }
    let a_us = a as usize;
    let mut dist = vec![u64::MAX; a_us];
    dist[0] = 0;
    let mut heap = BinaryHeap::from([Reverse((0u64, 0usize))]);
    while let Some(Reverse((d, r))) = heap.pop() {
        if d > dist[r] {
            continue;
        }
        for &g in gens {
            let nd = d + g;
            let nr = (r + (g % a) as usize) % a_us;
            if nd < dist[nr] {
                dist[nr] = nd;
                heap.push(Reverse((nd, nr)));
            }
        }
    }
    let largest = *dist.iter().max().expect("nonempty table");
    // Frobenius number is largest − a; conductor is one more.
    Ok(largest + 1 - a)
}

/// Witness `k′ ≥ 0` with `k′·s = 1` found by breadth-first search over
/// partial sums. Any word reaching 1 can be reordered so that partial sums
/// stay in `(−max|s|, max|s|]`, so the search space is finite. Multiples of
/// the witness certify that every `N ≥ 0` is reachable.
pub fn mixed_sign_conductor(s: &[i64]) -> Result<Vec<u64>> {
    let max = s.iter().map(|x| x.abs()).max().unwrap_or(0);
    let cap = 10 * max * 2;
    let span = (2 * max + 1) as usize;
    let idx = |v: i64| (v + max) as usize;
    let mut parent: Vec<Option<(i64, usize)>> = vec![None; span];
    let mut depth = vec![u64::MAX; span];
    depth[idx(0)] = 0;
    let mut queue = VecDeque::from([0i64]);
    while let Some(v) = queue.pop_front() {
        if v == 1 {
            break;
        }
        if depth[idx(v)] as i64 >= cap {
            continue;
        }
        for (j, &step) in s.iter().enumerate() {
            // Keep partial sums balanced: go down when positive, up otherwise.
            if (v > 0 && step > 0) || (v <= 0 && step < 0) {
                continue;
            }
            let w = v + step;
            if w.abs() > max || depth[idx(w)] != u64::MAX {
                continue;
            }
            depth[idx(w)] = depth[idx(v)] + 1;
            parent[idx(w)] = Some((v, j));
            queue.push_back(w);
        }
    }
    if depth[idx(1)] == u64::MAX {
        return Err(Error::Unresolved(format!(
            "no representation of 1 by {s:?} with total weight ≤ {cap}"
        )));
    }
    let mut witness = vec![0u64; s.len()];
    let mut v = 1;
    while let Some((prev, j)) = parent[idx(v)] {
        witness[j] += 1;
        v = prev;
    }
    Ok(witness)
}
